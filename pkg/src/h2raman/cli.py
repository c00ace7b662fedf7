"""Command-line interface.

Subcommands: delay-scan, pressure-scan, linearity-scan, fit, spectrum,
calibrate, report.  Outputs are CSV curves plus JSON metadata sidecars in
the output directory; figures are rendered by the separate plotting
package from these files.  Exit code 0 on success; on failure a
machine-readable JSON error is printed to stderr and the exit code is
nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .calibration import calibration_to_dict, save_calibration
from .coherence import power_spectrum
from .config import ExperimentConfig, config_hash, load_config, save_config
from .fitting import ObservedCurve, fit_parameters
from .mbsolver import coupling_parameter
from .scans import (
    build_context,
    persist_delay_scan,
    persist_linearity,
    persist_pressure_scan,
    run_best_case,
    run_delay_scan,
    run_linearity_scan,
    run_pressure_scan,
    time_bin_report,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="YAML experiment config")
    parser.add_argument("--out", type=Path, default=None, help="output directory override")
    parser.add_argument("--jobs", type=int, default=None, help="parallel scan workers")
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="recorded in metadata; reserved for stochastic extensions",
    )


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.out is not None:
        config.output_dir = str(args.out)
    if args.jobs is not None:
        config.jobs = args.jobs
    if args.seed is not None:
        config.seed = args.seed
    return config


def _cmd_delay_scan(args: argparse.Namespace) -> int:
    config = _load(args)
    run = run_delay_scan(config)
    paths = persist_delay_scan(run, config, config.output_dir)
    peaks = ", ".join(f"{f:.2f}" for f, _ in run.spectrum.peaks)
    print(f"write efficiency (alpha applied): {run.eta_w:.4f}")
    print(f"spectrum peaks [cm^-1]: {peaks}")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_pressure_scan(args: argparse.Namespace) -> int:
    config = _load(args)
    run = run_pressure_scan(config)
    paths = persist_pressure_scan(run, config, config.output_dir)
    r = run.result
    i = int(np.nanargmax(r.read_efficiency))
    print(f"storage delay: {run.storage_time * 1e12:.2f} ps")
    print(f"read-efficiency optimum: {r.read_efficiency[i]:.4f} at {r.pressures[i]:.2f} bar")
    for note in r.notes:
        print(f"note: {note}")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_linearity_scan(args: argparse.Namespace) -> int:
    config = _load(args)
    rows = run_linearity_scan(config)
    paths = persist_linearity(rows, config, config.output_dir)
    spread_w = max(r.eta_w for r in rows) - min(r.eta_w for r in rows)
    spread_r = max(r.eta_r for r in rows) - min(r.eta_r for r in rows)
    print(f"{len(rows)} energies; efficiency spreads: d_eta_w={spread_w:.2e} d_eta_r={spread_r:.2e}")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_spectrum(args: argparse.Namespace) -> int:
    config = _load(args)
    scan = io.read_delay_scan_csv(args.scan)
    spectrum = power_spectrum(scan)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_spectrum_csv(out / "spectrum.csv", spectrum)
    io.write_metadata(
        out / "spectrum.json",
        {
            "kind": "power_spectrum",
            "source": str(args.scan),
            "config_hash": config_hash(config),
            "seed": config.seed,
            "peaks": [list(p) for p in spectrum.peaks],
        },
    )
    print(f"peaks [cm^-1]: {', '.join(f'{f:.2f}' for f, _ in spectrum.peaks)}")
    print(f"spectrum_csv: {out / 'spectrum.csv'}")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    config = _load(args)
    x, *ys = io._read_columns(args.data, _fit_columns(args.kind))
    if args.kind == "write_efficiency_vs_pressure":
        curve = ObservedCurve(kind=args.kind, x=x, y=ys[0])
    elif args.kind == "read_efficiency_vs_pressure":
        curve = ObservedCurve(kind=args.kind, x=x, y=ys[1])
    else:
        curve = ObservedCurve(
            kind="delay_scan", x=x * 1e-12, y=ys[0], pressure_bar=args.pressure
        )
    free = [name.strip() for name in args.free.split(",") if name.strip()]
    result = fit_parameters(curve, free, config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "free": result.names,
        "values": result.values,
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "converged": result.converged,
        "covariance": None if result.covariance is None else result.covariance.tolist(),
        "config_hash": config_hash(config),
    }
    io.write_metadata(out / "fit.json", payload)
    print(json.dumps({k: payload[k] for k in ("values", "residual_norm", "converged")}, indent=2))
    print(f"fit_json: {out / 'fit.json'}")
    return 0 if result.converged else 3


def _fit_columns(kind: str) -> list[str]:
    if kind in ("write_efficiency_vs_pressure", "read_efficiency_vs_pressure"):
        return ["pressure_bar", "write_efficiency", "read_efficiency"]
    if kind == "delay_scan":
        return ["delay_ps", "efficiency"]
    raise ValueError(f"unknown fit kind {kind!r}")


def _cmd_calibrate(args: argparse.Namespace) -> int:
    config = _load(args)
    ctx = build_context(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_calibration(ctx.calibration, out / "calibration.json")
    anchor = coupling_parameter(ctx.medium, ctx.write)
    print(json.dumps(calibration_to_dict(ctx.calibration), indent=2, sort_keys=True))
    print(f"coupling G at configured medium: {anchor.G:.3f}")
    print(f"calibration_json: {out / 'calibration.json'}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    config = _load(args)
    report = time_bin_report(config)
    best = run_best_case(config) if args.best_case else None
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "bandwidth_thz": report.bandwidth_thz,
        "storage_1e_ns": report.storage_1e_ns,
        "time_bins": report.bins,
        "config_hash": config_hash(config),
        "seed": config.seed,
    }
    if best is not None:
        payload["best_case"] = {
            "pressure_bar": best.pressure_bar,
            "storage_time_ps": best.storage_time * 1e12,
            "eta_w": best.eta_w,
            "eta_r": best.eta_r,
            "eta_tot": best.eta_tot,
            "eta_tot_mode_matched": best.eta_tot_mode_matched,
        }
    io.write_metadata(out / "report.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_show_config(args: argparse.Namespace) -> int:
    config = _load(args)
    if args.save:
        save_config(config, args.save)
        print(f"config written to {args.save}")
    print(f"config_hash: {config_hash(config)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="h2raman",
        description="THz-bandwidth Raman memory simulator for molecular hydrogen",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("delay-scan", help="read efficiency vs storage delay + spectrum")
    _add_common(p)
    p.set_defaults(func=_cmd_delay_scan)

    p = sub.add_parser("pressure-scan", help="write/read efficiency vs pressure")
    _add_common(p)
    p.set_defaults(func=_cmd_pressure_scan)

    p = sub.add_parser("linearity-scan", help="efficiencies vs signal pulse energy")
    _add_common(p)
    p.set_defaults(func=_cmd_linearity_scan)

    p = sub.add_parser("spectrum", help="power spectrum of an existing delay-scan CSV")
    _add_common(p)
    p.add_argument("--scan", type=Path, required=True, help="delay_scan.csv to transform")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("fit", help="least-squares parameter fit against observed data")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True, help="observed curve CSV")
    p.add_argument(
        "--kind",
        required=True,
        choices=["write_efficiency_vs_pressure", "read_efficiency_vs_pressure", "delay_scan"],
    )
    p.add_argument("--free", required=True, help="comma-separated parameter names")
    p.add_argument("--pressure", type=float, default=None, help="pressure for delay_scan data")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("calibrate", help="solve and persist the calibration closure")
    _add_common(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("report", help="time-bin capacity report")
    _add_common(p)
    p.add_argument("--best-case", action="store_true", help="include best-case efficiency search")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("show-config", help="print the effective config hash")
    _add_common(p)
    p.add_argument("--save", type=Path, default=None, help="write the effective config YAML")
    p.set_defaults(func=_cmd_show_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
