"""CSV and JSON-sidecar persistence for scan results.

All outputs are plain text: delimited data plus a JSON metadata sidecar,
written deterministically (shortest round-trip float formatting, sorted
JSON keys, no timestamps) so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .coherence import DelayScan, PowerSpectrum
from .mbsolver import PressureScanResult, StageResult


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_rows(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_metadata(path: str | Path, meta: dict) -> None:
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_metadata(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_delay_scan_csv(path: str | Path, scan: DelayScan) -> None:
    _write_rows(Path(path), ["delay_ps", "efficiency"], [scan.delays * 1e12, scan.values])


def read_delay_scan_csv(path: str | Path, kind: str = "read_efficiency") -> DelayScan:
    delays, values = _read_columns(path, ["delay_ps", "efficiency"])
    return DelayScan(delays=delays * 1e-12, values=values, kind=kind)


def write_spectrum_csv(path: str | Path, spectrum: PowerSpectrum) -> None:
    _write_rows(Path(path), ["wavenumber_cm1", "power"], [spectrum.frequencies, spectrum.power])


def read_spectrum_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    return _read_columns(path, ["wavenumber_cm1", "power"])


def write_pressure_scan_csv(path: str | Path, result: PressureScanResult) -> None:
    _write_rows(
        Path(path),
        ["pressure_bar", "write_efficiency", "read_efficiency"],
        [result.pressures, result.write_efficiency, result.read_efficiency],
    )


def read_pressure_scan_csv(path: str | Path) -> PressureScanResult:
    p, ew, er = _read_columns(path, ["pressure_bar", "write_efficiency", "read_efficiency"])
    return PressureScanResult(pressures=p, write_efficiency=ew, read_efficiency=er, notes=[])


def write_linearity_csv(
    path: str | Path, energies_nj: np.ndarray, eta_w: np.ndarray, eta_r: np.ndarray
) -> None:
    _write_rows(
        Path(path),
        ["signal_energy_nj", "write_efficiency", "read_efficiency"],
        [energies_nj, eta_w, eta_r],
    )


def write_envelope_csv(path: str | Path, result: StageResult) -> None:
    """Signal envelope at the cell exit: local time (fs), re, im."""
    _write_rows(
        Path(path),
        ["tau_fs", "re", "im"],
        [result.tau * 1e15, result.signal_out.real, result.signal_out.imag],
    )


def _read_columns(path: str | Path, expected: list[str]) -> tuple[np.ndarray, ...]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        if header != expected:
            raise ValueError(f"{path}: expected columns {expected}, found {header}")
        rows = []
        for i, row in enumerate(reader):
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}: row {i + 2}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows)
    return tuple(data[:, j] for j in range(len(expected)))
