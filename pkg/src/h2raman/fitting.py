"""Least-squares calibration of model parameters against observed curves.

The forward model is the full simulation; free parameters are drawn from
{alpha, g, c_diff, c_coll, waist}.  Fitting the waist only has an effect
when the config pins an explicit interaction length (with the default
auto length of two Rayleigh ranges the waist cancels out of the coupling).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.optimize import least_squares

from .config import ExperimentConfig
from .mbsolver import DephasingModel, pressure_point, read_stage, write_stage
from .scans import RunContext, build_context, make_protocol
from .coherence import init_ensemble
from .mbsolver import medium_state

FREE_PARAMETERS = ("alpha", "g", "c_diff", "c_coll", "waist")

CURVE_KINDS = (
    "write_efficiency_vs_pressure",
    "read_efficiency_vs_pressure",
    "delay_scan",
)


@dataclass(frozen=True)
class ObservedCurve:
    """One observed data set the model must reproduce.

    ``x`` is the scan axis (bar for pressure curves, seconds for delay
    scans); ``pressure_bar`` names the medium pressure for delay scans.
    """

    kind: str
    x: np.ndarray
    y: np.ndarray
    pressure_bar: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}; expected one of {CURVE_KINDS}")
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be matching 1-d arrays")
        if self.kind == "delay_scan" and self.pressure_bar is None:
            raise ValueError("delay_scan curves need pressure_bar")


@dataclass(frozen=True)
class FitResult:
    names: list[str]
    values: dict[str, float]
    residual_norm: float
    covariance: np.ndarray | None
    iterations: int
    converged: bool


_BOUNDS = {
    "alpha": (0.0, 1.0),
    "g": (1e-16, 1e-6),
    "c_diff": (1e3, 1e13),
    "c_coll": (1e3, 1e13),
    "waist": (1e-6, 1e-2),
}


def _apply_overrides(config: ExperimentConfig, values: dict[str, float]) -> RunContext:
    cfg = ExperimentConfig.from_dict(config.to_dict())
    if "alpha" in values:
        cfg.alpha = float(values["alpha"])
    if "waist" in values:
        w_um = float(values["waist"]) * 1e6
        cfg.signal.waist_um = w_um
        cfg.write.waist_um = w_um
        cfg.read.waist_um = w_um
    ctx = build_context(cfg)
    calibration = ctx.calibration
    if "c_diff" in values or "c_coll" in values:
        dephasing = DephasingModel(
            c_diff=float(values.get("c_diff", calibration.dephasing.c_diff)),
            c_coll=float(values.get("c_coll", calibration.dephasing.c_coll)),
        )
        calibration = dataclasses.replace(calibration, dephasing=dephasing)
    if "g" in values:
        calibration = dataclasses.replace(calibration, g_ref=float(values["g"]))
    if calibration is not ctx.calibration:
        # Rates changed, so the medium and ensemble must be rebuilt; the
        # snapped delay depends only on the beat frequencies and stands.
        medium = medium_state(
            cfg.medium.pressure_bar,
            cfg.medium.temperature_k,
            calibration,
            ctx.constants,
            length=cfg.medium.length_m,
            j_max=cfg.medium.j_max,
        )
        ensemble = init_ensemble(medium.populations, ctx.constants, medium.gamma)
        ctx = dataclasses.replace(
            ctx, calibration=calibration, medium=medium, ensemble=ensemble
        )
    return ctx


def _simulate_curve(
    curve: ObservedCurve, ctx: RunContext, config: ExperimentConfig, alpha: float
) -> np.ndarray:
    if curve.kind in ("write_efficiency_vs_pressure", "read_efficiency_vs_pressure"):
        protocol = dataclasses.replace(
            make_protocol(ctx, config, ctx.storage_time), alpha=alpha
        )
        pairs = [pressure_point(float(p), protocol) for p in curve.x]
        col = 0 if curve.kind.startswith("write") else 1
        return np.asarray([pair[col] for pair in pairs])
    # delay scan at a fixed pressure
    medium = medium_state(
        float(curve.pressure_bar),
        config.medium.temperature_k,
        ctx.calibration,
        ctx.constants,
        length=config.medium.length_m,
        j_max=config.medium.j_max,
    )
    ensemble = init_ensemble(medium.populations, ctx.constants, medium.gamma)
    wres = write_stage(ctx.signal, ctx.write, medium, ctx.grid)
    values = [
        read_stage(
            wres.coherence_field, ctx.read, medium, float(t), ctx.grid, ensemble=ensemble
        ).eta_r
        for t in curve.x
    ]
    return np.asarray(values)


def fit_parameters(
    data: ObservedCurve | list[ObservedCurve],
    free: list[str],
    config: ExperimentConfig,
    *,
    initial: dict[str, float] | None = None,
    max_nfev: int = 200,
) -> FitResult:
    """Least-squares fit of the free parameters to the observed curves.

    Parameters are scaled to order unity internally; the jacobian comes
    from finite differences.  On non-convergence the best-so-far values are
    returned with ``converged=False``.
    """
    curves = [data] if isinstance(data, ObservedCurve) else list(data)
    if not curves:
        raise ValueError("need at least one observed curve")
    bad = set(free) - set(FREE_PARAMETERS)
    if bad:
        raise ValueError(f"unknown fit parameters: {sorted(bad)}")
    if not free:
        raise ValueError("need at least one free parameter")

    base_ctx = build_context(config)
    defaults = {
        "alpha": config.alpha,
        "g": base_ctx.calibration.g_ref,
        "c_diff": base_ctx.calibration.dephasing.c_diff,
        "c_coll": base_ctx.calibration.dephasing.c_coll,
        "waist": base_ctx.write.waist,
    }
    if initial:
        defaults.update(initial)
    x0 = np.asarray([defaults[name] for name in free])
    scale = np.where(np.abs(x0) > 0, np.abs(x0), 1.0)

    def residual(x_scaled: np.ndarray) -> np.ndarray:
        values = {name: v * s for name, v, s in zip(free, x_scaled, scale)}
        ctx = _apply_overrides(config, values)
        alpha = values.get("alpha", config.alpha)
        parts = [
            _simulate_curve(curve, ctx, config, alpha) - curve.y for curve in curves
        ]
        return np.concatenate(parts)

    lower = np.asarray([_BOUNDS[name][0] for name in free]) / scale
    upper = np.asarray([_BOUNDS[name][1] for name in free]) / scale
    result = least_squares(
        residual,
        x0 / scale,
        bounds=(lower, upper),
        diff_step=1e-4,
        max_nfev=max_nfev,
    )

    values = {name: float(v * s) for name, v, s in zip(free, result.x, scale)}
    n_res, n_par = result.fun.size, len(free)
    covariance = None
    if result.jac is not None and n_res > n_par:
        jac = result.jac / scale  # back to physical units
        try:
            jtj_inv = np.linalg.pinv(jac.T @ jac)
            sigma2 = 2.0 * result.cost / (n_res - n_par)
            covariance = sigma2 * jtj_inv
        except np.linalg.LinAlgError:
            covariance = None
    return FitResult(
        names=list(free),
        values=values,
        residual_norm=float(np.sqrt(2.0 * result.cost)),
        covariance=covariance,
        iterations=int(result.nfev),
        converged=bool(result.status > 0),
    )
