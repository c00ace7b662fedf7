"""One-dimensional linearized Maxwell-Bloch solver for Raman storage/retrieval.

In the frame co-moving with the pulses (local time tau = t - z/v_g) the
signal envelope a and the vibrational coherence B obey the linear pair

    write:  da/dz = -C h(tau) B        dB/dtau = +C h(tau) a - Gamma B
    read:   da/dz = +C h(tau) B        dB/dtau = -C h(tau) a - Gamma B

where h is the control-pulse amplitude envelope (peak 1) and the coupling
constant C = sqrt(G / (2 L tau_p)) is normalized so the dimensionless
parameter G = g I z Gamma tau (steady-state Raman coefficient g, peak
control intensity I, interaction length z, coherence decay rate Gamma,
control duration tau) governs the efficiency.  With this scaling the
photon bookkeeping is matched: for Gamma = 0 the input signal energy
equals transmitted energy plus the stored excitation integral |B|^2 dz.

The numerical scheme is a second-order predictor-corrector march in z; at
each z the coherence equation is an ODE in tau solved by an
integrating-factor trapezoid, vectorized along the time grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.constants as spc

from . import coherence as coh
from .spectroscopy import PopulationTable, SpectroscopicConstants, boltzmann_populations

GAUSSIAN_PEAK_POWER = 2.0 * np.sqrt(np.log(2.0) / np.pi)  # E/tau -> peak power
SECH2_HALF_WIDTH = 2.0 * np.arccosh(np.sqrt(2.0))  # intensity-FWHM scale factor
MIN_NZ = 64
MIN_POINTS_PER_FWHM = 16


class GridError(ValueError):
    """The requested grid cannot resolve the pulses or the medium."""


class SolverError(RuntimeError):
    """The integration produced non-finite fields."""


@dataclass(frozen=True)
class DephasingModel:
    """Dicke-narrowing pressure dependence Gamma(p) = c_diff/p + c_coll*p.

    The diffusion term dominates at low pressure, collisions at high
    pressure; the lifetime-maximizing pressure is sqrt(c_diff/c_coll).
    """

    c_diff: float  # s^-1 bar
    c_coll: float  # s^-1 / bar

    def __post_init__(self) -> None:
        if self.c_diff <= 0 or self.c_coll <= 0:
            raise ValueError("dephasing coefficients must be positive")

    def gamma(self, pressure_bar: float) -> float:
        if pressure_bar <= 0:
            raise ValueError("pressure must be positive")
        return self.c_diff / pressure_bar + self.c_coll * pressure_bar

    @property
    def optimal_pressure(self) -> float:
        return float(np.sqrt(self.c_diff / self.c_coll))


def gamma_of_pressure(pressure_bar: float, model: DephasingModel) -> float:
    """Collisional coherence decay rate Gamma(p) in s^-1."""
    return model.gamma(pressure_bar)


@dataclass(frozen=True)
class CalibrationSet:
    """Medium calibration anchoring the Raman coupling to reference conditions.

    ``g_ref`` is the steady-state Raman absorption coefficient (m/W) at
    (p_ref_bar, t_ref_k); at other densities g scales so that g*Gamma stays
    proportional to number density.  ``interaction_length`` is the effective
    one-dimensional interaction length standing in for the focal region.
    """

    g_ref: float
    p_ref_bar: float
    t_ref_k: float
    dephasing: DephasingModel
    interaction_length: float

    def __post_init__(self) -> None:
        if self.g_ref <= 0 or self.interaction_length <= 0:
            raise ValueError("g_ref and interaction_length must be positive")


@dataclass(frozen=True)
class PulseSpec:
    """A pulse: wavelength (nm), intensity-FWHM duration (s), energy (J),
    effective 1/e^2 waist radius (m), and envelope shape."""

    wavelength_nm: float
    duration: float
    energy: float
    waist: float
    envelope_shape: str = "gaussian"

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.energy < 0:
            raise ValueError("energy must be non-negative")
        if self.waist <= 0:
            raise ValueError("waist must be positive")
        if self.envelope_shape not in ("gaussian", "sech2"):
            raise ValueError(f"unknown envelope shape {self.envelope_shape!r}")

    def amplitude_envelope(self, tau: np.ndarray) -> np.ndarray:
        """Peak-1 amplitude envelope; |h|^2 has FWHM equal to ``duration``."""
        x = np.asarray(tau, dtype=float) / self.duration
        if self.envelope_shape == "gaussian":
            return np.exp(-2.0 * np.log(2.0) * x**2)
        return 1.0 / np.cosh(SECH2_HALF_WIDTH * x)

    def peak_power(self) -> float:
        if self.envelope_shape == "gaussian":
            return GAUSSIAN_PEAK_POWER * self.energy / self.duration
        return (SECH2_HALF_WIDTH / 2.0) * self.energy / self.duration

    def peak_intensity(self) -> float:
        """On-axis peak intensity (W/m^2) of a Gaussian beam of this waist."""
        return 2.0 * self.peak_power() / (np.pi * self.waist**2)

    def rayleigh_range(self) -> float:
        return np.pi * self.waist**2 / (self.wavelength_nm * 1e-9)


@dataclass(frozen=True)
class MediumState:
    """Hydrogen gas at one pressure/temperature with derived coupling constants."""

    pressure: float  # bar
    temperature: float  # K
    number_density: float  # m^-3
    g: float  # m/W
    gamma: float  # s^-1
    length: float  # m
    populations: PopulationTable


def medium_state(
    pressure_bar: float,
    temperature_k: float,
    calibration: CalibrationSet,
    constants: SpectroscopicConstants,
    *,
    length: float | None = None,
    j_max: int = 7,
) -> MediumState:
    """Build a MediumState with g scaled so g*Gamma tracks number density."""
    if pressure_bar <= 0 or temperature_k <= 0:
        raise ValueError("pressure and temperature must be positive")
    n = pressure_bar * 1e5 / (spc.Boltzmann * temperature_k)
    n_ref = calibration.p_ref_bar * 1e5 / (spc.Boltzmann * calibration.t_ref_k)
    gamma_ref = calibration.dephasing.gamma(calibration.p_ref_bar)
    gamma = calibration.dephasing.gamma(pressure_bar)
    g = calibration.g_ref * (n / n_ref) * (gamma_ref / gamma)
    return MediumState(
        pressure=pressure_bar,
        temperature=temperature_k,
        number_density=n,
        g=g,
        gamma=gamma,
        length=calibration.interaction_length if length is None else length,
        populations=boltzmann_populations(constants, temperature_k, j_max),
    )


@dataclass(frozen=True)
class CouplingParameter:
    """Dimensionless coupling G = g * I * z * Gamma * tau and its factors."""

    g: float
    intensity: float
    length: float
    gamma: float
    tau: float

    @property
    def G(self) -> float:
        return self.g * self.intensity * self.length * self.gamma * self.tau


def coupling_parameter(medium: MediumState, control: PulseSpec) -> CouplingParameter:
    """Coupling parameter for a control pulse in the given medium."""
    return CouplingParameter(
        g=medium.g,
        intensity=control.peak_intensity(),
        length=medium.length,
        gamma=medium.gamma,
        tau=control.duration,
    )


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (z, tau) solver grid: nz points over the medium length,
    nt points over the local-time window [t_min, t_max] (seconds)."""

    nz: int = 96
    nt: int = 256
    t_min: float = -0.35e-12
    t_max: float = 0.35e-12

    def __post_init__(self) -> None:
        if self.nz < 2 or self.nt < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if self.t_max <= self.t_min:
            raise ValueError("t_max must exceed t_min")

    @property
    def tau(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.nt)

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.nt - 1)

    def refine(self, factor: int) -> "GridSpec":
        """Grid with both step sizes divided by ``factor`` (same window)."""
        return GridSpec(
            nz=(self.nz - 1) * factor + 1,
            nt=(self.nt - 1) * factor + 1,
            t_min=self.t_min,
            t_max=self.t_max,
        )


@dataclass(frozen=True)
class StageResult:
    """Fields and efficiency of one write or read stage.

    ``signal_out`` is the complex envelope at the cell exit on the tau grid;
    ``coherence_field`` is B(z) after the pulse (photon-matched units, so
    the integral of |B|^2 dz counts stored excitation in signal-energy
    units).  ``efficiency`` is eta_w = 1 - E_out/E_in for a write stage and
    eta_r = E_out/E_stored for a read stage.
    """

    kind: str
    tau: np.ndarray
    z: np.ndarray
    signal_out: np.ndarray
    coherence_field: np.ndarray
    efficiency: float
    input_energy: float
    output_energy: float
    stored_excitation: float
    grid: GridSpec

    @property
    def eta_w(self) -> float:
        if self.kind != "write":
            raise ValueError("eta_w is only defined for write stages")
        return self.efficiency

    @property
    def eta_r(self) -> float:
        if self.kind != "read":
            raise ValueError("eta_r is only defined for read stages")
        return self.efficiency


def _validate_grid(grid: GridSpec, durations: list[float]) -> None:
    problems = []
    if grid.nz < MIN_NZ:
        problems.append(f"nz={grid.nz} < {MIN_NZ}")
    for tau_p in durations:
        pts = tau_p / grid.dt
        if pts < MIN_POINTS_PER_FWHM:
            problems.append(
                f"dt={grid.dt:.3e}s gives {pts:.1f} points per {tau_p:.3e}s FWHM"
                f" (need >= {MIN_POINTS_PER_FWHM})"
            )
    if problems:
        raise GridError("unresolved grid: " + "; ".join(problems))


def _coherence_row(
    a: np.ndarray, b0: complex | np.ndarray, drive: np.ndarray, coupling: float,
    up: np.ndarray, dt: float, sign: float,
) -> np.ndarray:
    """Solve dB/dtau = sign*coupling*drive*a - gamma*B along the tau grid.

    Integrating-factor trapezoid in the scaled variable S = B e^{gamma tau},
    vectorized along tau (and any leading batch axes of ``a``): exact for
    the decay part, second order in the source.  ``up`` is the precomputed
    e^{gamma (tau - tau_0)} factor.
    """
    r = (sign * coupling) * drive * a
    s = np.empty(r.shape, dtype=complex)
    ru = r * up
    np.cumsum(0.5 * dt * (ru[..., :-1] + ru[..., 1:]), axis=-1, out=s[..., 1:])
    s[..., 0] = 0.0
    s += np.asarray(b0)[..., np.newaxis] if np.ndim(b0) else b0
    return s / up


def _march(
    a_in: np.ndarray,
    b_init: np.ndarray,
    drive: np.ndarray,
    z: np.ndarray,
    dt: float,
    coupling: float,
    gamma: float,
    sign: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Heun march in z; returns (signal at z=L, B(z) at the window end).

    ``a_in`` may carry leading batch axes (shape (..., nt)) with matching
    ``b_init`` of shape (..., nz); the batch entries integrate independently.
    """
    nz = z.size
    nt = drive.size
    dz = z[1] - z[0]
    expo = gamma * dt * (nt - 1)
    if expo > 700.0:
        raise SolverError("gamma * time-window too large for the scaled update")
    up = np.exp(gamma * dt * np.arange(nt))
    a = a_in.astype(complex)
    b_last = np.empty(a.shape[:-1] + (nz,), dtype=complex)
    for i in range(nz - 1):
        b_i = _coherence_row(a, b_init[..., i], drive, coupling, up, dt, sign)
        b_last[..., i] = b_i[..., -1]
        a_pred = a - (sign * dz * coupling) * drive * b_i
        b_pred = _coherence_row(a_pred, b_init[..., i + 1], drive, coupling, up, dt, sign)
        a = a - (sign * dz * coupling * 0.5) * drive * (b_i + b_pred)
    b_last[..., -1] = _coherence_row(a, b_init[..., -1], drive, coupling, up, dt, sign)[..., -1]
    return a, b_last


def _signal_envelope(signal: PulseSpec | np.ndarray, tau: np.ndarray, center: float) -> np.ndarray:
    if isinstance(signal, PulseSpec):
        h = signal.amplitude_envelope(tau - center)
        return np.sqrt(signal.peak_power()) * h.astype(complex)
    arr = np.asarray(signal, dtype=complex)
    if arr.shape != tau.shape:
        raise ValueError("signal envelope must match the tau grid")
    return arr


def _check_finite(kind: str, grid: GridSpec, *arrays: np.ndarray) -> None:
    if any(not np.all(np.isfinite(np.abs(arr))) for arr in arrays):
        raise SolverError(
            f"{kind} stage produced non-finite fields on grid "
            f"nz={grid.nz} nt={grid.nt} window=({grid.t_min:.3e},{grid.t_max:.3e})s"
        )


def write_stage(
    signal_in: PulseSpec | np.ndarray,
    write: PulseSpec,
    medium: MediumState,
    grid: GridSpec,
    *,
    signal_center: float = 0.0,
    write_center: float = 0.0,
    decay_gamma: float | None = None,
) -> StageResult:
    """Raman absorption of the signal by the write pulse.

    ``signal_in`` is either a PulseSpec (envelope built on the grid, overlap
    set by ``signal_center``) or a complex envelope array on ``grid.tau``.
    Returns the transmitted signal, the deposited coherence B(z), and
    eta_w = 1 - E_out/E_in.

    ``decay_gamma`` overrides the in-window coherence decay only; the
    coupling G keeps the medium's density-proportional g*Gamma product, so
    ``decay_gamma=0`` is the dephasing-free transient limit, not a switched-
    off interaction.
    """
    durations = [write.duration]
    if isinstance(signal_in, PulseSpec):
        durations.append(signal_in.duration)
    _validate_grid(grid, durations)

    tau = grid.tau
    z = np.linspace(0.0, medium.length, grid.nz)
    a0 = _signal_envelope(signal_in, tau, signal_center)
    drive = write.amplitude_envelope(tau - write_center)
    G = coupling_parameter(medium, write).G
    c = np.sqrt(G / (2.0 * medium.length * write.duration))
    gamma = medium.gamma if decay_gamma is None else decay_gamma

    b_init = np.zeros(grid.nz, dtype=complex)
    a_out, b_field = _march(a0, b_init, drive, z, grid.dt, c, gamma, +1.0)
    _check_finite("write", grid, a_out, b_field)

    e_in = float(np.trapezoid(np.abs(a0) ** 2, tau))
    e_out = float(np.trapezoid(np.abs(a_out) ** 2, tau))
    stored = float(np.trapezoid(np.abs(b_field) ** 2, z))
    eta = 0.0 if e_in == 0.0 else min(max(1.0 - e_out / e_in, 0.0), 1.0)
    return StageResult(
        kind="write",
        tau=tau,
        z=z,
        signal_out=a_out,
        coherence_field=b_field,
        efficiency=eta,
        input_energy=e_in,
        output_energy=e_out,
        stored_excitation=stored,
        grid=grid,
    )


def read_stage(
    coherence_in: np.ndarray,
    read: PulseSpec,
    medium: MediumState,
    storage_time: float,
    grid: GridSpec,
    *,
    ensemble: coh.CoherenceEnsemble | None = None,
    constants: SpectroscopicConstants | None = None,
    read_center: float = 0.0,
    decay_gamma: float | None = None,
) -> StageResult:
    """Anti-Stokes retrieval of a stored coherence after ``storage_time``.

    The multi-J rephasing and collisional decay over the storage interval
    multiply B(z) by a complex factor before the retrieval integration; the
    factor comes from ``ensemble`` when given, from an ensemble built on the
    medium populations when ``constants`` is given, and reduces to plain
    e^{-Gamma t} decay otherwise.  eta_r = E_emitted / E_stored, referenced
    to the stored excitation at the end of the write (before storage decay),
    so the delay dependence lives in eta_r.  ``decay_gamma`` overrides the
    in-window and storage decay without touching the coupling.
    """
    if storage_time < 0:
        raise ValueError("storage_time must be non-negative")
    _validate_grid(grid, [read.duration])
    b_in = np.asarray(coherence_in, dtype=complex)
    tau = grid.tau
    z = np.linspace(0.0, medium.length, grid.nz)
    if b_in.shape != z.shape:
        raise ValueError("coherence_in must be sampled on the nz spatial grid")
    stored0 = float(np.trapezoid(np.abs(b_in) ** 2, z))
    gamma = medium.gamma if decay_gamma is None else decay_gamma

    if ensemble is None and constants is not None:
        ensemble = coh.init_ensemble(medium.populations, constants, gamma)
    if ensemble is not None:
        factor = coh.storage_factor(ensemble, storage_time)
    else:
        factor = np.exp(-gamma * storage_time)
    b_start = b_in * factor

    drive = read.amplitude_envelope(tau - read_center)
    G = coupling_parameter(medium, read).G
    c = np.sqrt(G / (2.0 * medium.length * read.duration))
    a0 = np.zeros(grid.nt, dtype=complex)
    a_out, b_field = _march(a0, b_start, drive, z, grid.dt, c, gamma, -1.0)
    _check_finite("read", grid, a_out, b_field)

    e_out = float(np.trapezoid(np.abs(a_out) ** 2, tau))
    eta = 0.0 if stored0 == 0.0 else min(max(e_out / stored0, 0.0), 1.0)
    return StageResult(
        kind="read",
        tau=tau,
        z=z,
        signal_out=a_out,
        coherence_field=b_field,
        efficiency=eta,
        input_energy=stored0,
        output_energy=e_out,
        stored_excitation=float(np.trapezoid(np.abs(b_field) ** 2, z)),
        grid=grid,
    )


def read_stage_batch(
    coherence_in: np.ndarray,
    read: PulseSpec,
    medium: MediumState,
    storage_times: np.ndarray,
    grid: GridSpec,
    *,
    ensemble: coh.CoherenceEnsemble | None = None,
    read_center: float = 0.0,
    decay_gamma: float | None = None,
) -> np.ndarray:
    """eta_r for many storage times in one integration.

    Each storage time multiplies the same stored B(z) by its own complex
    evolution factor; the resulting batch of initial conditions marches
    through the retrieval equations together (the equations are identical,
    only the initial coherence differs).  Point-for-point this matches
    :func:`read_stage` to machine precision.
    """
    storage_times = np.asarray(storage_times, dtype=float)
    if storage_times.ndim != 1:
        raise ValueError("storage_times must be one-dimensional")
    if np.any(storage_times < 0):
        raise ValueError("storage times must be non-negative")
    _validate_grid(grid, [read.duration])
    b_in = np.asarray(coherence_in, dtype=complex)
    tau = grid.tau
    z = np.linspace(0.0, medium.length, grid.nz)
    if b_in.shape != z.shape:
        raise ValueError("coherence_in must be sampled on the nz spatial grid")
    stored0 = float(np.trapezoid(np.abs(b_in) ** 2, z))
    if stored0 == 0.0:
        return np.zeros(storage_times.shape)
    gamma = medium.gamma if decay_gamma is None else decay_gamma

    if ensemble is not None:
        factors = np.asarray([coh.storage_factor(ensemble, t) for t in storage_times])
    else:
        factors = np.exp(-gamma * storage_times).astype(complex)
    b_start = factors[:, np.newaxis] * b_in[np.newaxis, :]

    drive = read.amplitude_envelope(tau - read_center)
    G = coupling_parameter(medium, read).G
    c = np.sqrt(G / (2.0 * medium.length * read.duration))
    a0 = np.zeros((storage_times.size, grid.nt), dtype=complex)
    a_out, b_field = _march(a0, b_start, drive, z, grid.dt, c, gamma, -1.0)
    _check_finite("read", grid, a_out, b_field)
    e_out = np.trapezoid(np.abs(a_out) ** 2, tau, axis=-1)
    return np.clip(e_out / stored0, 0.0, 1.0)


def total_efficiency(write_result: StageResult, read_result: StageResult) -> float:
    """eta_tot = eta_w * eta_r for a consistent write/read pair."""
    return write_result.eta_w * read_result.eta_r


@dataclass(frozen=True)
class ScanProtocol:
    """Everything needed to run write+read at one pressure."""

    signal: PulseSpec
    write: PulseSpec
    read: PulseSpec
    temperature: float
    constants: SpectroscopicConstants
    calibration: CalibrationSet
    grid: GridSpec
    storage_time: float
    alpha: float = 1.0
    j_max: int = 7
    decay_gamma: float | None = None  # None -> Gamma(p) per point

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class PressureScanResult:
    """Paired efficiency curves over pressure; NaN marks failed points."""

    pressures: np.ndarray
    write_efficiency: np.ndarray
    read_efficiency: np.ndarray
    notes: list[str]


def pressure_point(pressure_bar: float, protocol: ScanProtocol) -> tuple[float, float]:
    """(eta_w, eta_r) at one pressure; alpha multiplies the write efficiency only."""
    medium = medium_state(
        pressure_bar,
        protocol.temperature,
        protocol.calibration,
        protocol.constants,
        j_max=protocol.j_max,
    )
    gamma = medium.gamma if protocol.decay_gamma is None else protocol.decay_gamma
    wres = write_stage(
        protocol.signal, protocol.write, medium, protocol.grid, decay_gamma=gamma
    )
    ensemble = coh.init_ensemble(medium.populations, protocol.constants, gamma)
    rres = read_stage(
        wres.coherence_field,
        protocol.read,
        medium,
        protocol.storage_time,
        protocol.grid,
        ensemble=ensemble,
        decay_gamma=gamma,
    )
    return protocol.alpha * wres.eta_w, rres.eta_r


def pressure_scan(
    pressures: np.ndarray | list[float], protocol: ScanProtocol
) -> PressureScanResult:
    """eta_w(p) and eta_r(p) curves; failures are recorded and skipped."""
    pressures = np.asarray(pressures, dtype=float)
    if pressures.size and (pressures.min() < 0.5 or pressures.max() > 20.0):
        raise ValueError("pressures must lie within [0.5, 20] bar")
    eta_w = np.full(pressures.shape, np.nan)
    eta_r = np.full(pressures.shape, np.nan)
    notes: list[str] = []
    for i, p in enumerate(pressures):
        try:
            eta_w[i], eta_r[i] = pressure_point(float(p), protocol)
        except (SolverError, ValueError) as exc:
            notes.append(f"p={p:g} bar: {exc}")
    return PressureScanResult(
        pressures=pressures,
        write_efficiency=eta_w,
        read_efficiency=eta_r,
        notes=notes,
    )
