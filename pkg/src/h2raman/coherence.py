"""Multi-J vibrational coherence ensembles and delay-scan analysis.

After the write pulse, each Q01(J) coherence evolves freely at its own
transition frequency and all channels share one collisional decay rate.
The slightly different frequencies periodically rephase, which modulates
the retrieved signal as a function of readout delay; the beat structure
shows up as peaks in the power spectrum of a delay scan.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import find_peaks

from .spectroscopy import C_CM_S, PopulationTable, SpectroscopicConstants, _q01

MAX_DELAY_S = 2e-9
MIN_SPECTRUM_POINTS = 256
MIN_SPECTRUM_SPAN_S = 20e-12

# Extended-precision 2*pi for phase reduction: the absolute phase w*dt of a
# ~125 THz oscillation over a ns reaches ~1e6 rad, where float64 rounding
# alone costs ~1e-10 rad.  Reducing modulo 2*pi in longdouble keeps the
# evolve group-action property at the 1e-12 level.
_TWO_PI = np.longdouble("6.28318530717958647692528676655900577")


@dataclass(frozen=True)
class CoherenceEnsemble:
    """Complex coherence amplitude per J channel with shared decay rate.

    ``frequencies`` are angular (rad/s); ``gamma`` is the amplitude decay
    rate (s^-1); ``t0`` is the epoch the amplitudes refer to.
    """

    amplitudes: dict[int, complex]
    frequencies: dict[int, float]
    gamma: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        if set(self.amplitudes) != set(self.frequencies):
            raise ValueError("amplitudes and frequencies must share the same J keys")
        if not self.amplitudes:
            raise ValueError("ensemble must have at least one J channel")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @property
    def excitation(self) -> float:
        """Sum of |amplitude|^2 over channels."""
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))


@dataclass(frozen=True)
class DelayScan:
    """Efficiency sampled on a uniform grid of readout delays."""

    delays: np.ndarray
    values: np.ndarray
    kind: str = "read_efficiency"

    def __post_init__(self) -> None:
        delays = np.asarray(self.delays, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "values", values)
        if delays.ndim != 1 or delays.size < 2:
            raise ValueError("delays must be a 1-d grid with at least 2 points")
        if delays.shape != values.shape:
            raise ValueError("delays and values must have matching shapes")
        _require_uniform(delays)
        if np.nanmin(values) < -1e-12 or np.nanmax(values) > 1 + 1e-12:
            raise ValueError("efficiencies must lie in [0, 1]")
        if self.kind not in ("read_efficiency", "write_efficiency"):
            raise ValueError(f"unknown scan kind {self.kind!r}")

    @property
    def dt(self) -> float:
        return float(self.delays[1] - self.delays[0])

    @property
    def span(self) -> float:
        return float(self.delays[-1] - self.delays[0])


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided power spectrum of a delay scan, frequencies in cm^-1."""

    frequencies: np.ndarray
    power: np.ndarray
    peaks: list[tuple[float, float]]


@dataclass(frozen=True)
class RephasingMaxima:
    """Times of the largest local maxima of a scan, ascending in time.

    ``complete`` is False when fewer maxima exist than were requested.
    """

    times: list[float]
    requested: int
    complete: bool


def _require_uniform(grid: np.ndarray, rel_tol: float = 1e-6) -> None:
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise ValueError("grid must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > rel_tol * steps[0]:
        raise ValueError("grid must be uniformly spaced")


def init_ensemble(
    populations: PopulationTable,
    constants: SpectroscopicConstants,
    gamma: float,
) -> CoherenceEnsemble:
    """Build the post-write ensemble from thermal populations.

    Within the pulse bandwidth the two-photon coupling is flat, so each
    channel's amplitude is proportional to its population fraction; all
    channels start in phase at t0 = 0.
    """
    if not populations.fractions:
        raise ValueError("population table is empty")
    amplitudes = {J: complex(f) for J, f in populations.fractions.items()}
    frequencies = {
        J: 2.0 * np.pi * C_CM_S * _q01(constants, J) for J in populations.fractions
    }
    return CoherenceEnsemble(amplitudes=amplitudes, frequencies=frequencies, gamma=gamma)


def _reduced_phase(omega: float, dt: float) -> float:
    return float(np.mod(np.longdouble(omega) * np.longdouble(dt), _TWO_PI))


def evolve(ensemble: CoherenceEnsemble, dt: float) -> CoherenceEnsemble:
    """Free evolution for a duration dt: phase e^{-i w_J dt}, decay e^{-gamma dt}."""
    if dt < 0:
        raise ValueError("no backward evolution: dt must be non-negative")
    amplitudes = {
        J: a
        * np.exp(-1j * _reduced_phase(ensemble.frequencies[J], dt))
        * np.exp(-ensemble.gamma * dt)
        for J, a in ensemble.amplitudes.items()
    }
    return replace(ensemble, amplitudes=amplitudes, t0=ensemble.t0 + dt)


def retrieved_amplitude(
    ensemble: CoherenceEnsemble, t: float | np.ndarray, weights: dict[int, float] | None = None
) -> complex | np.ndarray:
    """Interference sum S(t) = sum_J w_J a_J e^{-i w_J t} (no decay factor).

    ``t`` is measured from the ensemble's epoch; readout weights default to 1
    for every channel (flat coupling across the pulse bandwidth).
    """
    t = np.asarray(t, dtype=float)
    total = np.zeros(t.shape, dtype=complex)
    for J, a in ensemble.amplitudes.items():
        w = 1.0 if weights is None else weights.get(J, 0.0)
        total += w * a * np.exp(-1j * ensemble.frequencies[J] * t)
    return complex(total[()]) if total.ndim == 0 else total


def storage_factor(ensemble: CoherenceEnsemble, t: float) -> complex:
    """Complex factor applied to a stored coherence after a delay t.

    Normalized to 1 at t=0; its squared magnitude is the rephasing/decay
    modulation of the read efficiency.
    """
    s0 = retrieved_amplitude(ensemble, 0.0)
    return retrieved_amplitude(ensemble, t) * np.exp(-ensemble.gamma * t) / s0


def retrieval_envelope(
    ensemble: CoherenceEnsemble,
    delays: np.ndarray,
    eta_r0: float = 1.0,
) -> DelayScan:
    """Read efficiency versus readout delay.

    value(t) = eta_r0 |S(t)|^2 / |S(0)|^2 e^{-2 gamma t}: the interference of
    the J channels normalized to the in-phase value, times the calibrated
    zero-delay read efficiency, decaying at twice the amplitude rate.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.size and (delays[0] < 0 or delays[-1] > MAX_DELAY_S):
        raise ValueError(f"delays must lie within [0, {MAX_DELAY_S}] s")
    if not 0.0 <= eta_r0 <= 1.0:
        raise ValueError("eta_r0 must lie in [0, 1]")
    s = np.abs(retrieved_amplitude(ensemble, delays)) ** 2
    s0 = abs(retrieved_amplitude(ensemble, 0.0)) ** 2
    values = eta_r0 * s / s0 * np.exp(-2.0 * ensemble.gamma * delays)
    return DelayScan(delays=delays, values=values, kind="read_efficiency")


def power_spectrum(
    scan: DelayScan,
    *,
    window: str = "hann",
    pad_factor: int = 16,
    prominence: float = 0.01,
    min_frequency_cm1: float | None = None,
) -> PowerSpectrum:
    """DFT power spectrum of a mean-subtracted delay scan, in cm^-1.

    A raised-cosine window (default) suppresses leakage from the decaying
    envelope; zero padding by ``pad_factor`` plus parabolic refinement
    locates peaks well below the native grid resolution.  Peaks are local
    maxima whose prominence exceeds ``prominence`` times the maximum power;
    below ``min_frequency_cm1`` (default: three resolution bins) they are
    discarded as envelope leakage.
    """
    if scan.delays.size < MIN_SPECTRUM_POINTS:
        raise ValueError(f"need >= {MIN_SPECTRUM_POINTS} scan points")
    if scan.span < MIN_SPECTRUM_SPAN_S:
        raise ValueError(f"scan must span >= {MIN_SPECTRUM_SPAN_S} s")
    values = scan.values - scan.values.mean()
    n = values.size
    if window == "hann":
        values = values * np.hanning(n)
    elif window != "none":
        raise ValueError(f"unknown window {window!r}")
    nfft = int(pad_factor) * n
    amp = np.fft.rfft(values, n=nfft)
    power = np.abs(amp) ** 2
    freqs = np.fft.rfftfreq(nfft, scan.dt) / C_CM_S

    resolution = 1.0 / (C_CM_S * scan.span)
    floor = 3.0 * resolution if min_frequency_cm1 is None else min_frequency_cm1
    idx, _ = find_peaks(power, prominence=prominence * power.max())
    peaks: list[tuple[float, float]] = []
    df = freqs[1] - freqs[0]
    for i in idx:
        if freqs[i] < floor:
            continue
        if 0 < i < power.size - 1:
            y0, y1, y2 = power[i - 1], power[i], power[i + 1]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            peaks.append((float(freqs[i] + shift * df), float(y1)))
        else:
            peaks.append((float(freqs[i]), float(power[i])))
    return PowerSpectrum(frequencies=freqs, power=power, peaks=peaks)


def find_rephasing_maxima(scan: DelayScan, count: int) -> RephasingMaxima:
    """The ``count`` largest local maxima of the scan, ascending in time.

    The leading sample counts as a maximum when the scan starts by falling
    (a monotone-decay scan has its only maximum at t=0).  When fewer maxima
    exist than requested, all found are returned with ``complete=False``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if scan.span < count * 6e-12:
        raise ValueError("scan too short: need at least count * 6 ps of span")
    v = scan.values
    idx, _ = find_peaks(v)
    candidates = list(idx)
    if v.size >= 2 and v[0] > v[1]:
        candidates.insert(0, 0)
    if not candidates:
        return RephasingMaxima(times=[], requested=count, complete=False)
    ranked = sorted(candidates, key=lambda i: -v[i])[:count]
    times = sorted(float(scan.delays[i]) for i in ranked)
    return RephasingMaxima(times=times, requested=count, complete=len(ranked) == count)


def snap_to_rephasing_maximum(
    ensemble: CoherenceEnsemble,
    nominal: float,
    window: float = 2.5e-12,
    resolution: float = 5e-15,
) -> float:
    """Nearest rephasing maximum to a nominal delay, within +/- window.

    Scans the decay-free interference factor |S(t)|^2 on a fine grid around
    the nominal delay and returns the time of its largest local maximum.
    Falls back to the nominal delay when no interior maximum exists (single
    channel, for example).
    """
    t0 = max(nominal - window, 0.0)
    grid = np.arange(t0, nominal + window, resolution)
    mod = np.abs(retrieved_amplitude(ensemble, grid)) ** 2
    idx, _ = find_peaks(mod)
    if idx.size == 0:
        return float(nominal)
    best = idx[np.argmax(mod[idx])]
    return float(grid[best])
