"""Experiment configuration: a YAML-serializable tree with explicit units.

Every physical key carries its unit in the name (pressure_bar,
duration_fs, ...); conversion to SI happens when domain objects are built,
never inside the config.  Configs round-trip losslessly through
``to_dict``/``from_dict`` and hash deterministically for reproducibility.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml


@dataclass
class PulseConfig:
    wavelength_nm: float
    duration_fs: float
    energy_nj: float
    waist_um: float
    shape: str = "gaussian"


@dataclass
class MediumConfig:
    pressure_bar: float = 3.0
    temperature_k: float = 295.0
    j_max: int = 7
    length_m: float | None = None  # None -> 2x Rayleigh range of the write beam
    # Diagnostic override of the coherence decay rate (s^-1); the coupling
    # keeps the density-proportional g*Gamma product.  None -> Gamma(p).
    gamma_override_s: float | None = None
    # Restrict storage to a single rotational level (diagnostic).
    single_j: int | None = None


@dataclass
class SpectroscopyConfig:
    mode: str = "empirical"  # "empirical" | "dunham"
    constants_path: str | None = None
    lines_path: str | None = None


@dataclass
class StorageConfig:
    delay_ps: float = 16.0
    snap_to_rephasing: bool = True
    snap_window_ps: float = 2.5


@dataclass
class GridConfig:
    nz: int = 96
    nt: int = 256
    t_min_ps: float = -0.35
    t_max_ps: float = 0.35


@dataclass
class DelayScanConfig:
    start_ps: float = 0.0
    stop_ps: float = 100.0
    points: int = 2000


@dataclass
class PressureScanConfig:
    start_bar: float = 1.0
    stop_bar: float = 13.0
    points: int = 25


@dataclass
class LinearityScanConfig:
    start_nj: float = 5.0
    stop_nj: float = 150.0
    points: int = 8


@dataclass
class CalibrationConfig:
    path: str | None = None  # external calibration JSON wins when set
    anchor_g: float = 6.5
    anchor_pressure_bar: float = 13.0
    anchor_energy_uj: float = 40.0
    anchor_duration_fs: float = 100.0
    lifetime_ns: float = 1.0
    lifetime_pressure_bar: float = 3.0


def _default_signal() -> PulseConfig:
    return PulseConfig(wavelength_nm=600.0, duration_fs=100.0, energy_nj=50.0, waist_um=20.0)


def _default_write() -> PulseConfig:
    return PulseConfig(wavelength_nm=800.0, duration_fs=100.0, energy_nj=40_000.0, waist_um=20.0)


def _default_read() -> PulseConfig:
    return PulseConfig(wavelength_nm=800.0, duration_fs=100.0, energy_nj=34_000.0, waist_um=20.0)


@dataclass
class ExperimentConfig:
    medium: MediumConfig = field(default_factory=MediumConfig)
    signal: PulseConfig = field(default_factory=_default_signal)
    write: PulseConfig = field(default_factory=_default_write)
    read: PulseConfig = field(default_factory=_default_read)
    spectroscopy: SpectroscopyConfig = field(default_factory=SpectroscopyConfig)
    storage: StorageConfig = field(default_factory=StorageConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    delay_scan: DelayScanConfig = field(default_factory=DelayScanConfig)
    pressure_scan: PressureScanConfig = field(default_factory=PressureScanConfig)
    linearity_scan: LinearityScanConfig = field(default_factory=LinearityScanConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    alpha: float = 0.35
    output_dir: str = "runs"
    jobs: int = 1
    seed: int | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        section_types = {
            "medium": MediumConfig,
            "signal": PulseConfig,
            "write": PulseConfig,
            "read": PulseConfig,
            "spectroscopy": SpectroscopyConfig,
            "storage": StorageConfig,
            "grid": GridConfig,
            "delay_scan": DelayScanConfig,
            "pressure_scan": PressureScanConfig,
            "linearity_scan": LinearityScanConfig,
            "calibration": CalibrationConfig,
        }
        for key, value in payload.items():
            if key in section_types:
                if not isinstance(value, dict):
                    raise ValueError(f"config section {key!r} must be a mapping")
                known_fields = {f.name for f in dataclasses.fields(section_types[key])}
                bad = set(value) - known_fields
                if bad:
                    raise ValueError(f"unknown keys in config section {key!r}: {sorted(bad)}")
                kwargs[key] = section_types[key](**value)
            else:
                kwargs[key] = value
        return cls(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    payload = yaml.safe_load(Path(path).read_text())
    if payload is None:
        return ExperimentConfig()
    if not isinstance(payload, dict):
        raise ValueError(f"config file {path} must hold a mapping")
    return ExperimentConfig.from_dict(payload)


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=True))


def config_hash(config: ExperimentConfig) -> str:
    """sha256 over the canonical JSON form; identical configs hash identically."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
