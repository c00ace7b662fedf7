"""THz-bandwidth Raman memory simulator for molecular hydrogen.

Rovibrational structure and thermal populations, multi-J coherence
rephasing, a one-dimensional linearized Maxwell-Bloch solver for the
write/read stages, and a config-driven scan harness with CSV/JSON output.
"""

from .calibration import DEFAULT_CALIBRATION, calibrate_defaults
from .coherence import (
    CoherenceEnsemble,
    DelayScan,
    PowerSpectrum,
    evolve,
    find_rephasing_maxima,
    init_ensemble,
    power_spectrum,
    retrieval_envelope,
    retrieved_amplitude,
    snap_to_rephasing_maximum,
    storage_factor,
)
from .config import ExperimentConfig, config_hash, load_config, save_config
from .fitting import FitResult, ObservedCurve, fit_parameters
from .mbsolver import (
    CalibrationSet,
    CouplingParameter,
    DephasingModel,
    GridSpec,
    MediumState,
    PressureScanResult,
    PulseSpec,
    ScanProtocol,
    StageResult,
    coupling_parameter,
    gamma_of_pressure,
    medium_state,
    pressure_scan,
    read_stage,
    total_efficiency,
    write_stage,
)
from .scans import (
    run_best_case,
    run_delay_scan,
    run_linearity_scan,
    run_pressure_scan,
    time_bin_report,
)
from .spectroscopy import (
    H2_CONSTANTS,
    PopulationTable,
    RovibState,
    SpectroscopicConstants,
    beat_table,
    boltzmann_populations,
    load_constants,
    load_line_table,
    q_branch_frequency,
    term_value,
    thermal_vibrational_ratio,
)

__version__ = "0.1.0"
