"""Rovibrational structure of molecular hydrogen.

Term values from a truncated Dunham expansion, Q-branch (dv=1, dJ=0)
transition frequencies with an optional measured-line override table,
thermal rotational populations with ortho/para nuclear-spin weights, and
pairwise beat frequencies between Q01(J) coherences.

All energies are wavenumbers (cm^-1); conversions to Hz/THz belong in
presentation code.  The shipped H2 constants and line positions are
external data (see ``data/h2_constants.txt``), not fitted here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from importlib import resources
from itertools import combinations
from pathlib import Path

import numpy as np
import scipy.constants as spc

# Boltzmann constant in cm^-1 per kelvin, and c in cm/s.
KB_CM = spc.Boltzmann / (spc.h * spc.c * 100.0)
C_CM_S = spc.c * 100.0

V_MAX = 2
J_MAX_TERM = 10
J_MAX_QBRANCH = 5

LineTable = dict[tuple[int, int, int], float]


@dataclass(frozen=True)
class SpectroscopicConstants:
    """Dunham-type molecular constants (cm^-1).

    ``empirical_lines`` optionally maps (v, v', J) to a measured transition
    wavenumber; when present it overrides the Dunham value in
    :func:`q_branch_frequency`.
    """

    we: float
    wexe: float
    Be: float
    alpha_e: float
    De: float
    beta_e: float
    empirical_lines: LineTable | None = None

    def __post_init__(self) -> None:
        if self.we <= 0 or self.Be <= 0:
            raise ValueError("we and Be must be positive")
        if self.wexe < 0 or self.De < 0:
            raise ValueError("wexe and De must be non-negative")
        if self.empirical_lines is not None:
            for key, wn in self.empirical_lines.items():
                if wn <= 0:
                    raise ValueError(f"empirical line {key} has non-positive wavenumber")

    def without_lines(self) -> "SpectroscopicConstants":
        """Copy of these constants in pure Dunham mode."""
        return replace(self, empirical_lines=None)

    def with_lines(self, lines: LineTable) -> "SpectroscopicConstants":
        return replace(self, empirical_lines=dict(lines))


@dataclass(frozen=True)
class RovibState:
    """A (v, J) level with its term value in cm^-1."""

    v: int
    J: int
    energy: float


@dataclass(frozen=True)
class PopulationTable:
    """Fractional populations of (v=0, J) levels at thermal equilibrium."""

    temperature: float
    fractions: dict[int, float]
    spin_weights: dict[str, float]

    def __post_init__(self) -> None:
        total = sum(self.fractions.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"fractions sum to {total!r}, expected 1 within 1e-12")
        if any(not 0.0 <= f <= 1.0 for f in self.fractions.values()):
            raise ValueError("fractions must lie in [0, 1]")


def term_value(constants: SpectroscopicConstants, v: int, J: int) -> float:
    """Term value G(v) + F_v(J) in cm^-1.

    G(v) = we (v+1/2) - wexe (v+1/2)^2, F_v(J) = B_v X - D_v X^2 with
    X = J(J+1), B_v = Be - alpha_e (v+1/2), D_v = De + beta_e (v+1/2).
    """
    if not 0 <= v <= V_MAX:
        raise ValueError(f"v={v} outside supported range 0..{V_MAX}")
    if not 0 <= J <= J_MAX_TERM:
        raise ValueError(f"J={J} outside supported range 0..{J_MAX_TERM}")
    vh = v + 0.5
    g = constants.we * vh - constants.wexe * vh**2
    b_v = constants.Be - constants.alpha_e * vh
    d_v = constants.De + constants.beta_e * vh
    x = J * (J + 1)
    return g + b_v * x - d_v * x**2


def rovib_state(constants: SpectroscopicConstants, v: int, J: int) -> RovibState:
    return RovibState(v=v, J=J, energy=term_value(constants, v, J))


def _q01(constants: SpectroscopicConstants, J: int) -> float:
    # Empirical line wins when tabulated; Dunham difference otherwise.
    if constants.empirical_lines is not None:
        line = constants.empirical_lines.get((0, 1, J))
        if line is not None:
            return line
    return term_value(constants, 1, J) - term_value(constants, 0, J)


def q_branch_frequency(constants: SpectroscopicConstants, J: int) -> float:
    """Q01(J) transition wavenumber (cm^-1) for v=0 -> 1 at rotational level J."""
    if not 0 <= J <= J_MAX_QBRANCH:
        raise ValueError(f"J={J} outside supported range 0..{J_MAX_QBRANCH}")
    return _q01(constants, J)


def spin_weight(J: int) -> float:
    """Nuclear-spin statistical weight: 3 for odd J (ortho), 1 for even J (para)."""
    return 3.0 if J % 2 else 1.0


def boltzmann_populations(
    constants: SpectroscopicConstants, temperature: float, j_max: int = 7
) -> PopulationTable:
    """Thermal fractions of the (v=0, J<=j_max) rotational levels.

    fraction(J) is proportional to g_s(J) (2J+1) exp(-F0(J)/(k_B T)) with the
    3:1 odd:even nuclear-spin weight, normalized over the included levels.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if not 3 <= j_max <= J_MAX_TERM:
        raise ValueError(f"j_max must lie in 3..{J_MAX_TERM}")
    f0_origin = term_value(constants, 0, 0)
    kt = KB_CM * temperature
    js = np.arange(j_max + 1)
    f_rot = np.array([term_value(constants, 0, int(j)) - f0_origin for j in js])
    weights = np.array([spin_weight(int(j)) * (2 * j + 1) for j in js]) * np.exp(-f_rot / kt)
    weights /= weights.sum()
    # Renormalize in plain floats so the stored fractions sum to 1 exactly
    # enough for the table invariant.
    fractions = {int(j): float(w) for j, w in zip(js, weights)}
    total = sum(fractions.values())
    fractions = {j: f / total for j, f in fractions.items()}
    return PopulationTable(
        temperature=temperature,
        fractions=fractions,
        spin_weights={"even": 1.0, "odd": 3.0},
    )


def thermal_vibrational_ratio(constants: SpectroscopicConstants, temperature: float) -> float:
    """Boltzmann occupation ratio of v=1 relative to v=0 at J=0."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    dg = term_value(constants, 1, 0) - term_value(constants, 0, 0)
    return float(np.exp(-dg / (KB_CM * temperature)))


def beat_table(
    constants: SpectroscopicConstants, j_set: set[int] | list[int]
) -> list[tuple[int, int, float]]:
    """All pairwise |Q01(Ja) - Q01(Jb)| beats, sorted ascending by beat.

    Note: for the four thermally populated levels of H2 the (0,2) and (2,3)
    beats are nearly degenerate (~17.7 vs ~17.6 cm^-1) and merge in any
    finite-length power spectrum; both pairs are reported.
    """
    js = sorted(set(int(j) for j in j_set))
    q = {j: q_branch_frequency(constants, j) for j in js}
    rows = [(a, b, abs(q[a] - q[b])) for a, b in combinations(js, 2)]
    rows.sort(key=lambda r: r[2])
    return rows


def load_constants(path: str | Path, lines_path: str | Path | None = None) -> SpectroscopicConstants:
    """Read constants from a key/value text file, optionally with a line-table CSV.

    The text file holds ``key = value`` pairs (# comments allowed) for keys
    we, wexe, Be, alpha_e, De, beta_e.  The CSV needs columns v,vp,J,wavenumber.
    """
    values: dict[str, float] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed constants line: {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = float(val)
    required = {"we", "wexe", "Be", "alpha_e", "De", "beta_e"}
    missing = required - values.keys()
    if missing:
        raise ValueError(f"constants file missing keys: {sorted(missing)}")
    lines = load_line_table(lines_path) if lines_path is not None else None
    return SpectroscopicConstants(
        we=values["we"],
        wexe=values["wexe"],
        Be=values["Be"],
        alpha_e=values["alpha_e"],
        De=values["De"],
        beta_e=values["beta_e"],
        empirical_lines=lines,
    )


def load_line_table(path: str | Path) -> LineTable:
    """Read an empirical transition table CSV with columns v,vp,J,wavenumber."""
    table: LineTable = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"v", "vp", "J", "wavenumber"}
        if reader.fieldnames is None or not needed <= set(reader.fieldnames):
            raise ValueError(f"line table {path} must have columns v,vp,J,wavenumber")
        for i, row in enumerate(reader):
            try:
                key = (int(row["v"]), int(row["vp"]), int(row["J"]))
                table[key] = float(row["wavenumber"])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"line table {path} row {i + 2}: {exc}") from exc
    return table


def _load_default_constants() -> SpectroscopicConstants:
    pkg = resources.files("h2raman.data")
    with resources.as_file(pkg / "h2_constants.txt") as cpath, resources.as_file(
        pkg / "h2_q01_lines.csv"
    ) as lpath:
        return load_constants(cpath, lpath)


#: Default H2 constants with the measured Q01(J<=3) line table attached.
#: Use ``H2_CONSTANTS.without_lines()`` for pure Dunham mode.
H2_CONSTANTS = _load_default_constants()
