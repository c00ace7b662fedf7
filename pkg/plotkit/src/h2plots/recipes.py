"""Figure recipes: validated inputs for one rendered figure.

A recipe names the input CSV (and optional JSON metadata sidecar), the
figure kind, the annotation set, and the output image path.  All parsing
happens here so a bad input fails before any output file is touched.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KINDS = ("delay_scan", "spectrum", "pressure_scan", "linearity")

# Beat frequencies of the Q01(J<=3) coherence pairs (cm^-1), the default
# peak annotations for spectrum figures.
DEFAULT_PEAK_MARKS = (5.9, 11.8, 17.6, 29.4, 35.3)

CM1_PER_THZ = 33.356409519815205
THZ_PER_CM1 = 0.0299792458

COLUMNS = {
    "delay_scan": ["delay_ps", "efficiency"],
    "spectrum": ["wavenumber_cm1", "power"],
    "pressure_scan": ["pressure_bar", "write_efficiency", "read_efficiency"],
    "linearity": ["signal_energy_nj", "write_efficiency", "read_efficiency"],
}


class RecipeError(ValueError):
    """Invalid recipe input: missing file, bad columns, malformed row."""


@dataclass(frozen=True)
class FigureRecipe:
    kind: str
    csv_path: Path
    out_path: Path
    meta_path: Path | None = None
    peak_marks: tuple[float, ...] = DEFAULT_PEAK_MARKS
    inset_range_ps: tuple[float, float] = (12.0, 22.0)
    optimum_pressure_bar: float | None = None  # None -> argmax of the read curve
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise RecipeError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "csv_path", Path(self.csv_path))
        object.__setattr__(self, "out_path", Path(self.out_path))
        if self.meta_path is not None:
            object.__setattr__(self, "meta_path", Path(self.meta_path))
        if self.out_path.suffix.lower() not in (".png", ".svg"):
            raise RecipeError(f"output must be .png or .svg, got {self.out_path.suffix!r}")


def cm1_to_thz(wavenumber_cm1):
    return THZ_PER_CM1 * np.asarray(wavenumber_cm1)


def thz_to_cm1(frequency_thz):
    return CM1_PER_THZ * np.asarray(frequency_thz)


def load_columns(path: Path, expected: list[str]) -> dict[str, np.ndarray]:
    if not path.exists():
        raise RecipeError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RecipeError(f"{path}: empty CSV") from None
        if header != expected:
            raise RecipeError(f"{path}: expected columns {expected}, found {header}")
        rows = []
        for i, row in enumerate(reader):
            if len(row) != len(expected):
                raise RecipeError(f"{path}: row {i + 2}: expected {len(expected)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise RecipeError(f"{path}: row {i + 2}: {exc}") from exc
    if not rows:
        raise RecipeError(f"{path}: no data rows")
    data = np.asarray(rows)
    return {name: data[:, j] for j, name in enumerate(expected)}


def load_metadata(path: Path | None, kind: str) -> dict:
    if path is None:
        return {}
    if not Path(path).exists():
        raise RecipeError(f"{path}: no such file")
    try:
        meta = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise RecipeError(f"{path}: invalid JSON ({exc})") from exc
    meta_kind = meta.get("kind")
    compatible = {
        "delay_scan": ("read_efficiency", "write_efficiency", "delay_scan"),
        "spectrum": ("power_spectrum", "spectrum"),
        "pressure_scan": ("pressure_scan",),
        "linearity": ("linearity_scan", "linearity"),
    }
    if meta_kind is not None and meta_kind not in compatible[kind]:
        raise RecipeError(
            f"{path}: metadata kind {meta_kind!r} does not match a {kind} figure"
        )
    return meta


def load_recipe_data(recipe: FigureRecipe) -> tuple[dict[str, np.ndarray], dict]:
    data = load_columns(recipe.csv_path, COLUMNS[recipe.kind])
    meta = load_metadata(recipe.meta_path, recipe.kind)
    return data, meta
