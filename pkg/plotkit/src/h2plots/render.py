"""Deterministic matplotlib rendering of the four scan-figure kinds.

Rendering is a pure function of (CSV inputs, recipe): fixed figure
geometry, fixed fonts, no timestamps, and a fixed SVG hash salt, so
identical inputs give byte-identical images on one platform.  All physics
stays upstream; the only computation here is the cm^-1 <-> THz axis
conversion.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .recipes import (
    FigureRecipe,
    RecipeError,
    cm1_to_thz,
    load_recipe_data,
    thz_to_cm1,
)

RC_PARAMS = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "h2raman-plots",
}

WRITE_COLOR = "#1f77b4"
READ_COLOR = "#d62728"
MARK_COLOR = "#555555"


def _delay_scan_figure(recipe: FigureRecipe, data, meta) -> plt.Figure:
    t = data["delay_ps"]
    eff = data["efficiency"]
    fig, ax = plt.subplots()
    ax.plot(t, eff, color=READ_COLOR)
    ax.set_xlabel("Storage delay (ps)")
    ax.set_ylabel("Read efficiency")
    ax.set_xlim(t.min(), t.max())
    ax.set_ylim(0.0, max(1e-12, 1.15 * eff.max()))

    lo, hi = recipe.inset_range_ps
    sel = (t >= lo) & (t <= hi)
    if sel.sum() >= 2:
        ax.axvspan(lo, hi, color="0.85", zorder=0)
        inset = ax.inset_axes([0.52, 0.55, 0.44, 0.4])
        inset.plot(t[sel], eff[sel], color=READ_COLOR)
        inset.set_xlim(lo, hi)
        inset.tick_params(labelsize=7)
        inset.set_title(f"{lo:g}-{hi:g} ps detail", fontsize=7)
    if recipe.title:
        ax.set_title(recipe.title)
    return fig


def _spectrum_figure(recipe: FigureRecipe, data, meta) -> plt.Figure:
    nu = data["wavenumber_cm1"]
    power = data["power"]
    positive = power > 0
    if not positive.any():
        raise RecipeError(f"{recipe.csv_path}: spectrum has no positive power values")
    floor = power[positive].min()

    fig, ax = plt.subplots()
    ax.semilogy(nu, np.maximum(power, floor), color=WRITE_COLOR)
    ax.set_xlabel(r"Beat frequency (cm$^{-1}$)")
    ax.set_ylabel("Power (arb. units)")
    upper = max(45.0, 1.25 * max(recipe.peak_marks, default=0.0))
    ax.set_xlim(0.0, min(upper, nu.max()))

    for mark in recipe.peak_marks:
        line = ax.axvline(mark, color=MARK_COLOR, linestyle="--", linewidth=0.7)
        line.set_gid("peak-mark")
        ax.annotate(
            f"{mark:g}",
            xy=(mark, 1.0),
            xycoords=("data", "axes fraction"),
            xytext=(0, 2),
            textcoords="offset points",
            ha="center",
            fontsize=7,
            color=MARK_COLOR,
        )

    top = ax.secondary_xaxis("top", functions=(cm1_to_thz, thz_to_cm1))
    top.set_xlabel("Frequency (THz)")
    if recipe.title:
        ax.set_title(recipe.title, y=1.18)
    return fig


def _pressure_scan_figure(recipe: FigureRecipe, data, meta) -> plt.Figure:
    p = data["pressure_bar"]
    eta_w = data["write_efficiency"]
    eta_r = data["read_efficiency"]
    fig, (ax_w, ax_r) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.0))
    ax_w.plot(p, eta_w, "o-", color=WRITE_COLOR, markersize=3)
    ax_w.set_ylabel("Write efficiency")
    ax_r.plot(p, eta_r, "o-", color=READ_COLOR, markersize=3)
    ax_r.set_ylabel("Read efficiency")
    ax_r.set_xlabel("Pressure (bar)")

    optimum = recipe.optimum_pressure_bar
    if optimum is None and np.isfinite(eta_r).any():
        optimum = float(p[np.nanargmax(eta_r)])
    if optimum is not None:
        line = ax_r.axvline(optimum, color=MARK_COLOR, linestyle=":", linewidth=0.8)
        line.set_gid("optimum-mark")
        ax_r.annotate(
            f"optimum {optimum:g} bar",
            xy=(optimum, 0.95),
            xycoords=("data", "axes fraction"),
            xytext=(3, 0),
            textcoords="offset points",
            fontsize=7,
            color=MARK_COLOR,
        )
    for ax in (ax_w, ax_r):
        ax.set_ylim(bottom=0.0)
    if recipe.title:
        ax_w.set_title(recipe.title)
    return fig


def _linearity_figure(recipe: FigureRecipe, data, meta) -> plt.Figure:
    e = data["signal_energy_nj"]
    fig, ax = plt.subplots()
    ax.plot(e, data["write_efficiency"], "s-", color=WRITE_COLOR, markersize=4,
            label="write")
    ax.plot(e, data["read_efficiency"], "o-", color=READ_COLOR, markersize=4,
            label="read")
    ax.set_xlabel("Signal pulse energy (nJ)")
    ax.set_ylabel("Efficiency")
    top = max(data["write_efficiency"].max(), data["read_efficiency"].max())
    ax.set_ylim(0.0, max(1e-12, 1.3 * top))
    ax.legend(loc="lower right")
    if recipe.title:
        ax.set_title(recipe.title)
    return fig


_BUILDERS = {
    "delay_scan": _delay_scan_figure,
    "spectrum": _spectrum_figure,
    "pressure_scan": _pressure_scan_figure,
    "linearity": _linearity_figure,
}


def build_figure(recipe: FigureRecipe) -> plt.Figure:
    """Validate inputs and build the matplotlib figure (not yet saved)."""
    data, meta = load_recipe_data(recipe)
    with plt.rc_context(RC_PARAMS):
        return _BUILDERS[recipe.kind](recipe, data, meta)


def render(recipe: FigureRecipe) -> Path:
    """Render the recipe to its output path; no partial file on failure.

    The figure is written to a temporary sibling first and moved into place
    only after a successful save.
    """
    fig = build_figure(recipe)
    out = recipe.out_path
    out.parent.mkdir(parents=True, exist_ok=True)
    fmt = out.suffix.lstrip(".").lower()
    tmp = out.with_name(out.name + ".part")
    try:
        with plt.rc_context(RC_PARAMS):
            metadata = {"Date": None} if fmt == "svg" else None
            fig.savefig(tmp, format=fmt, metadata=metadata)
        os.replace(tmp, out)
    finally:
        plt.close(fig)
        if tmp.exists():
            tmp.unlink()
    return out
