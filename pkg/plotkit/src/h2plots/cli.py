"""CLI: ``h2plot <kind> --in <csv> [--meta <json>] --out <png|svg>``.

Exits nonzero with a message naming the offending file (and row, for
malformed CSVs) when validation fails; no partial output is written.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .recipes import DEFAULT_PEAK_MARKS, KINDS, FigureRecipe, RecipeError
from .render import render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="h2plot",
        description="Render publication-style figures from h2raman scan CSVs",
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument("--in", dest="csv", type=Path, required=True, help="input CSV")
    parser.add_argument("--meta", type=Path, default=None, help="JSON metadata sidecar")
    parser.add_argument("--out", type=Path, required=True, help="output image (.png or .svg)")
    parser.add_argument(
        "--peaks",
        type=str,
        default=None,
        help="comma-separated peak marker positions in cm^-1 "
        f"(default: {','.join(str(p) for p in DEFAULT_PEAK_MARKS)})",
    )
    parser.add_argument(
        "--inset",
        type=str,
        default="12,22",
        help="delay-scan inset range in ps, as lo,hi",
    )
    parser.add_argument(
        "--optimum-bar",
        type=float,
        default=None,
        help="pressure-scan optimum marker (default: argmax of the read curve)",
    )
    parser.add_argument("--title", type=str, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        peaks = (
            DEFAULT_PEAK_MARKS
            if args.peaks is None
            else tuple(float(p) for p in args.peaks.split(",") if p.strip())
        )
        lo, hi = (float(v) for v in args.inset.split(","))
        recipe = FigureRecipe(
            kind=args.kind,
            csv_path=args.csv,
            meta_path=args.meta,
            out_path=args.out,
            peak_marks=peaks,
            inset_range_ps=(lo, hi),
            optimum_pressure_bar=args.optimum_bar,
            title=args.title,
        )
        path = render(recipe)
    except (RecipeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
