"""Publication-style figures from h2raman CSV/JSON scan outputs."""

from .recipes import DEFAULT_PEAK_MARKS, FigureRecipe, RecipeError, cm1_to_thz, thz_to_cm1
from .render import build_figure, render

__version__ = "0.1.0"
