"""Figure rendering for carryclip experiment CSVs."""

from .render import KINDS, FigureSpec, build_figure, render

__all__ = ["FigureSpec", "KINDS", "build_figure", "render"]

__version__ = "0.1.0"
