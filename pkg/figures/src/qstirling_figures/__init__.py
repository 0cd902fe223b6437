"""Figure renderer for qstirling sweep CSV tables."""

__version__ = "0.1.0"

from .data import SchemaError, SweepTable, read_table
from .render import FIGURE_IDS, FigureSpec, render

__all__ = ["FIGURE_IDS", "FigureSpec", "SchemaError", "SweepTable",
           "read_table", "render", "__version__"]
