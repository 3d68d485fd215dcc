"""Static figure rendering for spinwitness experiment CSVs."""

from .plots import (FIGURE_KINDS, FitLine, PlotSpec, SchemaError, ols_fit,
                    read_rows, render)

__version__ = "0.1.0"

__all__ = ["FIGURE_KINDS", "FitLine", "PlotSpec", "SchemaError", "ols_fit",
           "read_rows", "render"]
