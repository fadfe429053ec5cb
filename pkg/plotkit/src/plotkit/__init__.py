"""Static figures from recorded wgnls run outputs."""

from .figures import KINDS, FigureSpec, PlotError, RenderInfo, SchemaError, render

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "FigureSpec",
    "PlotError",
    "RenderInfo",
    "SchemaError",
    "render",
    "__version__",
]
