from .figures import FIGURES, FigureSpec, figures_for_run, render
from .io import RunDir, RunDirectoryError, read_table

__all__ = [
    "FIGURES",
    "FigureSpec",
    "RunDir",
    "RunDirectoryError",
    "figures_for_run",
    "read_table",
    "render",
]
