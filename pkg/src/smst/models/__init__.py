from . import fhn, linear, morris_lecar, reciprocal_inhibition
from .fhn import FhnParams
from .morris_lecar import MorrisLecarParams
from .reciprocal_inhibition import RIParams

__all__ = [
    "fhn",
    "linear",
    "morris_lecar",
    "reciprocal_inhibition",
    "FhnParams",
    "MorrisLecarParams",
    "RIParams",
]
