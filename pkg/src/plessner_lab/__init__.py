"""plessner_lab: level-curve arc-length functionals, energy integrals and
co-area cross-checks for the boundary behaviour of holomorphic and harmonic
functions."""
from ._accel import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
