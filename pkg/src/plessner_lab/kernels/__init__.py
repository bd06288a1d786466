"""Hot kernels, dispatched to numba or numpy according to ``PLESSNER_LAB_NUMBA``."""
from .._accel import BACKEND, USE_NUMBA
from . import _numpy as numpy_impl
from ._numpy import REGION_BOX, REGION_DISC, REGION_HALFPLANE

if USE_NUMBA:
    from . import _numba as numba_impl

    _impl = numba_impl
else:
    numba_impl = None
    _impl = numpy_impl

pairwise_sum = _impl.pairwise_sum
region_phi = _impl.region_phi
crossing_counts = _impl.crossing_counts
pair_crossings = _impl.pair_crossings
walk_chains = _impl.walk_chains

__all__ = [
    "BACKEND",
    "REGION_BOX",
    "REGION_DISC",
    "REGION_HALFPLANE",
    "crossing_counts",
    "numba_impl",
    "numpy_impl",
    "pair_crossings",
    "pairwise_sum",
    "region_phi",
    "walk_chains",
]
