"""Backend-dispatched numerical kernels.

Import kernels from here rather than from the backend modules; the choice
is made once at import time from ``IRSBANDITS_BACKEND``.
"""

from ._backend import BACKEND

if BACKEND == "numba":
    from . import _kernels_numba as _impl
else:
    from . import _kernels_numpy as _impl

betainc = _impl.betainc
index_bisect = _impl.index_bisect
index_gain = _impl.index_gain
pext_bisect = _impl.pext_bisect
pext_gain = _impl.pext_gain
prefix_knapsack = _impl.prefix_knapsack
prefix_knapsack_batch = _impl.prefix_knapsack_batch
real_allocation = _impl.real_allocation
lattice_gamma = _impl.lattice_gamma
lattice_rz = _impl.lattice_rz
lattice_dp = _impl.lattice_dp

__all__ = [
    "BACKEND", "betainc", "index_bisect", "index_gain", "pext_bisect", "pext_gain",
    "prefix_knapsack", "prefix_knapsack_batch", "real_allocation",
    "lattice_gamma", "lattice_rz", "lattice_dp",
]
