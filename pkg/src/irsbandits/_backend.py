"""Selection of the kernel backend.

The hot loops (knapsack DPs, index evaluation, lattice DP, incomplete beta)
exist twice: once as numba-compiled scalar loops and once as vectorised
numpy code.  ``IRSBANDITS_BACKEND=numpy`` forces the numpy path; the default
is numba whenever it can be imported.
"""

import importlib.util
import os

BACKEND_ENV = "IRSBANDITS_BACKEND"


def _numba_available():
    return importlib.util.find_spec("numba") is not None


def select_backend(requested=None):
    """Return the backend name that will actually be used."""
    if requested is None:
        requested = os.environ.get(BACKEND_ENV, "numba")
    requested = requested.strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not _numba_available():
        return "numpy"
    return requested


BACKEND = select_backend()
