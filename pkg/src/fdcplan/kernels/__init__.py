"""Hot inner loops, each with a numba and a pure-numpy implementation.

Both variants share signatures and must agree exactly; ``tests/test_kernels.py``
checks parity and ``benchmarks/bench_kernels.py`` times them side by side.
"""
from .._backend import BACKEND

if BACKEND == "numba":
    from ._numba import (
        best_subset,
        exclude_skus,
        hw_filter,
        ration,
        satisfied_orders,
    )
else:
    from ._numpy import (
        best_subset,
        exclude_skus,
        hw_filter,
        ration,
        satisfied_orders,
    )

__all__ = [
    "BACKEND",
    "best_subset",
    "exclude_skus",
    "hw_filter",
    "ration",
    "satisfied_orders",
]
