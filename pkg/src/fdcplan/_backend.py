"""Kernel backend selection.

Set ``FDCPLAN_BACKEND=numpy`` to force the pure-numpy kernels; the default
(``numba``) uses the jitted kernels when numba imports cleanly.
"""
import os

_requested = os.environ.get("FDCPLAN_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"FDCPLAN_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

BACKEND = "numba" if (_requested == "numba" and HAS_NUMBA) else "numpy"
