"""JIT toggle shared by the hot kernels.

``FMPSAT_PURE=1`` (or a missing numba) selects the interpreted path;
everything computes identical results either way.
"""

from __future__ import annotations

import os
import warnings

_env = os.environ.get("FMPSAT_PURE", "").strip().lower()
PURE_REQUESTED = _env in ("1", "true", "yes", "on")

try:
    import numba

    # the occasional wall-clock poll drops into object mode by design
    warnings.filterwarnings(
        "ignore",
        message=".*object mode.*",
        category=numba.NumbaWarning,
    )
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

JIT_ENABLED = numba is not None and not PURE_REQUESTED


def maybe_jit(func):
    """Compile with numba unless the interpreted path was requested."""
    if JIT_ENABLED:
        return numba.njit(cache=True, nogil=True)(func)
    return func
