"""JIT switch for the numeric kernels.

Every hot function in the package is written in the subset of Python that
numba can compile.  Setting ``ADRSIM_DISABLE_JIT=1`` in the environment
before import runs the very same functions as plain Python/numpy, which is
slower but handy for debugging and for cross-checking the compiled path.
"""

from __future__ import annotations

import os

_FLAG = "ADRSIM_DISABLE_JIT"

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

JIT_ENABLED: bool = (
    _numba is not None and os.environ.get(_FLAG, "0").lower() not in ("1", "true", "yes")
)


def jit(fn):
    """Compile ``fn`` with ``numba.njit`` unless the fallback flag is set."""
    if not JIT_ENABLED:
        return fn
    return _numba.njit(cache=True)(fn)
