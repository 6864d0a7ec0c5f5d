"""Backend selection for the bandit iteration loop.

The compiled extension is used when it imports; otherwise the pure-Python
loop. Setting ``PGRATES_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("PGRATES_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
PLAIN, ENTROPY, TWO_STAGE, DECAYING = (
    _kernels_py.PLAIN,
    _kernels_py.ENTROPY,
    _kernels_py.TWO_STAGE,
    _kernels_py.DECAYING,
)
NCOLS = _kernels_py.NCOLS


def get_backend(name=None):
    """Return the ``bandit_trajectory`` implementation for ``name`` ('cython', 'python' or None)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _kernels_py.bandit_trajectory
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel is not available; build with `pip install -e .`")
        return _compiled.bandit_trajectory
    raise ValueError(f"unknown backend {name!r}")


def record_count(iterations, dense_until, record_every):
    if iterations <= dense_until:
        return iterations
    tail = iterations - dense_until
    return dense_until + tail // record_every + (1 if tail % record_every else 0)
