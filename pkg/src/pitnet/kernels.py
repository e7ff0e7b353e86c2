"""Exhaustive-search kernels: compiled when built, numpy otherwise.

Set ``PITNET_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("PITNET_PURE_PYTHON"):
    _impl = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as _impl
        COMPILED = True
    except ImportError:
        _impl = _kernels_py
        COMPILED = False

best_feasible = _impl.best_feasible
count_feasible = _impl.count_feasible
