"""Kernel dispatch: the compiled core when it is built, numpy otherwise.

Set ``LCELAB_PURE_PYTHON=1`` before import to force the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"

if not os.environ.get("LCELAB_PURE_PYTHON"):
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

max_restricted_eig = _impl.max_restricted_eig
subset_cross_max = _impl.subset_cross_max
subset_sum_ratio = _impl.subset_sum_ratio
hit_and_run = _impl.hit_and_run
farthest_point = _impl.farthest_point

__all__ = [
    "BACKEND",
    "max_restricted_eig",
    "subset_cross_max",
    "subset_sum_ratio",
    "hit_and_run",
    "farthest_point",
]
