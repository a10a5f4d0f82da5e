"""Kernel backend selection: compiled extension if built, numpy fallback otherwise.

Set METRICDIFF_PURE_PYTHON=1 to force the fallback (used by the benchmark
and for debugging backend differences).
"""

import os

from . import fallback

if os.environ.get("METRICDIFF_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _core as _impl
    except ImportError:
        _impl = fallback
else:
    _impl = fallback

BACKEND = _impl.BACKEND


def maximal_function_grid(values, spacing):
    return _impl.maximal_function_grid(values, spacing)


def pairwise_max_quotient(dom, img, p, weight, alpha):
    return _impl.pairwise_max_quotient(dom, img, p, weight, alpha)
