"""Pure numpy/scipy implementations of the hot kernels.

Used when the compiled extension is unavailable or disabled via
METRICDIFF_PURE_PYTHON=1.  Ball membership is decided on integer squared
offsets, so both backends agree on the discrete geometry exactly.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

BACKEND = "python"


def _radius_count(shape) -> int:
    # balls are open (|y - x| < r), so the radius-h ball is the node alone
    # and the ladder must run one past the node diameter to cover the grid
    return math.isqrt(sum((s - 1) ** 2 for s in shape)) + 1


def _ball_kernel(ndim: int, i: int, clip) -> np.ndarray:
    """Indicator of integer offsets o with sum(o^2) < i^2, clipped per axis."""
    half = [min(i, c) for c in clip]
    axes = [np.arange(-h, h + 1) ** 2 for h in half]
    sq = axes[0]
    for a in axes[1:]:
        sq = sq[..., None] + a
    return (sq <= i * i - 1).astype(float)


def maximal_function_grid(values: np.ndarray, spacing: float) -> np.ndarray:
    """Discrete Hardy-Littlewood maximal function on a box grid.

    Mu(x) = max over radii r in {h, 2h, ..., >= diam} of the mean of |u|
    over grid nodes y with |y - x| <= r, the ball clipped to the grid.
    """
    u = np.abs(np.asarray(values, dtype=float))
    if u.ndim < 1:
        raise ValueError("grid values must be at least 1-dimensional")
    clip = [s - 1 for s in u.shape]
    ones = np.ones_like(u)
    out = u.copy()  # the radius-h open ball is the node alone: average |u(x)|
    for i in range(2, _radius_count(u.shape) + 1):
        K = _ball_kernel(u.ndim, i, clip)
        num = fftconvolve(u, K, mode="same")
        den = np.rint(fftconvolve(ones, K, mode="same"))
        np.maximum(out, np.maximum(num, 0.0) / den, out=out)
    # ball averages of |u| can never exceed its maximum; clamping removes
    # FFT rounding overshoot so the exact invariants survive this backend
    np.minimum(out, np.max(u), out=out)
    return out


def pairwise_max_quotient(
    dom: np.ndarray,
    img: np.ndarray,
    p: float,
    weight: float,
    alpha: float,
    block: int = 128,
) -> float:
    """max over pairs i<j of d_img(i,j) / |dom_i - dom_j|.

    Image distance is (weight * sum |di|^p)^(alpha/p), max-norm when p=inf.
    Coincident domain rows are skipped.
    """
    dom = np.atleast_2d(np.asarray(dom, dtype=float))
    img = np.atleast_2d(np.asarray(img, dtype=float))
    n = dom.shape[0]
    best = 0.0
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        for j0 in range(i0, n, block):
            j1 = min(j0 + block, n)
            dd = np.sqrt(
                np.sum((dom[i0:i1, None, :] - dom[None, j0:j1, :]) ** 2, axis=-1)
            )
            diff = np.abs(img[i0:i1, None, :] - img[None, j0:j1, :])
            if math.isinf(p):
                di = np.max(diff, axis=-1)
            else:
                di = (weight * np.sum(diff**p, axis=-1)) ** (1.0 / p)
            if alpha != 1.0:
                di = di**alpha
            sel = (np.arange(j0, j1)[None, :] > np.arange(i0, i1)[:, None]) & (dd > 0.0)
            if np.any(sel):
                best = max(best, float(np.max(di[sel] / dd[sel])))
    return best
