"""Dual-pairing gradients for maps into normed catalog spaces.

When the target has linear structure, pairing the map against a finite set
of dual test functionals gives a gradient matrix by scalar finite
differences; the metric differential is then recovered as the sup of
|<v*, G nu>| / ||v*|| over the set.  Finite dual sets play the role of the
countable dense families in the dual; enlarging the set can only improve
the recovery.  In this finite-dimensional catalog the bidual collapses
onto the space itself, so one matrix serves both the predual and dual
constructions; which one a scenario exercises is recorded as a flag only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .derivatives import MapOracle, _prep_steps
from .errors import InputError
from .spaces import LebesgueGrid, Lp, MetricSpace

__all__ = [
    "DualTestSet",
    "DualGradient",
    "coordinate_duals",
    "fan_duals",
    "block_step_duals",
    "gradient_aligned_duals",
    "dual_gradient",
    "md_from_dual",
    "weak_star_residual",
]


def _conjugate(p: float) -> float:
    if math.isinf(p):
        return 1.0
    if p == 1.0:
        return math.inf
    return p / (p - 1.0)


def dual_norm(space: MetricSpace, vec: np.ndarray) -> float:
    """Norm of a dual vector in the conjugate exponent, honoring cell weights."""
    vec = np.asarray(vec, dtype=float)
    if isinstance(space, LebesgueGrid):
        q = _conjugate(space.p)
        if math.isinf(q):
            return float(np.max(np.abs(vec)))
        return float((space.cell_weight * np.sum(np.abs(vec) ** q)) ** (1.0 / q))
    if isinstance(space, Lp):
        q = _conjugate(space.p)
        if math.isinf(q):
            return float(np.max(np.abs(vec)))
        return float(np.sum(np.abs(vec) ** q) ** (1.0 / q))
    raise InputError(f"no dual-norm rule for {space.space_id}")


class DualTestSet:
    """Finite family of dual test vectors with their dual norms.

    The pairing against target vectors is the integral pairing for the
    discretized Lebesgue spaces (cell weight included) and the plain dot
    product otherwise.
    """

    def __init__(self, space: MetricSpace, vectors: np.ndarray, kind: str = "explicit"):
        if not space.is_normed:
            raise InputError("dual test sets need a normed target")
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        if V.shape[1] != space.dim:
            raise InputError("dual vector dimension mismatch")
        if not np.all(np.isfinite(V)):
            raise InputError("non-finite dual vectors")
        self.space = space
        self.vectors = V
        self.kind = kind
        self.norms = np.array([dual_norm(space, v) for v in V])
        if np.any(self.norms <= 0):
            raise InputError("dual vectors must have positive norm")
        self.pair_weight = space.cell_weight if isinstance(space, LebesgueGrid) else 1.0

    def __len__(self):
        return self.vectors.shape[0]

    def pair(self, targets: np.ndarray) -> np.ndarray:
        """<v*_k, w> for target rows w: shape (len(targets), K)."""
        T = np.atleast_2d(np.asarray(targets, dtype=float))
        return self.pair_weight * (T @ self.vectors.T)

    def extended(self, other: "DualTestSet") -> "DualTestSet":
        if other.space.space_id != self.space.space_id:
            raise InputError("cannot merge dual sets over different spaces")
        return DualTestSet(self.space, np.vstack([self.vectors, other.vectors]),
                           kind=f"{self.kind}+{other.kind}")


def coordinate_duals(space: MetricSpace) -> DualTestSet:
    return DualTestSet(space, np.eye(space.dim), kind="coordinate")


def fan_duals(space: MetricSpace, count: int = 64, seed: int = 7) -> DualTestSet:
    """Unit dual vectors spread over directions (equispaced for dim 2)."""
    m = space.dim
    if m == 1:
        V = np.array([[1.0]])
    elif m == 2:
        ang = np.pi * np.arange(count) / count
        V = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        rng = np.random.default_rng(seed)
        V = rng.standard_normal((count, m))
    V = np.stack([v / dual_norm(space, v) for v in V])
    return DualTestSet(space, V, kind="fan")


def block_step_duals(space: LebesgueGrid, blocks: int) -> DualTestSet:
    """Indicators of `blocks` contiguous cell blocks, unit sup-norm step functions."""
    if not isinstance(space, LebesgueGrid):
        raise InputError("step-function duals need a discretized Lebesgue target")
    if not (1 <= blocks <= space.dim):
        raise InputError("block count outside 1..cells")
    edges = np.linspace(0, space.dim, blocks + 1).astype(int)
    V = np.zeros((blocks, space.dim))
    for b in range(blocks):
        V[b, edges[b] : edges[b + 1]] = 1.0
    return DualTestSet(space, V, kind=f"steps({blocks})")


def gradient_aligned_duals(space: MetricSpace, matrix: np.ndarray,
                           fan: np.ndarray) -> DualTestSet:
    """Unit duals along the image directions G nu for fan directions nu.

    Aligning the dual set with the recovered gradient makes the dual sup
    attain the image norm on the fan itself (euclidean targets).
    """
    G = np.atleast_2d(np.asarray(matrix, dtype=float))
    fan = np.atleast_2d(np.asarray(fan, dtype=float))
    imgs = fan @ G.T
    keep = np.linalg.norm(imgs, axis=1) > 1e-14
    if not np.any(keep):
        raise InputError("gradient is zero on the whole fan")
    V = np.stack([v / dual_norm(space, v) for v in imgs[keep]])
    return DualTestSet(space, V, kind="gradient-aligned")


@dataclass
class DualGradient:
    matrix: np.ndarray        # (K, n) pairings <v*_k, d_j f(x)>
    entry_converged: np.ndarray
    diagnostic_ok: bool
    construction: str = "predual"  # which dual-side theorem a scenario exercises


def dual_gradient(f: MapOracle, D: DualTestSet, x, steps=None, tol: float = 1e-6,
                  construction: str = "predual") -> DualGradient:
    """Entry (k, j): central-difference derivative of x -> <v*_k, f(x)> along e_j."""
    if D.space.space_id != f.target.space_id:
        raise InputError("dual set does not match the map target")
    n = f.domain.ndim
    x_arr, _, steps = _prep_steps(f, x, np.eye(n)[0], steps)
    H = len(steps)
    M = np.empty((len(D), n))
    conv = np.empty((len(D), n), dtype=bool)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        probes = np.concatenate([x_arr[None, :] + steps[:, None] * e,
                                 x_arr[None, :] - steps[:, None] * e])
        P = D.pair(f.eval_coords(probes))  # (2H, K)
        ests = (P[:H] - P[H:]) / (2.0 * steps[:, None])
        M[:, j] = ests[-1]
        conv[:, j] = np.abs(ests[-1] - ests[-2]) <= tol * np.maximum(1.0, D.norms)
    return DualGradient(matrix=M, entry_converged=conv,
                        diagnostic_ok=bool(np.all(conv)), construction=construction)


def md_from_dual(G: DualGradient, D: DualTestSet, nu) -> float:
    """sup_k |<v*_k, G nu>| / ||v*_k|| - the dual recovery of the metric differential."""
    nu = np.asarray(nu, dtype=float)
    if np.all(nu == 0):
        raise InputError("direction must be nonzero")
    return float(np.max(np.abs(G.matrix @ nu) / D.norms))


@dataclass
class WeakStarReport:
    radii: np.ndarray
    max_residual: np.ndarray          # per radius, over duals and fan
    per_functional: np.ndarray        # (radii, K) max over fan
    trend_ratio: float                # last/first residual


def weak_star_residual(f: MapOracle, G: DualGradient, D: DualTestSet, x,
                       radii, fan) -> WeakStarReport:
    """|<v*, f(x + r nu) - f(x)> - r <v*, G nu>| / (r ||v*||), maxed over the fan."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    radii = np.asarray(radii, dtype=float)
    fan = np.atleast_2d(np.asarray(fan, dtype=float))
    if np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise InputError("radii must be positive, strictly decreasing")
    if f.domain.clearance(x) < radii[0] * np.max(np.linalg.norm(fan, axis=1)):
        raise InputError("insufficient clearance for the largest radius")
    base = D.pair(f.eval_coords(x[None, :]))[0]  # (K,)
    lin = fan @ G.matrix.T  # (F, K) entries <v*_k, G nu>
    per_f = np.empty((len(radii), len(D)))
    out = np.empty(len(radii))
    for i, r in enumerate(radii):
        P = D.pair(f.eval_coords(x[None, :] + r * fan))  # (F, K)
        res = np.abs(P - base - r * lin) / (r * D.norms)
        per_f[i] = np.max(res, axis=0)
        out[i] = np.max(res)
    return WeakStarReport(
        radii=radii,
        max_residual=out,
        per_functional=per_f,
        trend_ratio=float(out[-1] / out[0]) if out[0] > 0 else 0.0,
    )
