"""Discrete Sobolev machinery on uniform grids.

Grid functions live on an axis-aligned lattice with one spacing, optionally
masked to a region such as the unit ball.  The W^{1,p} norm is the L^p part
plus the sum of per-axis derivative L^p parts, all cell-volume-weighted;
derivatives are central differences, falling back to one-sided stencils at
the mask boundary.  The maximal function takes the best ball average over
the radius ladder {h, 2h, ...} with balls clipped to the grid box, and the
restriction machinery thresholds it to carve out a set where the map is
empirically Lipschitz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .derivatives import MapOracle
from .errors import InputError
from .gauge import GaugeSequence
from .spaces import MetricSpace, Point

__all__ = [
    "GridFunction",
    "SobolevNormReport",
    "RestrictionResult",
    "w1p_norm",
    "maximal_function",
    "lipschitz_restriction",
    "radial_truncation",
    "reshetnyak_gradient_check",
    "w1p_differentiability_check",
]


class GridFunction:
    """Real values on a uniform lattice, optionally restricted by a node mask."""

    def __init__(self, origin, spacing: float, values: np.ndarray, mask=None):
        self.values = np.asarray(values, dtype=float)
        self.origin = np.atleast_1d(np.asarray(origin, dtype=float))
        self.spacing = float(spacing)
        if self.spacing <= 0:
            raise InputError("grid spacing must be positive")
        if self.origin.shape[0] != self.values.ndim:
            raise InputError("origin dimension must match value array rank")
        if not np.all(np.isfinite(self.values)):
            raise InputError("non-finite grid values")
        if mask is None:
            self.mask = np.ones(self.values.shape, dtype=bool)
        else:
            self.mask = np.asarray(mask, dtype=bool)
            if self.mask.shape != self.values.shape:
                raise InputError("mask shape mismatch")

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    @property
    def full(self) -> bool:
        return bool(np.all(self.mask))

    def node_coords(self) -> np.ndarray:
        """All lattice node coordinates, C-ordered, shape (N, ndim)."""
        axes = [self.origin[a] + self.spacing * np.arange(s) for a, s in enumerate(self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def like(self, values, mask=None) -> "GridFunction":
        return GridFunction(self.origin, self.spacing, values,
                            self.mask if mask is None else mask)

    @classmethod
    def from_box(cls, lo, hi, per_axis: int, fn=None, mask_fn=None) -> "GridFunction":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if per_axis < 3:
            raise InputError("need at least 3 nodes per axis")
        spacings = (hi - lo) / (per_axis - 1)
        if np.max(np.abs(spacings - spacings[0])) > 1e-12 * max(1.0, abs(spacings[0])):
            raise InputError("box is not square: uniform spacing required")
        shape = (per_axis,) * len(lo)
        axes = [np.linspace(lo[a], hi[a], per_axis) for a in range(len(lo))]
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.zeros(shape) if fn is None else \
            np.apply_along_axis(fn, 1, coords).reshape(shape)
        mask = None if mask_fn is None else \
            np.apply_along_axis(mask_fn, 1, coords).reshape(shape).astype(bool)
        return cls(lo, float(spacings[0]), vals, mask)

    @classmethod
    def on_unit_ball(cls, n: int, per_axis: int, fn=None) -> "GridFunction":
        g = cls.from_box(-np.ones(n), np.ones(n), per_axis, fn=fn)
        C = g.node_coords()
        ball = (np.sum(C * C, axis=1) <= 1.0 + 1e-12).reshape(g.shape)
        g.mask = ball
        return g

    def to_csv(self, path):
        cols = [f"x{a + 1}" for a in range(self.ndim)] + ["value"]
        C = self.node_coords()[self.mask.ravel()]
        V = self.values.ravel()[self.mask.ravel()]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for row, v in zip(C, V):
                fh.write(",".join(repr(float(c)) for c in row) + f",{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        coords, vals = data[:, :-1], data[:, -1]
        axes = [np.unique(coords[:, a]) for a in range(coords.shape[1])]
        steps = np.concatenate([np.diff(a) for a in axes if len(a) > 1])
        if len(steps) == 0:
            raise InputError("degenerate grid in CSV")
        h = float(np.min(steps))
        origin = np.array([a[0] for a in axes])
        shape = tuple(int(round((a[-1] - a[0]) / h)) + 1 for a in axes)
        values = np.zeros(shape)
        mask = np.zeros(shape, dtype=bool)
        idx = tuple(
            np.rint((coords[:, a] - origin[a]) / h).astype(int) for a in range(len(axes))
        )
        values[idx] = vals
        mask[idx] = True
        return cls(origin, h, values, mask)


def _shift(a: np.ndarray, step: int, axis: int, fill=0.0) -> np.ndarray:
    """a shifted so out[i] = a[i + step] along axis, filled at the edge."""
    out = np.full_like(a, fill)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if step > 0:
        src[axis] = slice(step, None)
        dst[axis] = slice(None, -step)
    elif step < 0:
        src[axis] = slice(None, step)
        dst[axis] = slice(-step, None)
    else:
        return a.copy()
    out[tuple(dst)] = a[tuple(src)]
    return out


def masked_axis_derivative(values: np.ndarray, mask: np.ndarray, h: float, axis: int):
    """Central differences where both neighbors are in the mask, one-sided
    otherwise; returns (derivative, defined_mask)."""
    vp = _shift(values, +1, axis)
    vm = _shift(values, -1, axis)
    mp = _shift(mask.astype(float), +1, axis) > 0.5
    mm = _shift(mask.astype(float), -1, axis) > 0.5
    d = np.zeros_like(values)
    central = mask & mp & mm
    fwd = mask & mp & ~mm
    bwd = mask & mm & ~mp
    d[central] = (vp[central] - vm[central]) / (2.0 * h)
    d[fwd] = (vp[fwd] - values[fwd]) / h
    d[bwd] = (values[bwd] - vm[bwd]) / h
    return d, central | fwd | bwd


@dataclass
class SobolevNormReport:
    p: float
    lp_part: float
    gradient_parts: list
    total: float
    nodes_used: int
    nodes_isolated: int


def w1p_norm(u: GridFunction, p: float) -> SobolevNormReport:
    """Cell-volume-weighted L^p norm of u plus per-axis derivative L^p norms."""
    if not (1.0 <= p < math.inf):
        raise InputError("p must lie in [1, inf)")
    if min(u.shape) < 3:
        raise InputError("grid too coarse: need >= 3 nodes per axis")
    vol = u.spacing**u.ndim
    m = u.mask
    lp = float((vol * np.sum(np.abs(u.values[m]) ** p)) ** (1.0 / p))
    parts = []
    isolated = 0
    for axis in range(u.ndim):
        d, ok = masked_axis_derivative(u.values, m, u.spacing, axis)
        isolated += int(np.sum(m & ~ok))
        parts.append(float((vol * np.sum(np.abs(d[ok]) ** p)) ** (1.0 / p)))
    return SobolevNormReport(
        p=p,
        lp_part=lp,
        gradient_parts=parts,
        total=lp + sum(parts),
        nodes_used=int(np.sum(m)),
        nodes_isolated=isolated,
    )


def maximal_function(u: GridFunction) -> GridFunction:
    """Discrete Hardy-Littlewood maximal function of |u| over the radius ladder."""
    if not u.full:
        raise InputError("maximal function needs a full box grid (no mask)")
    return u.like(_kernels.maximal_function_grid(u.values, u.spacing))


@dataclass
class RestrictionResult:
    t: float
    p: float
    kept_mask: np.ndarray
    excluded_mask: np.ndarray
    kept_nodes: int
    excluded_nodes: int
    empirical_lipschitz_constant: float
    measure_excluded: float
    lip_p_times_measure: float
    degenerate: bool


def _interior_mask(shape) -> np.ndarray:
    m = np.ones(shape, dtype=bool)
    for axis in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[axis] = 0
        m[tuple(sl)] = False
        sl[axis] = -1
        m[tuple(sl)] = False
    return m


def _pairwise_quotient(space: MetricSpace, dom: np.ndarray, img: np.ndarray) -> float:
    params = space.lp_params()
    if params is not None:
        p, w, a = params
        return float(_kernels.pairwise_max_quotient(dom, img, p, w, a))
    best = 0.0
    for i in range(len(dom) - 1):
        dd = np.sqrt(np.sum((dom[i + 1 :] - dom[i]) ** 2, axis=1))
        di = space.dist_coords(np.broadcast_to(img[i], img[i + 1 :].shape), img[i + 1 :])
        ok = dd > 0
        if np.any(ok):
            best = max(best, float(np.max(di[ok] / dd[ok])))
    return best


def lipschitz_restriction(f: MapOracle, h: GridFunction, t: float,
                          p: float = 1.0) -> RestrictionResult:
    """Threshold the maximal function of the majorant h and measure the
    empirical Lipschitz constant of f on the kept interior nodes.

    Excluded nodes are E_t = {Mh >= t}; the result also carries
    Lip^p * |excluded| whose decay along a growing t schedule is the
    discrete restriction-quality trend.
    """
    if t <= 0:
        raise InputError("threshold t must be positive")
    if np.any(h.values < 0):
        raise InputError("majorant must be nonnegative")
    Mh = maximal_function(h).values
    interior = _interior_mask(h.shape)
    excluded = interior & (Mh >= t)
    kept = interior & (Mh < t)
    coords = h.node_coords()
    kept_flat = kept.ravel()
    degenerate = int(np.sum(kept_flat)) < 2
    if degenerate:
        lip = 0.0
    else:
        dom = coords[kept_flat]
        lip = _pairwise_quotient(f.target, dom, f.eval_coords(dom))
    measure = float(np.sum(excluded)) * h.spacing**h.ndim
    return RestrictionResult(
        t=float(t),
        p=float(p),
        kept_mask=kept,
        excluded_mask=excluded,
        kept_nodes=int(np.sum(kept)),
        excluded_nodes=int(np.sum(excluded)),
        empirical_lipschitz_constant=lip,
        measure_excluded=measure,
        lip_p_times_measure=lip**p * measure,
        degenerate=degenerate,
    )


def radial_truncation(space: MetricSpace, v, R: float):
    """Retract onto the closed R-ball: v unchanged inside, R v / ||v|| outside.

    2-Lipschitz on any normed catalog space.  Accepts a Point or raw
    coordinates and returns the same kind.
    """
    if R <= 0:
        raise InputError("truncation radius must be positive")
    if not space.is_normed:
        raise InputError(f"radial truncation needs a normed space, not {space.space_id}")
    is_point = isinstance(v, Point)
    c = v.coords if is_point else np.atleast_1d(np.asarray(v, dtype=float))
    nrm = space.norm(c)
    out = c if nrm <= R else (R / nrm) * c
    return space.point(out) if is_point else out


@dataclass
class ReshetnyakReport:
    max_violation: float
    violation_count: int
    checks: int
    nonconverged: int
    canonical_deficit: float
    canonical_ok: bool
    ibp_defect: float


def _bump_profile(n_nodes: int) -> np.ndarray:
    """Smooth-ish profile vanishing on a two-node collar (exact discrete IBP)."""
    w = np.zeros(n_nodes)
    inner = n_nodes - 4
    if inner > 0:
        t = np.linspace(0.0, 1.0, inner + 2)[1:-1]
        w[2 : 2 + inner] = (t * (1.0 - t)) ** 2
    return w


def reshetnyak_gradient_check(f: MapOracle, g: GridFunction, gauge: GaugeSequence,
                              tol: float = 1e-6, fd_tol: float = 0.05) -> ReshetnyakReport:
    """Check |grad(phi_k . f)| <= g + tol at interior nodes, for every gauge entry.

    Gradients are grid central differences; entries whose h and 2h stencils
    disagree by more than the relative fd_tol are counted as non-converged
    (kinks of phi_k . f) and excluded.  Also compares g against the canonical
    candidate sqrt(sum_j max_k |d_j phi_k.f|^2) and reports the discrete
    integration-by-parts defect of the tabulated compositions against a bump
    field vanishing near the boundary (exact for central differences, so any
    defect is roundoff or an indexing bug).
    """
    if not g.full:
        raise InputError("candidate gradient must live on a full box grid")
    coords = g.node_coords()
    Phi = gauge.eval_coords(f.eval_coords(coords))  # (N, K)
    K = Phi.shape[1]
    shape = g.shape
    fields = Phi.T.reshape((K,) + shape)
    h = g.spacing
    interior = _interior_mask(shape)

    grads = []
    stable = np.ones((K,) + shape, dtype=bool)
    for axis in range(g.ndim):
        d1 = (_shift(fields, -1, axis + 1) - _shift(fields, +1, axis + 1)) / (2.0 * h)
        d2 = (_shift(fields, -2, axis + 1) - _shift(fields, +2, axis + 1)) / (4.0 * h)
        grads.append(d1)
        # two-resolution diagnostic where the wider stencil exists
        wide = _wide_interior(shape, axis)
        stable &= ~wide | (np.abs(d1 - d2) <= fd_tol * np.maximum(1.0, np.abs(d1)))
    grad_norm = np.sqrt(sum(d * d for d in grads))

    ok_entries = stable & interior
    nonconv = int(np.sum(interior & ~stable))
    diff = grad_norm - (g.values + tol)
    viol = (diff > 0) & ok_entries
    max_violation = float(np.max(np.where(ok_entries, grad_norm - g.values, -np.inf)))

    per_axis_tn = [np.max(np.abs(d), axis=0) for d in grads]  # max over k
    canonical = np.sqrt(sum(t * t for t in per_axis_tn))
    deficit = float(np.max(np.where(interior, canonical - g.values, -np.inf)))

    w = _bump_weight(shape)
    ibp = 0.0
    voln = h**g.ndim
    for axis in range(g.ndim):
        dw = (_shift(w, -1, axis) - _shift(w, +1, axis)) / (2.0 * h)
        for k in range(K):
            du = grads[axis][k]
            val = abs(float(np.sum((w * du + dw * fields[k])[interior]) * voln))
            ibp = max(ibp, val)

    return ReshetnyakReport(
        max_violation=max(max_violation, 0.0),
        violation_count=int(np.sum(viol)),
        checks=int(np.sum(ok_entries)),
        nonconverged=nonconv,
        canonical_deficit=max(deficit, 0.0),
        canonical_ok=bool(deficit <= tol),
        ibp_defect=ibp,
    )


def _wide_interior(shape, axis) -> np.ndarray:
    m = np.ones(shape, dtype=bool)
    sl = [slice(None)] * len(shape)
    sl[axis] = slice(0, 2)
    m[tuple(sl)] = False
    sl[axis] = slice(-2, None)
    m[tuple(sl)] = False
    return m


def _bump_weight(shape) -> np.ndarray:
    w = _bump_profile(shape[0])
    for s in shape[1:]:
        w = np.multiply.outer(w, _bump_profile(s))
    return w


@dataclass
class W1pDiffReport:
    p: float
    h_schedule: np.ndarray
    norms: list
    norm_totals: np.ndarray
    excluded_per_h: list
    trend_ok: bool


def w1p_differentiability_check(f: MapOracle, sigma, x, p: float, h_schedule,
                                ball_per_axis: int = 33,
                                tol: float = 1e-6) -> W1pDiffReport:
    """W^{1,p}(B) norm of eta_h(nu) = d(f(x+h nu), f(x))/h - sigma(nu) per h.

    B is the unit-ball grid in direction space; nodes whose shifted point
    x + h nu leaves the domain are excluded and counted.  The trend flag
    requires a nonincreasing tail and a final norm below tol.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h_schedule = np.asarray(h_schedule, dtype=float)
    if np.any(h_schedule <= 0) or np.any(np.diff(h_schedule) >= 0):
        raise InputError("h schedule must be positive and strictly decreasing")
    if f.domain.clearance(x) < h_schedule[0]:
        raise InputError("insufficient clearance for the largest h")
    ball = GridFunction.on_unit_ball(f.domain.ndim, ball_per_axis)
    nodes = ball.node_coords()
    in_ball = ball.mask.ravel()
    from .seminorm import Seminorm  # local import avoids a cycle

    sig = sigma.eval_many(nodes) if isinstance(sigma, Seminorm) else \
        np.array([sigma(v) for v in nodes])
    base = f.eval_coords(x[None, :])[0]
    norms, totals, excluded = [], [], []
    for h in h_schedule:
        probes = x[None, :] + h * nodes
        valid = np.all((probes >= f.domain.lo) & (probes <= f.domain.hi), axis=1)
        use = in_ball & valid
        eta = np.zeros(len(nodes))
        img = f.eval_coords(probes[use])
        d = f.target.dist_coords(img, np.broadcast_to(base, img.shape))
        eta[use] = d / h - sig[use]
        gf = GridFunction(ball.origin, ball.spacing, eta.reshape(ball.shape),
                          use.reshape(ball.shape))
        rep = w1p_norm(gf, p)
        norms.append(rep)
        totals.append(rep.total)
        excluded.append(int(np.sum(in_ball & ~valid)))
    totals = np.array(totals)
    tail_ok = bool(np.all(np.diff(totals[len(totals) // 2 :]) <= 1e-12)) if len(totals) > 1 else True
    return W1pDiffReport(
        p=p,
        h_schedule=h_schedule,
        norms=norms,
        norm_totals=totals,
        excluded_per_h=excluded,
        trend_ok=bool(tail_ok and totals[-1] <= tol),
    )
