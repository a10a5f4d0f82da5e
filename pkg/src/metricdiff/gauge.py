"""Gauge sequences: 1-Lipschitz functionals vanishing at the base point.

A gauge sequence is an ordered family phi_k(x) = d(a_k, x) - d(a_k, z0)
built from anchor points a_k.  Each phi_k is 1-Lipschitz and phi_k(z0) = 0,
and the running max of |phi_k(x) - phi_k(y)| recovers d(x, y) from below,
exactly so when x or y is itself an anchor.  The truncation length K is a
first-class parameter: every sup over k in the calculus becomes a prefix
max with an audited underestimation gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .spaces import MetricSpace, Point

__all__ = [
    "GaugeFunctional",
    "GaugeSequence",
    "build_kuratowski_gauge",
    "gauge_distance",
    "gauge_quality_audit",
    "GaugeAuditReport",
]


@dataclass(frozen=True)
class GaugeFunctional:
    """phi(x) = d(anchor, x) - d(anchor, z0)."""

    anchor: Point
    space: MetricSpace
    base_dist: float

    def __call__(self, x: Point) -> float:
        return self.space.distance(self.anchor, x) - self.base_dist

    def eval_coords(self, C: np.ndarray) -> np.ndarray:
        C = np.atleast_2d(np.asarray(C, dtype=float))
        return self.space.cross_dist(self.anchor.coords[None, :], C)[0] - self.base_dist


class GaugeSequence:
    """Ordered gauge functionals over one space, with their source sample."""

    def __init__(self, space: MetricSpace, functionals, source_sample):
        functionals = list(functionals)
        if not functionals:
            raise InputError("a gauge sequence needs at least one functional")
        self.space = space
        self.functionals = functionals
        self.source_sample = list(source_sample)
        self.anchors = np.stack([f.anchor.coords for f in functionals])
        self.base_dists = np.array([f.base_dist for f in functionals])
        self.gauge_id = f"kuratowski[{len(functionals)}]@{space.space_id}"

    def __len__(self) -> int:
        return len(self.functionals)

    def evaluate(self, x: Point) -> np.ndarray:
        """(phi_1(x), ..., phi_K(x))."""
        return self.eval_coords(x.coords[None, :])[0]

    def eval_coords(self, C: np.ndarray) -> np.ndarray:
        """Gauge matrix for coordinate rows C: shape (len(C), K)."""
        C = np.atleast_2d(np.asarray(C, dtype=float))
        return self.space.cross_dist(self.anchors, C).T - self.base_dists

    def truncate(self, K: int) -> "GaugeSequence":
        if not (1 <= K <= len(self)):
            raise InputError(f"truncation length {K} outside 1..{len(self)}")
        return GaugeSequence(self.space, self.functionals[:K], self.source_sample[:K])


def build_kuratowski_gauge(space: MetricSpace, sample) -> GaugeSequence:
    """Gauge from a point sample, in sample order: phi_k = d(x_k, .) - d(x_k, z0)."""
    pts = list(sample)
    if not pts:
        raise InputError("empty gauge sample")
    z0 = space.base_point
    fns = [GaugeFunctional(p, space, space.distance(p, z0)) for p in pts]
    return GaugeSequence(space, fns, pts)


def gauge_distance(g: GaugeSequence, x: Point, y: Point, K: int) -> float:
    """max_{k<=K} |phi_k(x) - phi_k(y)|; a lower bound for d(x, y), monotone in K."""
    if K < 1:
        raise InputError("K must be >= 1")
    if K > len(g):
        raise InputError(f"K={K} exceeds gauge length {len(g)}")
    vx = g.evaluate(x)[:K]
    vy = g.evaluate(y)[:K]
    return float(np.max(np.abs(vx - vy)))


@dataclass
class GaugeAuditReport:
    gauge_id: str
    K_schedule: list
    max_relative_underestimate: list  # aligned with K_schedule
    pairs_used: int
    pairs_skipped_coincident: int


def gauge_quality_audit(g: GaugeSequence, test_pairs, K_schedule) -> GaugeAuditReport:
    """Per-K worst relative gap (d - gauge_distance) / d over the test pairs.

    Coincident pairs (d = 0) carry no information and are skipped but counted.
    The per-K maxima are nonincreasing in K since the prefix max only grows.
    """
    K_schedule = [int(K) for K in K_schedule]
    for K in K_schedule:
        if not (1 <= K <= len(g)):
            raise InputError(f"audit K={K} outside 1..{len(g)}")
    xs, ys, skipped = [], [], 0
    for x, y in test_pairs:
        if g.space.distance(x, y) == 0.0:
            skipped += 1
            continue
        xs.append(x.coords)
        ys.append(y.coords)
    if not xs:
        raise InputError("no usable (non-coincident) audit pairs")
    X = np.stack(xs)
    Y = np.stack(ys)
    D = g.space.dist_coords(X, Y)
    GX = g.eval_coords(X)
    GY = g.eval_coords(Y)
    diffs = np.abs(GX - GY)  # (pairs, K)
    worst = []
    for K in K_schedule:
        gd = np.max(diffs[:, :K], axis=1)
        worst.append(float(np.max((D - gd) / D)))
    return GaugeAuditReport(
        gauge_id=g.gauge_id,
        K_schedule=K_schedule,
        max_relative_underestimate=worst,
        pairs_used=len(xs),
        pairs_skipped_coincident=skipped,
    )
