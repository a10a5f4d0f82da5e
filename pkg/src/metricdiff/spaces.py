"""Pointed metric spaces as distance oracles over real coordinate vectors.

Every space in the catalog stores its points as finite-dimensional real
vectors and exposes a distance oracle plus, where available, a norm.  The
base point z0 is the zero vector in all linear spaces; wrappers (snowflake,
max-product) inherit it from their components.  All spaces are immutable
after construction and their distance evaluation is pure.

Completeness is not verified: every catalog space is a finite-dimensional
vector space (or a wrapper around one) and hence trivially complete.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "Point",
    "MetricSpace",
    "Euclidean",
    "Lp",
    "LebesgueGrid",
    "Snowflake",
    "ProductMax",
    "MetricAxiomReport",
    "validate_metric_axioms",
    "space_from_descriptor",
]


def _as_coords(coords, dim: int) -> np.ndarray:
    c = np.array(coords, dtype=float)  # copy: points own their storage
    if c.ndim != 1 or c.shape[0] != dim:
        raise InputError(f"expected a length-{dim} coordinate vector, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise InputError("non-finite coordinates")
    return c


@dataclass(frozen=True)
class Point:
    """A point of a concrete space: coordinates plus the owning space id."""

    coords: np.ndarray
    space_id: str

    def __post_init__(self):
        object.__setattr__(self, "coords", np.array(self.coords, dtype=float))
        self.coords.setflags(write=False)


class MetricSpace:
    """Base distance oracle.  Subclasses define `_dist` and optionally a norm."""

    space_id: str
    dim: int

    @property
    def base_point(self) -> Point:
        return Point(np.zeros(self.dim), self.space_id)

    @property
    def is_normed(self) -> bool:
        return False

    def point(self, coords) -> Point:
        return Point(_as_coords(coords, self.dim), self.space_id)

    def _check(self, p: Point):
        if p.space_id != self.space_id:
            raise InputError(f"point of space {p.space_id!r} passed to {self.space_id!r}")

    def distance(self, x: Point, y: Point) -> float:
        self._check(x)
        self._check(y)
        return float(self.dist_coords(x.coords[None, :], y.coords[None, :])[0])

    def dist_coords(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Row-wise distances between coordinate arrays of shape (N, dim)."""
        raise NotImplementedError

    def cross_dist(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """All-pairs distances, shape (len(A), len(B)); one row at a time to bound memory."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        out = np.empty((A.shape[0], B.shape[0]))
        for i in range(A.shape[0]):
            out[i] = self.dist_coords(np.broadcast_to(A[i], B.shape), B)
        return out

    def norm(self, coords: np.ndarray) -> float:
        raise InputError(f"{self.space_id} is not a normed space")

    def lp_params(self):
        """(p, cell_weight, alpha) when d(x,y) = (w * sum |xi-yi|^p)^(alpha/p), else None.

        Used by the compiled pairwise kernel; spaces without such a form go
        through the generic blocked path.
        """
        return None

    def __repr__(self):
        return self.space_id


class Lp(MetricSpace):
    """R^m with the l^p norm, p in [1, inf]."""

    def __init__(self, dim: int, p: float, _tag: str | None = None):
        if dim < 1:
            raise InputError("dimension must be >= 1")
        if not (p >= 1):
            raise InputError("p must be >= 1 (use math.inf for the max norm)")
        self.dim = int(dim)
        self.p = float(p)
        self.space_id = _tag or (f"lp({dim},inf)" if math.isinf(p) else f"lp({dim},{p:g})")

    @property
    def is_normed(self) -> bool:
        return True

    def norm(self, coords) -> float:
        c = _as_coords(coords, self.dim)
        if math.isinf(self.p):
            return float(np.max(np.abs(c)))
        return float(np.sum(np.abs(c) ** self.p) ** (1.0 / self.p))

    def dist_coords(self, X, Y):
        D = np.abs(np.asarray(X, dtype=float) - np.asarray(Y, dtype=float))
        if math.isinf(self.p):
            return np.max(D, axis=-1)
        return np.sum(D**self.p, axis=-1) ** (1.0 / self.p)

    def lp_params(self):
        return (self.p, 1.0, 1.0)


class Euclidean(Lp):
    """R^m with the Euclidean norm."""

    def __init__(self, dim: int):
        super().__init__(dim, 2.0, _tag=f"euclidean({dim})")


class LebesgueGrid(MetricSpace):
    """L^p([0, L]) discretized to m cells; a vector holds cell averages.

    The norm carries the cell weight L/m, so the indicator of [0, L]
    (all-ones vector) has L^1 norm exactly L.
    """

    def __init__(self, cells: int, p: float, length: float = 1.0):
        if cells < 1:
            raise InputError("need at least one cell")
        if not (p >= 1):
            raise InputError("p must be >= 1")
        if length <= 0:
            raise InputError("interval length must be positive")
        self.dim = int(cells)
        self.p = float(p)
        self.length = float(length)
        self.cell_weight = self.length / self.dim
        self.space_id = (
            f"lebesgue({cells},inf,{length:g})"
            if math.isinf(p)
            else f"lebesgue({cells},{p:g},{length:g})"
        )

    @property
    def is_normed(self) -> bool:
        return True

    def norm(self, coords) -> float:
        c = _as_coords(coords, self.dim)
        if math.isinf(self.p):
            return float(np.max(np.abs(c)))
        return float((self.cell_weight * np.sum(np.abs(c) ** self.p)) ** (1.0 / self.p))

    def dist_coords(self, X, Y):
        D = np.abs(np.asarray(X, dtype=float) - np.asarray(Y, dtype=float))
        if math.isinf(self.p):
            return np.max(D, axis=-1)
        return (self.cell_weight * np.sum(D**self.p, axis=-1)) ** (1.0 / self.p)

    def lp_params(self):
        if math.isinf(self.p):
            return (self.p, 1.0, 1.0)
        return (self.p, self.cell_weight, 1.0)


class Snowflake(MetricSpace):
    """d(x, y) = base_distance(x, y)^alpha for alpha in (0, 1]."""

    def __init__(self, base: MetricSpace, alpha: float):
        if not (0.0 < alpha <= 1.0):
            raise InputError("snowflake exponent must lie in (0, 1]")
        self.base = base
        self.alpha = float(alpha)
        self.dim = base.dim
        self.space_id = f"snowflake({base.space_id},{alpha:g})"

    def dist_coords(self, X, Y):
        return self.base.dist_coords(X, Y) ** self.alpha

    def lp_params(self):
        inner = self.base.lp_params()
        if inner is None:
            return None
        p, w, a = inner
        return (p, w, a * self.alpha)


class ProductMax(MetricSpace):
    """Product of spaces with the max metric; coordinates are concatenated."""

    def __init__(self, spaces):
        spaces = tuple(spaces)
        if not spaces:
            raise InputError("product of no spaces")
        self.spaces = spaces
        self.dim = sum(s.dim for s in spaces)
        self._offsets = np.cumsum([0] + [s.dim for s in spaces])
        self.space_id = "product_max(" + ",".join(s.space_id for s in spaces) + ")"

    @property
    def is_normed(self) -> bool:
        return all(s.is_normed for s in self.spaces)

    def norm(self, coords) -> float:
        c = _as_coords(coords, self.dim)
        return max(
            s.norm(c[self._offsets[i] : self._offsets[i + 1]])
            for i, s in enumerate(self.spaces)
        )

    def dist_coords(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        parts = [
            s.dist_coords(
                X[..., self._offsets[i] : self._offsets[i + 1]],
                Y[..., self._offsets[i] : self._offsets[i + 1]],
            )
            for i, s in enumerate(self.spaces)
        ]
        return np.max(np.stack(parts, axis=0), axis=0)


@dataclass
class MetricAxiomReport:
    space_id: str
    sample_size: int
    max_symmetry_defect: float
    max_triangle_defect: float
    pairs_checked: int = 0
    triples_checked: int = 0


def validate_metric_axioms(space: MetricSpace, sample) -> MetricAxiomReport:
    """Brute-force symmetry and triangle-inequality defects over a point sample."""
    pts = list(sample)
    if not pts:
        raise InputError("empty sample")
    C = np.stack([p.coords for p in pts])
    D = space.cross_dist(C, C)
    sym = float(np.max(np.abs(D - D.T))) if len(pts) > 1 else 0.0
    # triangle defect: d(x,z) - d(x,y) - d(y,z), maximized over all triples
    tri = float(np.max(D[:, None, :] - D[:, :, None] - D[None, :, :]))
    n = len(pts)
    return MetricAxiomReport(
        space_id=space.space_id,
        sample_size=n,
        max_symmetry_defect=sym,
        max_triangle_defect=max(tri, 0.0),
        pairs_checked=n * n,
        triples_checked=n * n * n,
    )


def _split_args(body: str):
    """Split a descriptor argument list on top-level commas."""
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur).strip())
    return parts


def space_from_descriptor(text: str) -> MetricSpace:
    """Parse a space descriptor like ``euclidean(2)`` or ``snowflake(euclidean(1),0.5)``."""
    text = text.strip()
    head, sep, rest = text.partition("(")
    if not sep or not rest.endswith(")"):
        raise InputError(f"bad space descriptor: {text!r}")
    args = _split_args(rest[:-1])
    head = head.strip().lower()

    def _num(s):
        return math.inf if s.strip().lower() in ("inf", "infinity") else float(s)

    if head == "euclidean":
        return Euclidean(int(args[0]))
    if head == "lp":
        return Lp(int(args[0]), _num(args[1]))
    if head == "lebesgue":
        length = _num(args[2]) if len(args) > 2 else 1.0
        return LebesgueGrid(int(args[0]), _num(args[1]), length)
    if head == "snowflake":
        return Snowflake(space_from_descriptor(args[0]), float(args[1]))
    if head == "product_max":
        return ProductMax(space_from_descriptor(a) for a in args)
    raise InputError(f"unknown space kind {head!r}")
