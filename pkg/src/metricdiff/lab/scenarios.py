"""Scenario catalog: concrete maps with domains, targets, and known answers.

Each scenario bundles a map oracle with the analytic value of its metric
differential where a closed form exists, per-scenario finite-difference
parameters, and the list of suites it is meant to exercise.  Order and
contents are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..derivatives import Box, LipschitzMap, MapOracle
from ..errors import ConfigError
from ..sobolev import radial_truncation
from ..spaces import Euclidean, LebesgueGrid, Lp

__all__ = ["Scenario", "catalog", "get_scenario", "psi_catalog"]

L1_CELLS = 256
EMBED_ANCHORS = 24


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    make: object                       # () -> MapOracle
    analytic_md: object = None         # (x, nu) -> float
    fd_tol: float = 1e-6
    halvings: int = 8
    md_tol: float = 1e-3               # fan-gap assertion tolerance vs analytic
    suites: tuple = ()
    sample_box: object = None          # Box to draw evaluation points from
    linear_matrix: object = None       # exact Jacobian for linear scenarios
    linear_exact: bool = False         # quotients equal the seminorm exactly
    majorant: object = None            # (coords (N,n), h_grid) -> (N,) upper gradient
    compositions: object = None        # (target) -> [LipschitzMap]

    def oracle(self) -> MapOracle:
        return self.make()

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        box = self.sample_box or _shrunk(self.oracle().domain, 0.25)
        return rng.uniform(box.lo, box.hi, size=(count, box.ndim))

    def md_callable(self, x):
        if self.analytic_md is None:
            return None
        x = np.asarray(x, dtype=float)
        return lambda nu: self.analytic_md(x, np.asarray(nu, dtype=float))


def _shrunk(box: Box, frac: float) -> Box:
    half = 0.5 * (box.hi - box.lo) * frac
    return Box(box.lo + half, box.hi - half)


def psi_catalog(space, radius: float = 3.0):
    """Post-composition maps used by the composition suite."""
    return [
        LipschitzMap(space, space, lambda v: v, 1.0, "identity"),
        LipschitzMap(space, space, lambda v: 0.5 * np.asarray(v, dtype=float), 0.5,
                     "half-scale"),
        LipschitzMap(space, space,
                     lambda v, _R=radius: radial_truncation(space, v, _R), 2.0,
                     f"ball-clip-{radius:g}"),
    ]


# -- map constructors ---------------------------------------------------------

def _make_linear(A: np.ndarray, target):
    A = np.asarray(A, dtype=float)
    dom = Box(-np.ones(A.shape[1]), np.ones(A.shape[1]))
    # valid for any target norm: ||A nu|| <= sqrt(sum_j ||A e_j||^2) |nu|_2
    lip = float(np.sqrt(sum(target.norm(A[:, j]) ** 2 for j in range(A.shape[1]))))

    def make():
        return MapOracle(dom, target, fn=lambda x: A @ x,
                         fn_batch=lambda X: X @ A.T,
                         lipschitz_bound=lip, name="linear")

    return make


def _abs_make():
    dom = Box([-1.0], [1.0])
    tgt = Euclidean(1)
    return MapOracle(dom, tgt, fn=lambda x: np.abs(x),
                     fn_batch=lambda X: np.abs(X),
                     lipschitz_bound=1.0, name="abs")


def _l1_curve_values(T: np.ndarray) -> np.ndarray:
    # cell i of [0,1] holds the average of the indicator of [0, t]
    i = np.arange(L1_CELLS)
    return np.clip(L1_CELLS * T[:, :1] - i[None, :], 0.0, 1.0)


def _l1_curve_make():
    dom = Box([0.05], [0.95])
    tgt = LebesgueGrid(L1_CELLS, 1.0, 1.0)
    return MapOracle(dom, tgt, fn=lambda x: _l1_curve_values(x[None, :])[0],
                     fn_batch=_l1_curve_values,
                     lipschitz_bound=1.0, name="indicator-front")


def _coordinate_make():
    dom = Box(-np.ones(2), np.ones(2))
    tgt = Euclidean(1)
    return MapOracle(dom, tgt, fn=lambda x: x[:1],
                     fn_batch=lambda X: X[:, :1],
                     lipschitz_bound=1.0, name="first-coordinate")


def _embedded_curve_make():
    # arc through a truncated Kuratowski embedding of the plane into l^inf
    tk = np.linspace(-1.0, 1.0, EMBED_ANCHORS)
    anchors = 0.5 * np.stack([np.cos(tk), np.sin(tk)], axis=1)
    anchor_norms = np.linalg.norm(anchors, axis=1)
    dom = Box([-1.0], [1.0])
    tgt = Lp(EMBED_ANCHORS, np.inf)

    def batch(T):
        pts = 0.5 * np.stack([np.cos(T[:, 0]), np.sin(T[:, 0])], axis=1)
        d = np.sqrt(np.sum((pts[:, None, :] - anchors[None, :, :]) ** 2, axis=2))
        return d - anchor_norms[None, :]

    return MapOracle(dom, tgt, fn=lambda x: batch(x[None, :])[0], fn_batch=batch,
                     lipschitz_bound=0.5, name="embedded-arc")


def _sqrt_spike_make():
    dom = Box([-1.0], [1.0])
    tgt = Euclidean(1)
    return MapOracle(dom, tgt, fn=lambda x: np.sign(x) * np.sqrt(np.abs(x)),
                     fn_batch=lambda X: np.sign(X) * np.sqrt(np.abs(X)),
                     lipschitz_bound=None, name="sqrt-spike")


def _warp_make():
    dom = Box(-np.ones(2), np.ones(2))
    tgt = Euclidean(2)

    def batch(X):
        return np.stack([X[:, 0] + 0.25 * np.sin(X[:, 1]),
                         X[:, 1] + 0.25 * np.sin(X[:, 0])], axis=1)

    return MapOracle(dom, tgt, fn=lambda x: batch(x[None, :])[0], fn_batch=batch,
                     lipschitz_bound=1.25, name="warp")


def _warp_md(x, nu):
    J = np.array([[1.0, 0.25 * np.cos(x[1])], [0.25 * np.cos(x[0]), 1.0]])
    return float(np.linalg.norm(J @ nu))


_A1 = np.diag([1.0, 2.0])
_A9 = np.array([[1.0, 0.0], [0.3, 0.7]])


def catalog() -> list:
    """All scenarios, stable order."""
    return [
        Scenario(
            name="s1-linear",
            description="diag(1,2) linear map into the Euclidean plane",
            make=_make_linear(_A1, Euclidean(2)),
            analytic_md=lambda x, nu: float(np.linalg.norm(_A1 @ nu)),
            md_tol=1e-3,
            suites=("metric-axioms", "gauge-audit", "md-consistency",
                    "norm-identity", "w1p-diff", "dual-recovery"),
            linear_matrix=_A1,
            linear_exact=True,
        ),
        Scenario(
            name="s2-abs",
            description="t -> |t| into R: metrically differentiable at 0, not linearly",
            make=_abs_make,
            analytic_md=lambda x, nu: float(abs(nu[0])),
            fd_tol=1e-3,
            md_tol=1e-6,
            suites=("metric-axioms", "md-consistency", "norm-identity",
                    "md-vs-linear"),
        ),
        Scenario(
            name="s3-l1-curve",
            description="t -> indicator of [0,t] in discretized L1: isometric, "
                        "norm-nondifferentiable",
            make=_l1_curve_make,
            analytic_md=lambda x, nu: float(abs(nu[0])),
            md_tol=1e-6,
            suites=("metric-axioms", "md-consistency", "norm-identity",
                    "md-vs-linear", "dual-recovery"),
        ),
        Scenario(
            name="s4-rank-deficient",
            description="(x1, x2) -> x1: degenerate metric differential |nu_1|",
            make=_coordinate_make,
            analytic_md=lambda x, nu: float(abs(nu[0])),
            md_tol=1e-3,
            suites=("metric-axioms", "md-consistency", "norm-identity",
                    "w1p-diff", "dual-recovery"),
            linear_matrix=np.array([[1.0, 0.0]]),
            linear_exact=True,
        ),
        Scenario(
            name="s5-embedded-curve",
            description="smooth arc through a truncated Kuratowski embedding into l-inf",
            make=_embedded_curve_make,
            analytic_md=lambda x, nu: 0.5 * float(abs(nu[0])),
            fd_tol=1e-3,
            halvings=12,
            md_tol=5e-2,
            suites=("metric-axioms", "gauge-audit", "md-consistency"),
        ),
        Scenario(
            name="s6-sqrt-spike",
            description="sign(x) sqrt|x|: Sobolev but not Lipschitz near 0",
            make=_sqrt_spike_make,
            analytic_md=None,
            fd_tol=1e-3,
            suites=("metric-axioms", "sobolev-restriction"),
            majorant=lambda X, h_grid: np.minimum(
                0.5 / np.sqrt(np.maximum(np.abs(X[:, 0]), 1e-300)),
                0.5 / np.sqrt(h_grid),
            ),
        ),
        Scenario(
            name="s7-composition",
            description="diag(1,2) base map with post-composition catalog",
            make=_make_linear(_A1, Euclidean(2)),
            analytic_md=lambda x, nu: float(np.linalg.norm(_A1 @ nu)),
            md_tol=1e-3,
            suites=("metric-axioms", "composition"),
            linear_matrix=_A1,
            linear_exact=True,
            compositions=psi_catalog,
        ),
        Scenario(
            name="s8-warp",
            description="smooth near-identity warp of the plane",
            make=_warp_make,
            analytic_md=_warp_md,
            halvings=14,
            md_tol=5e-3,
            suites=("metric-axioms", "md-consistency", "w1p-diff",
                    "dual-recovery"),
        ),
        Scenario(
            name="s9-linear-linf",
            description="linear map into the max-norm plane",
            make=_make_linear(_A9, Lp(2, np.inf)),
            analytic_md=lambda x, nu: float(np.max(np.abs(_A9 @ nu))),
            md_tol=1e-3,
            suites=("metric-axioms", "md-consistency", "dual-recovery"),
            linear_matrix=_A9,
            linear_exact=True,
        ),
    ]


def get_scenario(name: str, target: str | None = None) -> Scenario:
    for s in catalog():
        if s.name == name:
            return s if target is None else retarget(s, target)
    known = ", ".join(s.name for s in catalog())
    raise ConfigError(f"unknown scenario {name!r}; available: {known}")


def retarget(scn: Scenario, descriptor: str) -> Scenario:
    """Rebuild a linear scenario against another normed target space.

    Only scenarios defined by a matrix support this: the map is A x for any
    norm, and the analytic differential becomes ||A nu|| in the new norm.
    """
    from dataclasses import replace

    from ..spaces import space_from_descriptor

    if scn.linear_matrix is None:
        raise ConfigError(f"scenario {scn.name} does not support a target override")
    A = np.atleast_2d(np.asarray(scn.linear_matrix, dtype=float))
    space = space_from_descriptor(descriptor)
    if not space.is_normed:
        raise ConfigError(f"target override must be a normed space, got {descriptor!r}")
    if space.dim != A.shape[0]:
        raise ConfigError(
            f"target dimension {space.dim} does not match the map ({A.shape[0]})")
    return replace(
        scn,
        name=f"{scn.name}@{space.space_id}",
        make=_make_linear(A, space),
        analytic_md=lambda x, nu: float(space.norm(A @ np.asarray(nu, dtype=float))),
    )
