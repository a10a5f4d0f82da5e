"""Seminorm fitting: the metric differential as a max of absolute linear forms.

A fitted seminorm stores one coefficient row per gauge functional; row k is
the central-difference gradient of phi_k . f at the fit point.  Evaluating
max_k |g_k . nu| then equals the truncated dual norm of the direction's
weak weak* derivative, exactly, because both are the same prefix max over
the same pairing matrix.  Degenerate seminorms (zero rows, nontrivial
kernels) are first-class; nothing is regularized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .derivatives import MapOracle, metric_directional_derivative, \
    truncated_weak_weak_star_derivative, _prep_steps
from .errors import InputError
from .gauge import GaugeSequence

__all__ = [
    "Seminorm",
    "direction_fan",
    "fit_metric_differential",
    "first_order_residual",
    "seminorm_axiom_check",
    "directional_consistency",
]


class Seminorm:
    """nu -> max_k |g_k . nu| over stored coefficient rows."""

    def __init__(self, forms: np.ndarray, origin=None):
        forms = np.atleast_2d(np.asarray(forms, dtype=float))
        if not np.all(np.isfinite(forms)):
            raise InputError("non-finite seminorm rows")
        self.forms = forms
        self.origin = None if origin is None else np.asarray(origin, dtype=float)
        self.entry_converged = np.ones(forms.shape, dtype=bool)
        self.diagnostic_ok = True

    @property
    def K(self) -> int:
        return self.forms.shape[0]

    @property
    def ndim(self) -> int:
        return self.forms.shape[1]

    def __call__(self, nu) -> float:
        nu = np.asarray(nu, dtype=float)
        return float(np.max(np.abs(self.forms @ nu)))

    def eval_many(self, V: np.ndarray) -> np.ndarray:
        V = np.atleast_2d(np.asarray(V, dtype=float))
        return np.max(np.abs(V @ self.forms.T), axis=1)


def direction_fan(n: int, count: int | None = None) -> np.ndarray:
    """Deterministic unit-direction fan: {-1,+1} for n=1, 64 directions for
    n=2, 128 low-discrepancy sphere points for n=3."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        count = 64 if count is None else count
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if n == 3:
        count = 128 if count is None else count
        i = np.arange(count) + 0.5
        phi = np.pi * (1.0 + np.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    raise InputError(f"no default fan for dimension {n}")


def fit_metric_differential(f: MapOracle, g: GaugeSequence, x, steps=None,
                            tol: float = 1e-6) -> Seminorm:
    """Row k = central-difference gradient of phi_k . f at x."""
    n = f.domain.ndim
    x_arr, _, steps = _prep_steps(f, x, np.eye(n)[0], steps)
    rows = np.empty((len(g), n))
    conv = np.empty((len(g), n), dtype=bool)
    for j in range(n):
        w = truncated_weak_weak_star_derivative(f, g, x_arr, np.eye(n)[j], steps, tol)
        rows[:, j] = w.pairings
        conv[:, j] = w.entry_converged
    sigma = Seminorm(rows, origin=x_arr)
    sigma.entry_converged = conv
    sigma.diagnostic_ok = bool(np.all(conv))
    return sigma


@dataclass
class FirstOrderReport:
    radii: np.ndarray
    max_residual: np.ndarray  # per radius
    o1_ok: bool


def first_order_residual(f: MapOracle, sigma, x, radii, fan,
                         tol: float = 1e-6) -> FirstOrderReport:
    """residual(r) = max over the fan of |d(f(x+r nu), f(x)) - sigma(r nu)| / r.

    The first-order approximation property holds when the residuals trend
    down and the last one is below tol.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    radii = np.asarray(radii, dtype=float)
    fan = np.atleast_2d(np.asarray(fan, dtype=float))
    if np.any(np.diff(radii) >= 0) or np.any(radii <= 0):
        raise InputError("radii must be strictly decreasing and positive")
    if f.domain.clearance(x) < radii[0] * np.max(np.linalg.norm(fan, axis=1)):
        raise InputError("insufficient clearance for the largest radius")
    base = f.eval_coords(x[None, :])[0]
    out = np.empty(len(radii))
    sig = sigma.eval_many(fan) if isinstance(sigma, Seminorm) else \
        np.array([sigma(v) for v in fan])
    for i, r in enumerate(radii):
        img = f.eval_coords(x[None, :] + r * fan)
        d = f.target.dist_coords(img, np.broadcast_to(base, img.shape))
        out[i] = np.max(np.abs(d - r * sig) / r)
    ok = bool(out[-1] <= tol and out[-1] <= out[0] + 1e-12)
    return FirstOrderReport(radii=radii, max_residual=out, o1_ok=ok)


@dataclass
class SeminormAxiomReport:
    homogeneity_defect: float
    subadditivity_defect: float
    nonnegative: bool


def seminorm_axiom_check(sigma, directions, scalars) -> SeminormAxiomReport:
    """Sampled |sigma(t nu)| - |t| sigma(nu) and sigma(nu+mu) - sigma(nu) - sigma(mu)."""
    V = np.atleast_2d(np.asarray(directions, dtype=float))
    vals = np.array([sigma(v) for v in V])
    hom = 0.0
    for t in scalars:
        tv = np.array([sigma(t * v) for v in V])
        hom = max(hom, float(np.max(np.abs(tv - abs(t) * vals))))
    sub = 0.0
    m = len(V)
    for i in range(m):
        si = sigma(V[i])
        for j in range(i, m):
            sub = max(sub, sigma(V[i] + V[j]) - si - vals[j])
    return SeminormAxiomReport(
        homogeneity_defect=hom,
        subadditivity_defect=max(sub, 0.0),
        nonnegative=bool(np.all(vals >= 0.0)),
    )


@dataclass
class DirectionalConsistencyReport:
    fan: np.ndarray
    sigma_values: np.ndarray
    md_values: np.ndarray
    max_gap: float
    nonconverged: int


def directional_consistency(f: MapOracle, sigma, x, fan, steps=None,
                            tol: float = 1e-6) -> DirectionalConsistencyReport:
    """Compare the fitted seminorm against independent metric quotients per direction."""
    fan = np.atleast_2d(np.asarray(fan, dtype=float))
    sig = sigma.eval_many(fan) if isinstance(sigma, Seminorm) else \
        np.array([sigma(v) for v in fan])
    md = np.empty(len(fan))
    bad = 0
    for i, nu in enumerate(fan):
        est = metric_directional_derivative(f, x, nu, steps, tol)
        md[i] = est.value
        bad += 0 if est.converged else 1
    return DirectionalConsistencyReport(
        fan=fan,
        sigma_values=sig,
        md_values=md,
        max_gap=float(np.max(np.abs(sig - md))),
        nonconverged=bad,
    )
