"""Finite-difference engines for metric and truncated weak weak* derivatives.

The metric directional derivative of a map f into a metric space is the
limit of d(f(x + h nu), f(x)) / |h|.  Its linear shadow is the truncated
functional whose k-th entry is the derivative of the scalar composition
phi_k . f along nu, with phi_k running over a gauge sequence; the sup-norm
of those entries recovers the metric derivative as the truncation grows.

Limits are taken over a geometric step schedule with explicit convergence
diagnostics: the engine never selects a value for a non-convergent
quotient sequence (where the underlying Banach-limit representative would
be arbitrary), it reports the failure instead.  One-sided quotients are
used for metric derivatives (the definition divides by |h|), central
differences for scalar compositions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClearanceError, InputError, PremiseError
from .gauge import GaugeSequence, build_kuratowski_gauge
from .spaces import MetricSpace, Point

__all__ = [
    "Box",
    "MapOracle",
    "LipschitzMap",
    "DerivativeEstimate",
    "TruncatedFunctional",
    "step_schedule",
    "metric_directional_derivative",
    "truncated_weak_weak_star_derivative",
    "truncated_norm",
    "composition_check",
    "locality_check",
    "signed_quotient_probe",
    "norm_derivative_probe",
    "local_image_gauge",
    "grid_image_gauge",
    "compose",
]

DEFAULT_H0_FRACTION = 16.0
DEFAULT_HALVINGS = 8


@dataclass(frozen=True)
class Box:
    """Axis-aligned domain box in R^n."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise InputError("box needs lo < hi per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def ndim(self) -> int:
        return self.lo.shape[0]

    def contains(self, x, margin: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo + margin) and np.all(x <= self.hi - margin))

    def clearance(self, x) -> float:
        """Distance from x to the boundary (negative outside)."""
        x = np.asarray(x, dtype=float)
        return float(min(np.min(x - self.lo), np.min(self.hi - x)))

    def grid_coords(self, per_axis) -> np.ndarray:
        """Lattice nodes including endpoints, C-ordered, shape (N, ndim)."""
        if np.isscalar(per_axis):
            per_axis = (int(per_axis),) * self.ndim
        axes = [np.linspace(self.lo[j], self.hi[j], per_axis[j]) for j in range(self.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def interior_grid(self, per_axis, margin: float) -> np.ndarray:
        pts = self.grid_coords(per_axis)
        keep = np.all((pts >= self.lo + margin) & (pts <= self.hi - margin), axis=1)
        return pts[keep]


class MapOracle:
    """Evaluable map f: Omega subset R^n -> X with an optional Lipschitz bound."""

    def __init__(self, domain: Box, target: MetricSpace, fn, lipschitz_bound=None,
                 name: str = "f", fn_batch=None):
        self.domain = domain
        self.target = target
        self.fn = fn
        self.fn_batch = fn_batch
        self.lipschitz_bound = lipschitz_bound
        self.name = name

    def __call__(self, x) -> Point:
        return self.target.point(self.eval_coords(np.atleast_2d(x))[0])

    def eval_coords(self, X: np.ndarray) -> np.ndarray:
        """Image coordinates for domain rows X, shape (N, target.dim)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.fn_batch is not None:
            out = np.asarray(self.fn_batch(X), dtype=float)
        else:
            out = np.stack([np.asarray(self.fn(x), dtype=float).ravel() for x in X])
        if out.shape != (X.shape[0], self.target.dim):
            raise InputError(
                f"map {self.name}: images of shape {out.shape}, "
                f"expected ({X.shape[0]}, {self.target.dim})"
            )
        if not np.all(np.isfinite(out)):
            raise InputError(f"map {self.name}: non-finite image values")
        return out

    def tabulate(self, per_axis):
        """(domain nodes, image coords) on the domain lattice."""
        X = self.domain.grid_coords(per_axis)
        return X, self.eval_coords(X)

    def check_lipschitz_bound(self, pairs_lhs, pairs_rhs, slack: float = 1e-8) -> float:
        """Worst sampled quotient; raises when a declared bound is exceeded."""
        lhs = np.atleast_2d(pairs_lhs)
        rhs = np.atleast_2d(pairs_rhs)
        dd = np.sqrt(np.sum((lhs - rhs) ** 2, axis=1))
        keep = dd > 0
        di = self.target.dist_coords(self.eval_coords(lhs[keep]), self.eval_coords(rhs[keep]))
        worst = float(np.max(di / dd[keep])) if np.any(keep) else 0.0
        if self.lipschitz_bound is not None and worst > self.lipschitz_bound + slack:
            raise InputError(
                f"map {self.name}: sampled quotient {worst} exceeds the declared "
                f"Lipschitz bound {self.lipschitz_bound}"
            )
        return worst


@dataclass(frozen=True)
class LipschitzMap:
    """Post-composition map psi: X -> Y from the catalog, with declared Lip(psi)."""

    source: MetricSpace
    target: MetricSpace
    fn: object
    lip: float
    name: str = "psi"

    def apply_coords(self, V: np.ndarray) -> np.ndarray:
        V = np.atleast_2d(np.asarray(V, dtype=float))
        return np.stack([np.asarray(self.fn(v), dtype=float).ravel() for v in V])

    def maps_base_to_base(self, tol: float = 1e-12) -> bool:
        img = self.apply_coords(self.source.base_point.coords[None, :])[0]
        return self.target.distance(self.target.point(img), self.target.base_point) <= tol


def compose(psi: LipschitzMap, f: MapOracle) -> MapOracle:
    lip = None if f.lipschitz_bound is None else psi.lip * f.lipschitz_bound
    return MapOracle(
        f.domain,
        psi.target,
        fn=lambda x: psi.fn(f.eval_coords(x[None, :])[0]),
        lipschitz_bound=lip,
        name=f"{psi.name}.{f.name}",
    )


def step_schedule(clearance: float, nu_norm: float = 1.0,
                  h0_fraction: float = DEFAULT_H0_FRACTION,
                  halvings: int = DEFAULT_HALVINGS) -> np.ndarray:
    """Geometric schedule h0 * 2^-i with h0 = clearance / (h0_fraction * |nu|)."""
    if clearance <= 0:
        raise ClearanceError("point has no positive boundary clearance")
    if halvings < 1:
        raise InputError("need at least one halving for diagnostics")
    h0 = clearance / (h0_fraction * nu_norm)
    return h0 * 0.5 ** np.arange(halvings + 1)


@dataclass
class DerivativeEstimate:
    """A diagnosed finite-difference limit.

    `successive_diffs[i]` is |est[i+1] - est[i]|; convergence additionally
    requires the two quotient branches (signs of h) to agree at the last
    step, the constructive stand-in for representative-independence.
    """

    value: float
    h_schedule: np.ndarray
    successive_diffs: np.ndarray
    converged: bool
    estimates: np.ndarray = None
    forward: np.ndarray = None
    backward: np.ndarray = None
    two_sided_gap: float = np.nan


@dataclass
class TruncatedFunctional:
    """K gauge pairings representing a functional on Lip_z0(X), truncated."""

    pairings: np.ndarray
    gauge_id: str
    entry_converged: np.ndarray = None
    diagnostic_ok: bool = True
    norm_bound: float = None

    def __post_init__(self):
        self.pairings = np.asarray(self.pairings, dtype=float)
        if not np.all(np.isfinite(self.pairings)):
            raise InputError("non-finite pairings")
        if self.entry_converged is None:
            self.entry_converged = np.ones(len(self.pairings), dtype=bool)
        if self.norm_bound is not None and np.max(np.abs(self.pairings)) > self.norm_bound + 1e-12:
            raise InputError("pairing exceeds the declared functional norm bound")

    def __len__(self):
        return len(self.pairings)


def truncated_norm(w: TruncatedFunctional) -> float:
    """max_k |<phi_k, w>| - the K-truncated dual norm."""
    return float(np.max(np.abs(w.pairings)))


def _prep_steps(f: MapOracle, x, nu, steps):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if x.shape[0] != f.domain.ndim or nu.shape[0] != f.domain.ndim:
        raise InputError("point/direction dimension mismatch with the domain")
    nu_norm = float(np.linalg.norm(nu))
    if nu_norm == 0.0:
        raise InputError("direction must be nonzero")
    clearance = f.domain.clearance(x)
    if steps is None:
        steps = step_schedule(clearance, nu_norm)
    steps = np.asarray(steps, dtype=float)
    if steps.ndim != 1 or len(steps) < 2 or np.any(steps <= 0) or np.any(np.diff(steps) >= 0):
        raise InputError("steps must be a strictly decreasing positive schedule")
    if clearance < steps[0] * nu_norm:
        raise ClearanceError(
            f"clearance {clearance:.3g} < max step {steps[0] * nu_norm:.3g} along nu"
        )
    return x, nu, steps


def metric_directional_derivative(f: MapOracle, x, nu, steps=None,
                                  tol: float = 1e-6) -> DerivativeEstimate:
    """One-sided quotients d(f(x + h nu), f(x)) / h for both signs of h.

    The reported value is the last symmetric estimate; `converged` requires
    both the step-to-step difference and the two-branch gap to fall under
    tol at the final step.
    """
    x, nu, steps = _prep_steps(f, x, nu, steps)
    H = len(steps)
    probes = np.concatenate([x[None, :], x[None, :] + steps[:, None] * nu,
                             x[None, :] - steps[:, None] * nu])
    img = f.eval_coords(probes)
    base = np.broadcast_to(img[0], (H, img.shape[1]))
    d_plus = f.target.dist_coords(img[1 : H + 1], base) / steps
    d_minus = f.target.dist_coords(img[H + 1 :], base) / steps
    est = 0.5 * (d_plus + d_minus)
    diffs = np.abs(np.diff(est))
    gap = float(np.abs(d_plus[-1] - d_minus[-1]))
    return DerivativeEstimate(
        value=float(est[-1]),
        h_schedule=steps,
        successive_diffs=diffs,
        converged=bool(diffs[-1] <= tol and gap <= tol),
        estimates=est,
        forward=d_plus,
        backward=d_minus,
        two_sided_gap=gap,
    )


def truncated_weak_weak_star_derivative(f: MapOracle, g: GaugeSequence, x, nu,
                                        steps=None, tol: float = 1e-6) -> TruncatedFunctional:
    """Entry k = central-difference limit of (phi_k(f(x+h nu)) - phi_k(f(x-h nu))) / 2h.

    Non-converged entries keep their last estimate but clear their flag and
    mark the whole functional diagnostic-failed.
    """
    x, nu, steps = _prep_steps(f, x, nu, steps)
    H = len(steps)
    probes = np.concatenate([x[None, :] + steps[:, None] * nu,
                             x[None, :] - steps[:, None] * nu])
    Phi = g.eval_coords(f.eval_coords(probes))  # (2H, K)
    ests = (Phi[:H] - Phi[H:]) / (2.0 * steps[:, None])  # (H, K)
    entry_conv = np.abs(ests[-1] - ests[-2]) <= tol
    return TruncatedFunctional(
        pairings=ests[-1],
        gauge_id=g.gauge_id,
        entry_converged=entry_conv,
        diagnostic_ok=bool(np.all(entry_conv)),
    )


@dataclass
class CompositionReport:
    psi_name: str
    lip_psi: float
    max_identity_defect: float
    norm_inequality_defect: float
    norm_composed: float
    norm_original: float
    diagnostic_ok: bool


def composition_check(f: MapOracle, psi: LipschitzMap, g_Y: GaugeSequence, x, nu,
                      steps=None, tol: float = 1e-6, g_X: GaugeSequence | None = None
                      ) -> CompositionReport:
    """Pairing identity and norm inequality for a post-composition psi . f.

    Entrywise check: <phi, D(psi.f)> against <phi.psi, Df> where phi.psi is
    evaluated as a composed functional on X; then the truncated-norm bound
    norm(D(psi.f)) <= Lip(psi) * norm(Df) + tol against a gauge on X.
    """
    if not psi.maps_base_to_base():
        raise InputError(f"{psi.name} does not map the base point to the base point")
    if g_X is None:
        g_X = local_image_gauge(f, x, K=len(g_Y))
    x_arr, nu_arr, steps = _prep_steps(f, x, nu, steps)

    psi_f = compose(psi, f)
    w_composed = truncated_weak_weak_star_derivative(psi_f, g_Y, x_arr, nu_arr, steps, tol)

    # Same pairings through the composed-functional route: phi_k . psi applied
    # to the images of f; must agree entry by entry.
    H = len(steps)
    probes = np.concatenate([x_arr[None, :] + steps[:, None] * nu_arr,
                             x_arr[None, :] - steps[:, None] * nu_arr])
    imgs_X = f.eval_coords(probes)
    Phi = g_Y.eval_coords(psi.apply_coords(imgs_X))
    pullback_pairings = (Phi[:H] - Phi[H:])[-1] / (2.0 * steps[-1])

    w_orig = truncated_weak_weak_star_derivative(f, g_X, x_arr, nu_arr, steps, tol)
    n_comp = truncated_norm(w_composed)
    n_orig = truncated_norm(w_orig)
    return CompositionReport(
        psi_name=psi.name,
        lip_psi=psi.lip,
        max_identity_defect=float(np.max(np.abs(w_composed.pairings - pullback_pairings))),
        norm_inequality_defect=max(0.0, n_comp - psi.lip * n_orig - tol),
        norm_composed=n_comp,
        norm_original=n_orig,
        diagnostic_ok=w_composed.diagnostic_ok and w_orig.diagnostic_ok,
    )


@dataclass
class LocalityReport:
    per_axis_max_mismatch: np.ndarray
    points_used: int
    points_excluded: int
    premise_defect: float


def locality_check(f1: MapOracle, f2: MapOracle, E: Box, g: GaugeSequence,
                   test_points, steps=None, tol: float = 1e-6,
                   premise_tol: float = 1e-12) -> LocalityReport:
    """Where f1 = f2 on E, the truncated derivative norms must agree inside E.

    Points closer to the boundary of E than the largest step are excluded
    (finite differences would see values outside the agreement set).
    """
    if f1.domain.ndim != f2.domain.ndim or f1.target.space_id != f2.target.space_id:
        raise InputError("maps must share domain dimension and target")
    sample = E.grid_coords(5)
    defect = float(np.max(f1.target.dist_coords(f1.eval_coords(sample),
                                                f2.eval_coords(sample))))
    if defect > premise_tol:
        raise PremiseError(f"f1 != f2 on E: sampled defect {defect}")

    n = f1.domain.ndim
    used, excluded = 0, 0
    worst = np.zeros(n)
    for x in np.atleast_2d(np.asarray(test_points, dtype=float)):
        if steps is None:
            trial = step_schedule(f1.domain.clearance(x))
        else:
            trial = np.asarray(steps, dtype=float)
        if E.clearance(x) < trial[0]:
            excluded += 1
            continue
        used += 1
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            n1 = truncated_norm(truncated_weak_weak_star_derivative(f1, g, x, e, trial, tol))
            n2 = truncated_norm(truncated_weak_weak_star_derivative(f2, g, x, e, trial, tol))
            worst[j] = max(worst[j], abs(n1 - n2))
    return LocalityReport(
        per_axis_max_mismatch=worst,
        points_used=used,
        points_excluded=excluded,
        premise_defect=defect,
    )


def signed_quotient_probe(f: MapOracle, x, nu, steps=None,
                          tol: float = 1e-6) -> DerivativeEstimate:
    """Signed scalar difference quotient (f(x + h nu) - f(x)) / h, real-valued f.

    Unlike the metric quotient this keeps the sign, so a kink shows up as a
    two-branch disagreement rather than averaging away.
    """
    if f.target.dim != 1:
        raise InputError("signed quotient probe needs a 1-dimensional target")
    x, nu, steps = _prep_steps(f, x, nu, steps)
    H = len(steps)
    probes = np.concatenate([x[None, :], x[None, :] + steps[:, None] * nu,
                             x[None, :] - steps[:, None] * nu])
    v = f.eval_coords(probes)[:, 0]
    q_plus = (v[1 : H + 1] - v[0]) / steps
    q_minus = (v[H + 1 :] - v[0]) / (-steps)
    est = 0.5 * (q_plus + q_minus)
    diffs = np.abs(np.diff(est))
    gap = float(np.abs(q_plus[-1] - q_minus[-1]))
    return DerivativeEstimate(
        value=float(est[-1]),
        h_schedule=steps,
        successive_diffs=diffs,
        converged=bool(diffs[-1] <= tol and gap <= tol),
        estimates=est,
        forward=q_plus,
        backward=q_minus,
        two_sided_gap=gap,
    )


@dataclass
class NormDerivativeProbe:
    cauchy_increments: np.ndarray
    cauchy_decrease: bool


def norm_derivative_probe(f: MapOracle, x, nu, steps=None,
                          tol: float = 1e-6) -> NormDerivativeProbe:
    """Cauchy test for the norm-topology difference quotient in a normed target.

    Measures ||(f(x+h_i nu)-f(x))/h_i - (f(x+h_{i+1} nu)-f(x))/h_{i+1}||; a
    derivative in norm exists only if these increments go to zero.
    """
    if not f.target.is_normed:
        raise InputError("norm-derivative probe needs a normed target")
    x, nu, steps = _prep_steps(f, x, nu, steps)
    probes = np.concatenate([x[None, :], x[None, :] + steps[:, None] * nu])
    img = f.eval_coords(probes)
    quots = (img[1:] - img[0]) / steps[:, None]
    inc = np.array([f.target.norm(quots[i + 1] - quots[i]) for i in range(len(steps) - 1)])
    return NormDerivativeProbe(
        cauchy_increments=inc,
        cauchy_decrease=bool(inc[-1] <= max(tol, 0.25 * inc[0])),
    )


def local_image_gauge(f: MapOracle, x, K: int, radius=None) -> GaugeSequence:
    """Gauge anchored at image points f(x - r nu_k) along rays from x.

    For n >= 2 the K ray directions are equispaced (angle sets nest as K
    doubles); for n = 1 the two sides alternate while the radius halves, so
    doubling K refines the anchor ladder.  Anchors lie on the image of f.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = f.domain.ndim
    if K < 1:
        raise InputError("K must be >= 1")
    clearance = f.domain.clearance(x)
    if clearance <= 0:
        raise ClearanceError("gauge center outside the open domain")
    r0 = clearance / 2.0 if radius is None else float(radius)
    if n == 1:
        # sides alternate while radii refine along the bit-reversal sequence:
        # prefixes nest as K doubles and the smallest radius stays ~r0/K,
        # safely above the step schedule so pairings keep converging
        sides = np.where(np.arange(K) % 2 == 0, 1.0, -1.0)
        radii = r0 * np.array([_van_der_corput(j // 2) for j in range(K)])
        pts = x[None, :] - (sides * radii)[:, None]
    elif n == 2:
        # half-circle rays: +-nu index the same |row . nu|, so distinct lines
        # double the effective coverage; the sets nest as K doubles
        ang = np.pi * np.arange(K) / K
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        pts = x[None, :] - r0 * dirs
    else:
        dirs = _fibonacci_directions(n, K)
        pts = x[None, :] - r0 * dirs
    imgs = f.eval_coords(pts)
    return build_kuratowski_gauge(f.target, [f.target.point(c) for c in imgs])


def grid_image_gauge(f: MapOracle, per_axis) -> GaugeSequence:
    """Gauge anchored along the map's own grid tabulation."""
    _, imgs = f.tabulate(per_axis)
    return build_kuratowski_gauge(f.target, [f.target.point(c) for c in imgs])


def _van_der_corput(i: int) -> float:
    """Bit-reversal radical inverse; _van_der_corput(0) = 1.0 anchors the scale."""
    if i == 0:
        return 1.0
    v, denom = 0.0, 1.0
    while i:
        denom *= 2.0
        v += (i & 1) / denom
        i >>= 1
    return v


def _fibonacci_directions(n: int, K: int) -> np.ndarray:
    if n != 3:
        rng = np.random.default_rng(20240 + n)
        raw = rng.standard_normal((K, n))
        return raw / np.linalg.norm(raw, axis=1, keepdims=True)
    i = np.arange(K) + 0.5
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / K
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
