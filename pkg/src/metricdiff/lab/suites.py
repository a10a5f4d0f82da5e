"""Operation suites: one function per suite, each producing an ExperimentReport.

A suite draws its evaluation points from the scenario's sample box with a
seeded generator, runs the relevant operations, and records every checked
quantity as a (measured, tolerance, pass) assertion plus plot-ready tables.
Reruns with the same config and seed are byte-identical in the tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..derivatives import (
    compose,
    composition_check,
    local_image_gauge,
    grid_image_gauge,
    metric_directional_derivative,
    norm_derivative_probe,
    signed_quotient_probe,
    step_schedule,
    truncated_norm,
    truncated_weak_weak_star_derivative,
)
from ..errors import ConfigError
from ..gauge import gauge_quality_audit
from ..linear_target import (
    block_step_duals,
    coordinate_duals,
    dual_gradient,
    gradient_aligned_duals,
    md_from_dual,
    weak_star_residual,
)
from ..seminorm import (
    Seminorm,
    direction_fan,
    directional_consistency,
    first_order_residual,
    fit_metric_differential,
    seminorm_axiom_check,
)
from ..sobolev import (
    GridFunction,
    lipschitz_restriction,
    radial_truncation,
    w1p_differentiability_check,
)
from ..spaces import Euclidean, LebesgueGrid, validate_metric_axioms
from .parallel import pmap
from .reports import Assertion, ExperimentReport, Table
from .scenarios import Scenario

__all__ = ["SuiteParams", "SUITES", "run_suite", "suite_names"]


@dataclass
class SuiteParams:
    k: int = 32
    seed: int = 0
    points: int = 5
    tol: float = None          # None: use the scenario's fd tolerance
    halvings: int = None       # None: use the scenario's schedule depth
    h0_fraction: float = 16.0
    p: float = 2.0
    ball_per_axis: int = 64
    fan_count: int = None      # None: dimension default
    dual_spec: str = None      # dual-recovery catalog spec (see parse_dual_spec)


def _fd(scn: Scenario, params: SuiteParams):
    tol = scn.fd_tol if params.tol is None else params.tol
    halvings = scn.halvings if params.halvings is None else params.halvings
    return tol, halvings


def _steps_at(f, x, params: SuiteParams, halvings: int):
    return step_schedule(f.domain.clearance(x), 1.0,
                         h0_fraction=params.h0_fraction, halvings=halvings)


def _scalar_set():
    return (-2.0, -1.0, 0.5, 3.0)


# -- suites -------------------------------------------------------------------

def suite_metric_axioms(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    f = scn.oracle()
    rng = np.random.default_rng(params.seed)
    rep = ExperimentReport(scn.name, "metric-axioms",
                           {"seed": params.seed, "sample": 16})
    X = scn.sample_points(rng, 16)
    pts = [f.target.point(c) for c in f.eval_coords(X)] + [f.target.base_point]
    r = validate_metric_axioms(f.target, pts)
    rep.add_assertion(Assertion.le("symmetry-defect", r.max_symmetry_defect, 0.0))
    rep.add_assertion(Assertion.le("triangle-defect", r.max_triangle_defect, 1e-10))
    t = Table("axiom-defects", ["space", "sample_size", "symmetry", "triangle"])
    t.add(r.space_id, r.sample_size, r.max_symmetry_defect, r.max_triangle_defect)
    rep.add_table(t)
    return rep


def suite_gauge_audit(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    f = scn.oracle()
    rng = np.random.default_rng(params.seed)
    n = f.domain.ndim
    per_axis = params.k if n == 1 else int(np.ceil(params.k ** (1.0 / n)))
    g = grid_image_gauge(f, per_axis)
    K_max = len(g)
    ks = sorted({max(1, K_max // 8), max(1, K_max // 4), max(1, K_max // 2), K_max})
    X = scn.sample_points(rng, 24)
    Y = scn.sample_points(rng, 24)
    pairs = [
        (f.target.point(a), f.target.point(b))
        for a, b in zip(f.eval_coords(X), f.eval_coords(Y))
    ]
    audit = gauge_quality_audit(g, pairs, ks)

    # 1-Lipschitz upper bound: the gauge distance never exceeds the true one
    GA = g.eval_coords(f.eval_coords(X))
    GB = g.eval_coords(f.eval_coords(Y))
    D = f.target.dist_coords(f.eval_coords(X), f.eval_coords(Y))
    overshoot = float(np.max(np.max(np.abs(GA - GB), axis=1) - D))

    rep = ExperimentReport(scn.name, "gauge-audit",
                           {"seed": params.seed, "k": K_max, "K_schedule": ks})
    worst = audit.max_relative_underestimate
    rep.add_assertion(Assertion.le("underestimate-monotone-in-K",
                                   float(np.max(np.diff(worst))) if len(worst) > 1 else 0.0,
                                   1e-12))
    rep.add_assertion(Assertion.le("one-lipschitz-overshoot", overshoot, 1e-12))
    t = Table("underestimates", ["K", "max_relative_underestimate"])
    for K, w in zip(ks, worst):
        t.add(K, w)
    rep.add_table(t)
    rep.notes.append(f"pairs used {audit.pairs_used}, skipped {audit.pairs_skipped_coincident}")
    return rep


def suite_md_consistency(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    f = scn.oracle()
    tol, halvings = _fd(scn, params)
    rng = np.random.default_rng(params.seed)
    fan = direction_fan(f.domain.ndim, params.fan_count)
    X = scn.sample_points(rng, params.points)

    rep = ExperimentReport(
        scn.name, "md-consistency",
        {"seed": params.seed, "k": params.k, "points": params.points,
         "fan": len(fan), "tol": tol, "halvings": halvings},
    )
    fan_table = Table("fan-gaps", ["point_index", "analytic_gap", "md_gap",
                                   "nonconverged", "diagnostic_ok"])
    resid_table = Table("first-order-residuals", ["point_index", "radius", "max_residual"])

    def run_point(args):
        i, x = args
        steps = _steps_at(f, x, params, halvings)
        g = local_image_gauge(f, x, params.k)
        sigma = fit_metric_differential(f, g, x, steps, tol)
        ax = seminorm_axiom_check(sigma, fan, _scalar_set())
        cons = directional_consistency(f, sigma, x, fan, steps, tol)
        agap = np.nan
        if scn.analytic_md is not None:
            ana = np.array([scn.analytic_md(x, nu) for nu in fan])
            agap = float(np.max(np.abs(sigma.eval_many(fan) - ana)))
        radii = steps[0] * 2.0 ** -np.arange(5)
        fo = first_order_residual(f, sigma, x, radii, fan, tol)
        return i, sigma, ax, cons, agap, fo

    results = pmap(run_point, list(enumerate(X)))
    worst_axiom = 0.0
    worst_analytic = 0.0
    worst_md_gap = 0.0
    any_diag = True
    for i, sigma, ax, cons, agap, fo in results:
        worst_axiom = max(worst_axiom, ax.homogeneity_defect, ax.subadditivity_defect)
        ok = sigma.diagnostic_ok and cons.nonconverged == 0
        any_diag = any_diag and ok
        if ok:
            worst_md_gap = max(worst_md_gap, cons.max_gap)
            if np.isfinite(agap):
                worst_analytic = max(worst_analytic, agap)
        fan_table.add(i, agap, cons.max_gap, cons.nonconverged, ok)
        for r, v in zip(fo.radii, fo.max_residual):
            resid_table.add(i, r, v)

    rep.add_assertion(Assertion.le("seminorm-axiom-defect", worst_axiom, 1e-12))
    if scn.analytic_md is not None:
        rep.add_assertion(Assertion.le("fan-gap-vs-analytic", worst_analytic, scn.md_tol))
    rep.add_assertion(Assertion.le("fan-gap-vs-md", worst_md_gap,
                                   max(scn.md_tol, 10 * tol)))
    if not any_diag:
        rep.notes.append("some points carried non-converged diagnostics; "
                         "they are reported but excluded from strict gaps")
    rep.add_table(fan_table)
    rep.add_table(resid_table)
    return rep


def suite_norm_identity(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    f = scn.oracle()
    tol, halvings = _fd(scn, params)
    rng = np.random.default_rng(params.seed)
    fan = direction_fan(f.domain.ndim, params.fan_count)
    X = scn.sample_points(rng, params.points)
    ks = [4, 8, 16, 32]

    rep = ExperimentReport(
        scn.name, "norm-identity",
        {"seed": params.seed, "K_schedule": ks, "points": params.points,
         "fan": len(fan), "tol": tol},
    )
    table = Table("deficits", ["point_index", "K", "max_deficit", "max_overshoot"])
    worst_overshoot = -np.inf
    worst_growth = -np.inf

    for i, x in enumerate(X):
        steps = _steps_at(f, x, params, halvings)
        md = np.empty(len(fan))
        for a, nu in enumerate(fan):
            md[a] = metric_directional_derivative(f, x, nu, steps, tol).value
        deficits = []
        for K in ks:
            g = local_image_gauge(f, x, K)
            tn = np.empty(len(fan))
            for a, nu in enumerate(fan):
                tn[a] = truncated_norm(
                    truncated_weak_weak_star_derivative(f, g, x, nu, steps, tol))
            over = float(np.max(tn - md))
            deficit = float(np.max(md - tn))
            deficits.append(deficit)
            worst_overshoot = max(worst_overshoot, over)
            table.add(i, K, deficit, over)
        worst_growth = max(worst_growth, float(np.max(np.diff(deficits))))

    rep.add_assertion(Assertion.le("truncated-norm-overshoot", worst_overshoot, 1e-6))
    rep.add_assertion(Assertion.le("deficit-growth-as-K-doubles", worst_growth, 1e-9))
    rep.add_table(table)
    return rep


def suite_composition(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    f = scn.oracle()
    if scn.compositions is None:
        raise ConfigError(f"scenario {scn.name} declares no composition catalog")
    psis = scn.compositions(f.target)
    tol, halvings = _fd(scn, params)
    rng = np.random.default_rng(params.seed)
    X = scn.sample_points(rng, params.points)
    fan = direction_fan(f.domain.ndim)[:: max(1, len(direction_fan(f.domain.ndim)) // 8)]

    rep = ExperimentReport(
        scn.name, "composition",
        {"seed": params.seed, "k": params.k, "points": params.points, "tol": tol,
         "maps": [p.name for p in psis]},
    )
    table = Table("composition-defects",
                  ["psi", "point_index", "identity_defect", "norm_inequality_defect",
                   "norm_composed", "norm_original"])
    worst_id = 0.0
    worst_ineq = 0.0
    for psi in psis:
        for i, x in enumerate(X):
            steps = _steps_at(f, x, params, halvings)
            g_X = local_image_gauge(f, x, params.k)
            g_Y = local_image_gauge(compose(psi, f), x, params.k)
            rid, rineq = 0.0, 0.0
            for nu in fan:
                c = composition_check(f, psi, g_Y, x, nu, steps, tol, g_X=g_X)
                rid = max(rid, c.max_identity_defect)
                rineq = max(rineq, c.norm_inequality_defect)
            worst_id = max(worst_id, rid)
            worst_ineq = max(worst_ineq, rineq)
            table.add(psi.name, i, rid, rineq, c.norm_composed, c.norm_original)
    rep.add_assertion(Assertion.le("pairing-identity-defect", worst_id, 1e-9))
    rep.add_assertion(Assertion.le("norm-inequality-defect", worst_ineq, 1e-6))
    rep.add_table(table)
    return rep


def suite_md_vs_linear(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    """Metric differentiability against linear/norm differentiability probes."""
    f = scn.oracle()
    tol, halvings = _fd(scn, params)
    rng = np.random.default_rng(params.seed)
    rep = ExperimentReport(
        scn.name, "md-vs-linear",
        {"seed": params.seed, "tol": tol, "halvings": halvings},
    )
    if scn.name == "s2-abs":
        x = np.zeros(1)
        steps = step_schedule(f.domain.clearance(x), 1.0, halvings=halvings)
        radii = steps[:5]
        fo = first_order_residual(f, lambda nu: abs(float(nu[0])), x, radii,
                                  direction_fan(1), tol)
        rep.add_assertion(Assertion.le("first-order-residual-at-0",
                                       float(np.max(fo.max_residual)), 1e-12))
        probe = signed_quotient_probe(f, x, np.ones(1), steps, tol)
        rep.add_assertion(Assertion.flag("signed-quotient-two-sided-failure",
                                         not probe.converged))
        t = Table("signed-quotient", ["h", "forward", "backward"])
        for h, a, b in zip(probe.h_schedule, probe.forward, probe.backward):
            t.add(h, a, b)
        rep.add_table(t)
    else:
        X = scn.sample_points(rng, max(20, params.points))
        t = Table("md-values", ["point_index", "md", "converged"])
        worst = 0.0
        for i, x in enumerate(X):
            steps = _steps_at(f, x, params, halvings)
            est = metric_directional_derivative(f, x, np.ones(f.domain.ndim), steps, tol)
            worst = max(worst, abs(est.value - 1.0))
            t.add(i, est.value, est.converged)
        rep.add_assertion(Assertion.le("md-equals-one", worst, 1e-6))
        x = X[0]
        # the probe witnesses the continuum behaviour only above the target's
        # discretization scale: below one cell width the tabulated curve is
        # piecewise linear and trivially norm-differentiable
        resolution = 0.0
        if isinstance(f.target, LebesgueGrid):
            resolution = f.target.length / f.target.dim
        h0 = f.domain.clearance(x) / 2.0
        probe_halvings = halvings if resolution == 0.0 else \
            max(3, int(np.floor(np.log2(h0 / (2.0 * resolution)))))
        probe = norm_derivative_probe(f, x, np.ones(f.domain.ndim),
                                      step_schedule(f.domain.clearance(x), 1.0,
                                                    h0_fraction=2.0,
                                                    halvings=probe_halvings), tol)
        rep.add_assertion(Assertion.flag("norm-quotient-cauchy-failure",
                                         not probe.cauchy_decrease))
        if resolution:
            rep.notes.append(
                f"norm probe limited to steps >= {2 * resolution!r} "
                "(discretization scale of the target)")
        tc = Table("norm-quotient-cauchy", ["step_index", "increment"])
        for i, c in enumerate(probe.cauchy_increments):
            tc.add(i, c)
        rep.add_table(t)
        rep.add_table(tc)
    return rep


def suite_sobolev_restriction(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    f = scn.oracle()
    n = f.domain.ndim
    per_axis = 513 if n == 1 else 65
    grid = GridFunction.from_box(f.domain.lo, f.domain.hi, per_axis)
    coords = grid.node_coords()
    if scn.majorant is not None:
        hvals = scn.majorant(coords, grid.spacing)
    elif f.lipschitz_bound is not None:
        hvals = np.full(len(coords), float(f.lipschitz_bound))
    else:
        raise ConfigError(f"scenario {scn.name} has neither majorant nor Lipschitz bound")
    h = grid.like(hvals.reshape(grid.shape))

    from ..sobolev import maximal_function
    Mh = maximal_function(h).values
    # start where the kept set is nonempty (degenerate all-excluded results
    # carry a zero constant and would fake the product trend), stop past the
    # maximum so the last excluded set is empty
    t0 = 2.0 * float(np.min(Mh))
    ts = [t0]
    while ts[-1] <= float(np.max(Mh)):
        ts.append(ts[-1] * 2.0)
    p = 1.0

    rep = ExperimentReport(
        scn.name, "sobolev-restriction",
        {"per_axis": per_axis, "p": p, "t_schedule": ts, "seed": params.seed},
    )
    table = Table("restriction", ["t", "kept", "excluded", "lipschitz",
                                  "measure_excluded", "lip_p_times_measure", "degenerate"])
    results = [lipschitz_restriction(f, h, t, p) for t in ts]
    for r in results:
        table.add(r.t, r.kept_nodes, r.excluded_nodes, r.empirical_lipschitz_constant,
                  r.measure_excluded, r.lip_p_times_measure, r.degenerate)

    nest_viol = 0
    for a, b in zip(results, results[1:]):
        nest_viol += int(np.any(b.excluded_mask & ~a.excluded_mask))
    rep.add_assertion(Assertion.le("E_t-nesting-violations", nest_viol, 0.0))
    prods = [r.lip_p_times_measure for r in results]
    rep.add_assertion(Assertion.le("lip^p-times-measure-growth",
                                   float(np.max(np.diff(prods))), 1e-12))

    # radial truncation is 2-Lipschitz: 500 random pairs in euclidean(3)
    rng = np.random.default_rng(params.seed)
    sp = Euclidean(3)
    U = rng.normal(size=(500, 3)) * 2.0
    V = rng.normal(size=(500, 3)) * 2.0
    R = 1.0
    factor = 0.0
    for u, v in zip(U, V):
        du = radial_truncation(sp, u, R) - radial_truncation(sp, v, R)
        dv = np.linalg.norm(u - v)
        if dv > 0:
            factor = max(factor, float(np.linalg.norm(du)) / dv)
    rep.add_assertion(Assertion.le("radial-truncation-lipschitz-factor", factor,
                                   2.0 + 1e-12))
    rep.add_table(table)
    return rep


def suite_w1p_diff(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    f = scn.oracle()
    tol, halvings = _fd(scn, params)
    rng = np.random.default_rng(params.seed)
    x = scn.sample_points(rng, 1)[0]
    clearance = f.domain.clearance(x)
    hs = (clearance / 4.0) * 2.0 ** -np.arange(5)

    rep = ExperimentReport(
        scn.name, "w1p-diff",
        {"seed": params.seed, "k": params.k, "ball_per_axis": params.ball_per_axis,
         "h_schedule": list(hs), "tol": tol},
    )
    table = Table("eta-norms", ["p", "h", "w1p_norm", "excluded_nodes"])

    for p in (1.0, 2.0):
        if scn.linear_exact:
            sigma = scn.md_callable(x)
            check = w1p_differentiability_check(f, sigma, x, p, hs,
                                                params.ball_per_axis, tol)
            rep.add_assertion(Assertion.le(f"eta-norm-linear-p{p:g}",
                                           float(np.max(check.norm_totals)), 1e-10))
        else:
            steps = _steps_at(f, x, params, halvings)
            g = local_image_gauge(f, x, params.k)
            sigma = fit_metric_differential(f, g, x, steps, tol)
            check = w1p_differentiability_check(f, sigma, x, p, hs,
                                                params.ball_per_axis, tol)
            totals = check.norm_totals
            tail_growth = float(np.max(np.diff(totals)))
            rep.add_assertion(Assertion.le(f"eta-norm-tail-growth-p{p:g}",
                                           tail_growth, 1e-9))
            if scn.analytic_md is not None:
                plateau = _gauge_gap_plateau(scn, f, sigma, x, p, params.ball_per_axis)
                last_drop = max(0.0, float(totals[-2] - totals[-1]))
                rep.add_assertion(Assertion.le(
                    f"eta-norm-final-vs-plateau-p{p:g}",
                    float(totals[-1]), plateau + last_drop + 1e-9))
                rep.notes.append(f"gauge-gap plateau (p={p:g}): {plateau!r}")
        for h, n, ex in zip(check.h_schedule, check.norm_totals, check.excluded_per_h):
            table.add(p, h, n, ex)
    rep.add_table(table)
    return rep


def _gauge_gap_plateau(scn, f, sigma: Seminorm, x, p, ball_per_axis) -> float:
    """W^{1,p}(B) norm of the h->0 residual field md(nu) - sigma_fit(nu)."""
    from ..sobolev import w1p_norm
    ball = GridFunction.on_unit_ball(f.domain.ndim, ball_per_axis)
    nodes = ball.node_coords()
    md = np.array([scn.analytic_md(x, nu) for nu in nodes])
    gap = md - sigma.eval_many(nodes)
    gf = GridFunction(ball.origin, ball.spacing, gap.reshape(ball.shape), ball.mask)
    return float(w1p_norm(gf, p).total)


def suite_dual_recovery(scn: Scenario, params: SuiteParams) -> ExperimentReport:
    f = scn.oracle()
    tol, halvings = _fd(scn, params)
    rng = np.random.default_rng(params.seed)
    x = scn.sample_points(rng, 1)[0]
    steps = _steps_at(f, x, params, halvings)
    fan = direction_fan(f.domain.ndim, params.fan_count)

    rep = ExperimentReport(
        scn.name, "dual-recovery",
        {"seed": params.seed, "tol": tol, "fan": len(fan)},
    )

    D0 = coordinate_duals(f.target)
    G0 = dual_gradient(f, D0, x, steps, tol)
    if scn.linear_matrix is not None:
        target_matrix = np.atleast_2d(scn.linear_matrix)
        if isinstance(f.target, Euclidean) or f.target.lp_params() is not None:
            err = float(np.max(np.abs(G0.matrix - target_matrix)))
            rep.add_assertion(Assertion.le("coordinate-dual-matrix-error", err, 1e-9))

    # recovery of md on the fan: coordinate duals plus gradient-aligned fan
    D = D0
    try:
        D = D0.extended(gradient_aligned_duals(f.target, G0.matrix, fan))
    except Exception:
        rep.notes.append("gradient-aligned duals unavailable (zero gradient)")
    G = dual_gradient(f, D, x, steps, tol)
    g_loc = local_image_gauge(f, x, params.k)
    sigma = fit_metric_differential(f, g_loc, x, steps, tol)
    gaps = np.array([abs(md_from_dual(G, D, nu) - sigma(nu)) for nu in fan])
    rep.add_assertion(Assertion.le("md-from-dual-vs-sigma-fit",
                                   float(np.max(gaps)), scn.md_tol))

    radii = steps[0] * 2.0 ** -np.arange(4)
    ws = weak_star_residual(f, G, D, x, radii, fan)
    t = Table("weak-star-residuals", ["radius", "max_residual"])
    for r, v in zip(ws.radii, ws.max_residual):
        t.add(r, v)
    rep.add_table(t)

    if isinstance(f.target, LebesgueGrid):
        tstep = Table("step-dual-sup", ["blocks", "dual_sup"])
        sups = []
        for m in (4, 8, 16, 32):
            Dm = block_step_duals(f.target, m)
            Gm = dual_gradient(f, Dm, x, steps, tol)
            val = md_from_dual(Gm, Dm, np.ones(f.domain.ndim))
            sups.append(val)
            tstep.add(m, val)
            rep.add_assertion(Assertion.ge(f"step-dual-sup-m{m}", val, 1.0 - 1.0 / m))
        rep.add_assertion(Assertion.le("step-dual-sup-decrease",
                                       float(np.max(-np.diff(sups))), 1e-12))
        rep.add_table(tstep)
    return rep


SUITES = {
    "metric-axioms": suite_metric_axioms,
    "gauge-audit": suite_gauge_audit,
    "md-consistency": suite_md_consistency,
    "norm-identity": suite_norm_identity,
    "composition": suite_composition,
    "md-vs-linear": suite_md_vs_linear,
    "sobolev-restriction": suite_sobolev_restriction,
    "w1p-diff": suite_w1p_diff,
    "dual-recovery": suite_dual_recovery,
}


def suite_names():
    return list(SUITES)


def run_suite(scn: Scenario, suite: str, params: SuiteParams) -> ExperimentReport:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; available: {', '.join(SUITES)}")
    return SUITES[suite](scn, params)
