"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every check pins the tolerance stated in the criterion.
"""

import time

import numpy as np
import pytest

from metricdiff.derivatives import (
    compose,
    composition_check,
    local_image_gauge,
    metric_directional_derivative,
    norm_derivative_probe,
    signed_quotient_probe,
    step_schedule,
    truncated_norm,
    truncated_weak_weak_star_derivative,
)
from metricdiff.lab.reports import write_report
from metricdiff.lab.scenarios import catalog, get_scenario, psi_catalog
from metricdiff.lab.suites import SuiteParams, run_suite
from metricdiff.linear_target import (
    block_step_duals,
    coordinate_duals,
    dual_gradient,
    gradient_aligned_duals,
    md_from_dual,
)
from metricdiff.seminorm import (
    direction_fan,
    first_order_residual,
    fit_metric_differential,
    seminorm_axiom_check,
)
from metricdiff.sobolev import (
    GridFunction,
    lipschitz_restriction,
    maximal_function,
    radial_truncation,
    w1p_differentiability_check,
    w1p_norm,
)
from metricdiff.spaces import Euclidean

SCALARS = (-2.0, -1.0, 0.5, 3.0)


def _steps(scn, f, x, h0_fraction=16.0):
    return step_schedule(f.domain.clearance(x), 1.0, h0_fraction, scn.halvings)


def _line(idx, name, ok, detail):
    print(f"[criterion {idx}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_criterion_1_seminorm_axioms_all_scenarios():
    t0 = time.perf_counter()
    worst_h = worst_s = 0.0
    n_scenarios = n_points = 0
    rng = np.random.default_rng(101)
    for scn in catalog():
        f = scn.oracle()
        fan = direction_fan(f.domain.ndim)
        n_scenarios += 1
        for x in scn.sample_points(rng, 5):
            n_points += 1
            sigma = fit_metric_differential(
                f, local_image_gauge(f, x, 8), x, _steps(scn, f, x), scn.fd_tol)
            rep = seminorm_axiom_check(sigma, fan, SCALARS)
            worst_h = max(worst_h, rep.homogeneity_defect)
            worst_s = max(worst_s, rep.subadditivity_defect)
    elapsed = time.perf_counter() - t0
    ok = worst_h <= 1e-12 and worst_s <= 1e-12 and elapsed <= 10.0
    _line(1, "seminorm axioms", ok,
          f"{n_scenarios} scenarios x 5 points, homogeneity {worst_h:.3g}, "
          f"subadditivity {worst_s:.3g}, {elapsed:.2f}s")
    assert n_scenarios >= 7 and n_points >= 35
    assert worst_h <= 1e-12
    assert worst_s <= 1e-12
    assert elapsed <= 10.0


def test_criterion_2_md_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    gaps = {}
    for name in ("s1-linear", "s4-rank-deficient"):
        scn = get_scenario(name)
        f = scn.oracle()
        fan = direction_fan(2)
        worst = 0.0
        for x in scn.sample_points(rng, 5):
            sigma = fit_metric_differential(
                f, local_image_gauge(f, x, 32), x, _steps(scn, f, x), scn.fd_tol)
            ana = np.array([scn.analytic_md(x, nu) for nu in fan])
            worst = max(worst, float(np.max(np.abs(sigma.eval_many(fan) - ana))))
        gaps[name] = worst
    scn = get_scenario("s3-l1-curve")
    f = scn.oracle()
    worst3 = 0.0
    for x in scn.sample_points(rng, 5):
        sigma = fit_metric_differential(
            f, local_image_gauge(f, x, 32), x, _steps(scn, f, x), scn.fd_tol)
        worst3 = max(worst3, abs(sigma([1.0]) - 1.0), abs(sigma([-1.0]) - 1.0))
    elapsed = time.perf_counter() - t0
    ok = gaps["s1-linear"] <= 1e-3 and gaps["s4-rank-deficient"] <= 1e-3 and \
        worst3 <= 1e-6 and elapsed <= 30.0
    _line(2, "md = rho(grad) consistency", ok,
          f"S1 {gaps['s1-linear']:.3g}, S4 {gaps['s4-rank-deficient']:.3g}, "
          f"S3 {worst3:.3g}, {elapsed:.2f}s")
    assert gaps["s1-linear"] <= 1e-3
    assert gaps["s4-rank-deficient"] <= 1e-3
    assert worst3 <= 1e-6
    assert elapsed <= 30.0


def test_criterion_3_norm_identity_truncation():
    rng = np.random.default_rng(103)
    worst_overshoot = -np.inf
    worst_growth = -np.inf
    for name in ("s1-linear", "s2-abs", "s3-l1-curve", "s4-rank-deficient"):
        scn = get_scenario(name)
        f = scn.oracle()
        fan = direction_fan(f.domain.ndim)
        for x in scn.sample_points(rng, 5):
            steps = _steps(scn, f, x)
            md = np.empty(len(fan))
            for i, nu in enumerate(fan):
                est = metric_directional_derivative(f, x, nu, steps, scn.fd_tol)
                assert est.converged, (name, x, nu)
                md[i] = est.value
            deficits = []
            for K in (4, 8, 16, 32):
                g = local_image_gauge(f, x, K)
                tn = np.array([
                    truncated_norm(truncated_weak_weak_star_derivative(
                        f, g, x, nu, steps, scn.fd_tol)) for nu in fan])
                worst_overshoot = max(worst_overshoot, float(np.max(tn - md)))
                deficits.append(float(np.max(md - tn)))
            worst_growth = max(worst_growth, float(np.max(np.diff(deficits))))
    ok = worst_overshoot <= 1e-6 and worst_growth <= 1e-9
    _line(3, "truncated norm vs metric derivative", ok,
          f"overshoot {worst_overshoot:.3g}, deficit growth {worst_growth:.3g}")
    assert worst_overshoot <= 1e-6
    assert worst_growth <= 1e-9


def test_criterion_4_metric_vs_linear_differentiability():
    # S2 at 0: exact metric first-order fit, no two-sided scalar derivative
    scn2 = get_scenario("s2-abs")
    f2 = scn2.oracle()
    radii = 0.5 * 2.0 ** -np.arange(5)
    fo = first_order_residual(f2, lambda nu: abs(float(nu[0])), np.zeros(1),
                              radii, direction_fan(1))
    resid = float(np.max(fo.max_residual))
    probe2 = signed_quotient_probe(f2, [0.0], [1.0])

    # S3: unit metric derivative at >= 20 points, no norm-quotient Cauchy decay
    scn3 = get_scenario("s3-l1-curve")
    f3 = scn3.oracle()
    rng = np.random.default_rng(104)
    X = scn3.sample_points(rng, 20)
    md_err = 0.0
    for x in X:
        est = metric_directional_derivative(f3, x, [1.0], _steps(scn3, f3, x),
                                            scn3.fd_tol)
        assert est.converged
        md_err = max(md_err, abs(est.value - 1.0))
    x = X[0]
    cell = f3.target.length / f3.target.dim
    h0 = f3.domain.clearance(x) / 2.0
    halvings = max(3, int(np.floor(np.log2(h0 / (2.0 * cell)))))
    probe3 = norm_derivative_probe(
        f3, x, [1.0], step_schedule(f3.domain.clearance(x), 1.0, 2.0, halvings))

    ok = resid == 0.0 and not probe2.converged and md_err <= 1e-6 and \
        not probe3.cauchy_decrease
    _line(4, "metric vs linear differentiability", ok,
          f"S2 residual {resid:.3g}, scalar two-sided gap {probe2.two_sided_gap:.3g}, "
          f"S3 md error {md_err:.3g} over 20 points, "
          f"norm-probe increments {probe3.cauchy_increments[-1]:.3g}")
    assert resid == 0.0
    assert not probe2.converged
    assert md_err <= 1e-6
    assert not probe3.cauchy_decrease


def test_criterion_5_composition_identities():
    scn = get_scenario("s7-composition")
    f = scn.oracle()
    rng = np.random.default_rng(105)
    fan = direction_fan(2, 8)
    worst_id = 0.0
    worst_ineq = 0.0
    for psi in psi_catalog(f.target):
        for x in scn.sample_points(rng, 3):
            steps = _steps(scn, f, x)
            g_X = local_image_gauge(f, x, 16)
            g_Y = local_image_gauge(compose(psi, f), x, 16)
            for nu in fan:
                rep = composition_check(f, psi, g_Y, x, nu, steps, scn.fd_tol,
                                        g_X=g_X)
                worst_id = max(worst_id, rep.max_identity_defect)
                worst_ineq = max(worst_ineq, rep.norm_inequality_defect)
    ok = worst_id <= 1e-9 and worst_ineq <= 1e-6
    _line(5, "composition identities", ok,
          f"pairing defect {worst_id:.3g}, norm inequality defect {worst_ineq:.3g}")
    assert worst_id <= 1e-9
    assert worst_ineq <= 1e-6


def test_criterion_6_w1p_topology_differentiability():
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    worst_linear = 0.0
    for name in ("s1-linear", "s4-rank-deficient"):
        scn = get_scenario(name)
        f = scn.oracle()
        x = scn.sample_points(rng, 1)[0]
        hs = (f.domain.clearance(x) / 4.0) * 2.0 ** -np.arange(5)
        for p in (1.0, 2.0):
            rep = w1p_differentiability_check(f, scn.md_callable(x), x, p, hs,
                                              ball_per_axis=64)
            worst_linear = max(worst_linear, float(np.max(rep.norm_totals)))

    scn = get_scenario("s8-warp")
    f = scn.oracle()
    x = scn.sample_points(rng, 1)[0]
    sigma = fit_metric_differential(
        f, local_image_gauge(f, x, 32), x, _steps(scn, f, x), scn.fd_tol)
    hs = (f.domain.clearance(x) / 4.0) * 2.0 ** -np.arange(5)
    tail_ok = True
    plateau_ok = True
    details = []
    for p in (1.0, 2.0):
        rep = w1p_differentiability_check(f, sigma, x, p, hs, ball_per_axis=64)
        totals = rep.norm_totals
        tail_ok = tail_ok and bool(np.all(np.diff(totals) <= 1e-9))
        ball = GridFunction.on_unit_ball(2, 64)
        nodes = ball.node_coords()
        limit = np.array([scn.analytic_md(x, nu) for nu in nodes]) - sigma.eval_many(nodes)
        plateau = w1p_norm(GridFunction(ball.origin, ball.spacing,
                                        limit.reshape(ball.shape), ball.mask), p).total
        margin = max(0.0, float(totals[-2] - totals[-1]))
        plateau_ok = plateau_ok and totals[-1] <= plateau + margin + 1e-9
        details.append(f"p{p:g}: final {totals[-1]:.4g} vs plateau {plateau:.4g}")
    elapsed = time.perf_counter() - t0
    ok = worst_linear <= 1e-10 and tail_ok and plateau_ok and elapsed <= 60.0
    _line(6, "W^{1,p}-topology differentiability", ok,
          f"linear eta max {worst_linear:.3g}; " + "; ".join(details) +
          f"; {elapsed:.2f}s")
    assert worst_linear <= 1e-10
    assert tail_ok
    assert plateau_ok
    assert elapsed <= 60.0


def test_criterion_7_maximal_restriction_suite():
    scn = get_scenario("s6-sqrt-spike")
    f = scn.oracle()
    grid = GridFunction.from_box(f.domain.lo, f.domain.hi, 513)
    h = grid.like(scn.majorant(grid.node_coords(), grid.spacing).reshape(grid.shape))
    Mh = maximal_function(h).values
    t = 2.0 * float(np.min(Mh))
    ts = [t]
    while ts[-1] <= float(np.max(Mh)):
        ts.append(ts[-1] * 2.0)
    results = [lipschitz_restriction(f, h, t, p=1.0) for t in ts]
    nest_violations = sum(
        int(np.any(b.excluded_mask & ~a.excluded_mask))
        for a, b in zip(results, results[1:]))
    prods = [r.lip_p_times_measure for r in results]
    growth = float(np.max(np.diff(prods)))

    sp = Euclidean(3)
    rng = np.random.default_rng(107)
    worst_factor = 0.0
    for u, v in zip(rng.normal(size=(500, 3)) * 2.0, rng.normal(size=(500, 3)) * 2.0):
        den = float(np.linalg.norm(u - v))
        if den > 0:
            num = float(np.linalg.norm(radial_truncation(sp, u, 1.0)
                                       - radial_truncation(sp, v, 1.0)))
            worst_factor = max(worst_factor, num / den)

    ok = nest_violations == 0 and growth <= 1e-12 and worst_factor <= 2.0 + 1e-12
    _line(7, "maximal/restriction suite", ok,
          f"nesting violations {nest_violations}, product growth {growth:.3g}, "
          f"truncation factor {worst_factor:.4f} over 500 pairs")
    assert nest_violations == 0
    assert growth <= 1e-12
    assert worst_factor <= 2.0 + 1e-12


def test_criterion_8_dual_recovery():
    scn = get_scenario("s1-linear")
    f = scn.oracle()
    rng = np.random.default_rng(108)
    x = scn.sample_points(rng, 1)[0]
    steps = _steps(scn, f, x)
    fan = direction_fan(2)
    D0 = coordinate_duals(f.target)
    G0 = dual_gradient(f, D0, x, steps, scn.fd_tol)
    entry_err = float(np.max(np.abs(G0.matrix - scn.linear_matrix)))
    D = D0.extended(gradient_aligned_duals(f.target, G0.matrix, fan))
    G = dual_gradient(f, D, x, steps, scn.fd_tol)
    sigma = fit_metric_differential(f, local_image_gauge(f, x, 32), x, steps,
                                    scn.fd_tol)
    fan_gap = float(np.max(np.abs(
        np.array([md_from_dual(G, D, nu) for nu in fan]) - sigma.eval_many(fan))))

    scn3 = get_scenario("s3-l1-curve")
    f3 = scn3.oracle()
    x3 = scn3.sample_points(rng, 1)[0]
    steps3 = _steps(scn3, f3, x3)
    sups = []
    ms = (4, 8, 16, 32)
    for m in ms:
        Dm = block_step_duals(f3.target, m)
        Gm = dual_gradient(f3, Dm, x3, steps3, scn3.fd_tol)
        sups.append(md_from_dual(Gm, Dm, [1.0]))
    lower_ok = all(s >= 1.0 - 1.0 / m for s, m in zip(sups, ms))
    improving = bool(np.all(np.diff(sups) >= -1e-12))

    ok = entry_err <= 1e-9 and fan_gap <= 1e-3 and lower_ok and improving
    _line(8, "dual recovery", ok,
          f"matrix entry error {entry_err:.3g}, fan gap {fan_gap:.3g}, "
          f"step-dual sups {['%.4f' % s for s in sups]}")
    assert entry_err <= 1e-9
    assert fan_gap <= 1e-3
    assert lower_ok
    assert improving


def test_criterion_9_determinism(tmp_path):
    pairs = [("s1-linear", "md-consistency"), ("s6-sqrt-spike", "sobolev-restriction")]
    identical = True
    for name, suite in pairs:
        outs = []
        for run in ("a", "b"):
            rep = run_suite(get_scenario(name), suite, SuiteParams(seed=5, points=3))
            d = write_report(rep, tmp_path / run)
            outs.append(sorted(d.glob("*.csv")))
        assert [p.name for p in outs[0]] == [p.name for p in outs[1]]
        for pa, pb in zip(*outs):
            identical = identical and pa.read_bytes() == pb.read_bytes()
    _line(9, "determinism", identical,
          f"byte-identical CSV tables for {', '.join(s for _, s in pairs)}")
    assert identical
