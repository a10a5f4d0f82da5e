import numpy as np
import pytest

from metricdiff.derivatives import (
    Box,
    LipschitzMap,
    MapOracle,
    compose,
    composition_check,
    grid_image_gauge,
    local_image_gauge,
    locality_check,
    metric_directional_derivative,
    norm_derivative_probe,
    signed_quotient_probe,
    step_schedule,
    truncated_norm,
    truncated_weak_weak_star_derivative,
    TruncatedFunctional,
)
from metricdiff.errors import ClearanceError, InputError, PremiseError
from metricdiff.gauge import build_kuratowski_gauge
from metricdiff.lab.scenarios import get_scenario
from metricdiff.spaces import Euclidean, LebesgueGrid


def linear_oracle(A, lip=None):
    A = np.asarray(A, dtype=float)
    return MapOracle(Box(-np.ones(A.shape[1]), np.ones(A.shape[1])), Euclidean(A.shape[0]),
                     fn=lambda x: A @ x, fn_batch=lambda X: X @ A.T,
                     lipschitz_bound=lip, name="linear")


def test_md_of_abs_at_zero_is_one_every_step():
    f = get_scenario("s2-abs").oracle()
    est = metric_directional_derivative(f, [0.0], [1.0], tol=1e-12)
    assert est.value == 1.0
    assert est.converged
    assert np.all(est.estimates == 1.0)


def test_md_linear_diagonal_direction():
    f = linear_oracle(np.diag([1.0, 2.0]))
    est = metric_directional_derivative(f, [0.1, -0.2], [0.0, 1.0], tol=1e-9)
    assert est.value == pytest.approx(2.0, abs=1e-9)
    assert est.converged


def test_md_l1_curve_exactly_one_on_cell_boundaries():
    f = get_scenario("s3-l1-curve").oracle()
    # t and t +- h on cell boundaries of the 256-cell grid
    steps = np.array([32, 16, 8, 4, 2]) / 256.0
    est = metric_directional_derivative(f, [0.5], [1.0], steps, tol=1e-12)
    assert np.all(est.estimates == 1.0)
    assert est.value == 1.0 and est.converged


def test_md_requires_nonzero_direction_and_clearance():
    f = linear_oracle(np.eye(2))
    with pytest.raises(InputError):
        metric_directional_derivative(f, [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(ClearanceError):
        metric_directional_derivative(f, [0.999, 0.0], [1.0, 0.0],
                                      steps=np.array([0.5, 0.25]))


def test_md_even_in_direction():
    f = get_scenario("s8-warp").oracle()
    x = np.array([0.2, -0.3])
    steps = step_schedule(f.domain.clearance(x), 1.0, halvings=14)
    nu = np.array([0.6, 0.8])
    a = metric_directional_derivative(f, x, nu, steps, 1e-6)
    b = metric_directional_derivative(f, x, -nu, steps, 1e-6)
    assert a.converged and b.converged
    assert a.value == pytest.approx(b.value, abs=1e-6)


def test_truncated_entry_matches_norm_gradient_oracle():
    # gauge anchored at z0: phi(v) = |v|; d/dnu |A x| = (Ax . Anu)/|Ax|
    A = np.array([[1.0, 0.5], [0.0, 2.0]])
    f = linear_oracle(A)
    g = build_kuratowski_gauge(f.target, [f.target.base_point])
    x = np.array([0.3, -0.2])
    nu = np.array([1.0, 1.0])
    steps = step_schedule(f.domain.clearance(x), float(np.linalg.norm(nu)), halvings=12)
    w = truncated_weak_weak_star_derivative(f, g, x, nu, steps, tol=1e-6)
    Ax, Anu = A @ x, A @ nu
    expected = float(Ax @ Anu / np.linalg.norm(Ax))
    assert w.diagnostic_ok
    assert w.pairings[0] == pytest.approx(expected, abs=1e-8)


def test_truncated_constant_map_all_zero():
    dom = Box(-np.ones(2), np.ones(2))
    f = MapOracle(dom, Euclidean(2), fn=lambda x: np.array([0.4, -0.1]),
                  lipschitz_bound=0.0, name="const")
    g = local_image_gauge(f, [0.0, 0.0], 4)
    w = truncated_weak_weak_star_derivative(f, g, [0.0, 0.0], [1.0, 0.0])
    assert np.all(w.pairings == 0.0)
    est = metric_directional_derivative(f, [0.0, 0.0], [1.0, 0.0])
    assert est.value == 0.0 and est.converged


def test_truncated_l1_curve_base_anchor_entry_is_one():
    f = get_scenario("s3-l1-curve").oracle()
    g = build_kuratowski_gauge(f.target, [f.target.base_point])
    # phi(f(t)) = ||f(t)||_L1 = t, so the pairing is exactly 1
    w = truncated_weak_weak_star_derivative(f, g, [0.4], [1.0], tol=1e-9)
    assert w.pairings[0] == pytest.approx(1.0, abs=1e-12)
    assert truncated_norm(w) == pytest.approx(1.0, abs=1e-12)
    est = metric_directional_derivative(f, [0.4], [1.0], tol=1e-9)
    assert est.value == pytest.approx(truncated_norm(w), abs=1e-9)


def test_truncated_norm_is_max_abs_pairing():
    w = TruncatedFunctional(np.array([0.3, -0.9, 0.5]), "g")
    assert truncated_norm(w) == 0.9
    assert truncated_norm(TruncatedFunctional(np.zeros(4), "g")) == 0.0


def test_truncated_functional_norm_bound_invariant():
    TruncatedFunctional(np.array([0.3, -0.9]), "g", norm_bound=1.0)
    with pytest.raises(InputError):
        TruncatedFunctional(np.array([0.3, -1.5]), "g", norm_bound=1.0)
    with pytest.raises(InputError):
        TruncatedFunctional(np.array([np.inf]), "g")


def test_pairing_homogeneity_in_direction():
    f = get_scenario("s8-warp").oracle()
    x = np.array([0.1, 0.2])
    g = local_image_gauge(f, x, 8)
    steps = step_schedule(f.domain.clearance(x), 3.5, halvings=14)
    nu = np.array([0.6, -0.3])
    base = truncated_weak_weak_star_derivative(f, g, x, nu, steps, 1e-6).pairings
    for t in (-2.0, -1.0, 0.5, 3.0):
        w = truncated_weak_weak_star_derivative(f, g, x, t * nu, steps, 1e-6)
        assert np.max(np.abs(w.pairings - t * base)) <= 1e-5


def test_truncated_norm_below_md_across_scenarios():
    rng = np.random.default_rng(21)
    for name in ("s1-linear", "s2-abs", "s3-l1-curve", "s4-rank-deficient"):
        scn = get_scenario(name)
        f = scn.oracle()
        for x in scn.sample_points(rng, 2):
            steps = step_schedule(f.domain.clearance(x), 1.0, halvings=scn.halvings)
            g = local_image_gauge(f, x, 8)
            for nu in np.eye(f.domain.ndim):
                w = truncated_weak_weak_star_derivative(f, g, x, nu, steps, scn.fd_tol)
                est = metric_directional_derivative(f, x, nu, steps, scn.fd_tol)
                assert truncated_norm(w) <= est.value + 1e-6, name


# -- composition ---------------------------------------------------------------

def test_composition_identity_map():
    f = linear_oracle(np.diag([1.0, 2.0]))
    ident = LipschitzMap(f.target, f.target, lambda v: v, 1.0, "identity")
    x, nu = np.array([0.2, 0.1]), np.array([1.0, 0.0])
    g_Y = local_image_gauge(compose(ident, f), x, 8)
    rep = composition_check(f, ident, g_Y, x, nu, g_X=local_image_gauge(f, x, 8))
    assert rep.max_identity_defect == 0.0
    assert rep.norm_inequality_defect == 0.0


def test_composition_large_radius_clip_acts_as_identity():
    from metricdiff.sobolev import radial_truncation
    f = linear_oracle(np.diag([1.0, 2.0]))
    R = 10.0  # image radius is sqrt(5) at most
    clip = LipschitzMap(f.target, f.target,
                        lambda v: radial_truncation(f.target, v, R), 2.0, "clip")
    x, nu = np.array([-0.3, 0.4]), np.array([0.0, 1.0])
    g_Y = local_image_gauge(compose(clip, f), x, 8)
    rep = composition_check(f, clip, g_Y, x, nu, g_X=local_image_gauge(f, x, 8))
    assert rep.max_identity_defect == 0.0
    assert rep.norm_composed == pytest.approx(rep.norm_original, abs=1e-12)


def test_composition_scaling_halves_pairings():
    f = linear_oracle(np.diag([1.0, 2.0]))
    half = LipschitzMap(f.target, f.target, lambda v: 0.5 * v, 0.5, "half")
    x, nu = np.array([0.2, 0.1]), np.array([0.6, 0.8])
    steps = step_schedule(f.domain.clearance(x), 1.0)
    g_X = local_image_gauge(f, x, 8)
    g_Y = local_image_gauge(compose(half, f), x, 8)
    rep = composition_check(f, half, g_Y, x, nu, steps, g_X=g_X)
    assert rep.max_identity_defect <= 1e-12
    # direct recomputation: pairings of the composed map against the pushed
    # gauge are exactly half of the originals (anchors are scaled images)
    w_orig = truncated_weak_weak_star_derivative(f, g_X, x, nu, steps)
    w_comp = truncated_weak_weak_star_derivative(compose(half, f), g_Y, x, nu, steps)
    assert np.max(np.abs(w_comp.pairings - 0.5 * w_orig.pairings)) <= 1e-9
    assert rep.norm_composed == pytest.approx(0.5 * rep.norm_original, abs=1e-9)
    assert rep.norm_inequality_defect <= 1e-9


def test_composition_rejects_base_point_violation():
    f = linear_oracle(np.eye(2))
    shift = LipschitzMap(f.target, f.target, lambda v: v + 1.0, 1.0, "shift")
    g_Y = local_image_gauge(f, [0.1, 0.1], 4)
    with pytest.raises(InputError):
        composition_check(f, shift, g_Y, [0.1, 0.1], [1.0, 0.0])


# -- locality ------------------------------------------------------------------

def _piecewise_pair():
    dom = Box([-1.0], [1.0])
    tgt = Euclidean(1)
    f1 = MapOracle(dom, tgt, fn=lambda x: np.sin(x), lipschitz_bound=1.0, name="sin")

    def outside_modified(x):
        # equals sin on E = [-0.5, 0.5], bent outside it
        v = float(np.sin(x[0]))
        if abs(x[0]) > 0.5:
            v += (abs(x[0]) - 0.5) ** 2
        return np.array([v])

    f2 = MapOracle(dom, tgt, fn=outside_modified, lipschitz_bound=2.0, name="sin-mod")
    return f1, f2


def test_locality_identical_maps():
    f1, _ = _piecewise_pair()
    E = Box([-0.5], [0.5])
    g = grid_image_gauge(f1, 9)
    rep = locality_check(f1, f1, E, g, test_points=np.array([[0.0], [0.2]]))
    assert np.all(rep.per_axis_max_mismatch == 0.0)


def test_locality_modification_outside_E_invisible_inside():
    f1, f2 = _piecewise_pair()
    E = Box([-0.5], [0.5])
    g = grid_image_gauge(f1, 9)
    steps = np.array([0.05, 0.025, 0.0125, 0.00625])
    pts = np.array([[0.0], [0.1], [-0.2]])
    rep = locality_check(f1, f2, E, g, pts, steps, tol=1e-6)
    assert rep.points_used == 3
    assert np.max(rep.per_axis_max_mismatch) <= 1e-6


def test_locality_excludes_points_near_boundary_of_E():
    f1, f2 = _piecewise_pair()
    E = Box([-0.5], [0.5])
    g = grid_image_gauge(f1, 9)
    steps = np.array([0.1, 0.05])
    rep = locality_check(f1, f2, E, g, np.array([[0.45], [0.0]]), steps)
    assert rep.points_excluded == 1
    assert rep.points_used == 1


def test_locality_premise_failure():
    f1, f2 = _piecewise_pair()
    E = Box([-0.9], [0.9])  # maps differ inside this box
    g = grid_image_gauge(f1, 9)
    with pytest.raises(PremiseError):
        locality_check(f1, f2, E, g, np.array([[0.0]]))


# -- probes and plumbing -------------------------------------------------------

def test_signed_quotient_flags_kink():
    f = get_scenario("s2-abs").oracle()
    probe = signed_quotient_probe(f, [0.0], [1.0])
    assert not probe.converged
    assert probe.two_sided_gap == pytest.approx(2.0, abs=1e-12)


def test_signed_quotient_converges_for_linear():
    f = get_scenario("s4-rank-deficient").oracle()
    probe = signed_quotient_probe(f, [0.1, 0.2], [1.0, 0.0])
    assert probe.converged
    assert probe.value == pytest.approx(1.0, abs=1e-12)


def test_norm_probe_decreases_for_smooth_curve():
    dom = Box([-1.0], [1.0])
    f = MapOracle(dom, Euclidean(2),
                  fn=lambda t: np.array([np.cos(t[0]), np.sin(t[0])]),
                  lipschitz_bound=1.0, name="arc")
    probe = norm_derivative_probe(f, [0.2], [1.0])
    assert probe.cauchy_decrease


def test_step_schedule_validation():
    with pytest.raises(ClearanceError):
        step_schedule(0.0)
    s = step_schedule(1.6, 2.0, h0_fraction=16.0, halvings=3)
    assert s[0] == pytest.approx(0.05)
    assert len(s) == 4 and np.all(np.diff(s) < 0)


def test_lipschitz_bound_check():
    f = linear_oracle(np.diag([1.0, 2.0]), lip=2.0)
    rng = np.random.default_rng(22)
    L = rng.uniform(-1, 1, size=(40, 2))
    R = rng.uniform(-1, 1, size=(40, 2))
    worst = f.check_lipschitz_bound(L, R)
    assert worst <= 2.0 + 1e-8
    f_bad = linear_oracle(np.diag([1.0, 2.0]), lip=1.0)
    with pytest.raises(InputError):
        f_bad.check_lipschitz_bound(L, R)


def test_map_oracle_validates_images():
    dom = Box([-1.0], [1.0])
    bad = MapOracle(dom, Euclidean(2), fn=lambda x: np.array([x[0]]), name="bad")
    with pytest.raises(InputError):
        bad.eval_coords(np.array([[0.0]]))


def test_local_gauge_nests_as_K_doubles():
    f = linear_oracle(np.diag([1.0, 2.0]))
    x = np.array([0.2, -0.1])
    a8 = local_image_gauge(f, x, 8).anchors
    a16 = local_image_gauge(f, x, 16).anchors
    for row in a8:
        assert np.min(np.max(np.abs(a16 - row), axis=1)) == 0.0
