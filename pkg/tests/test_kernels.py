"""Kernel backends against brute-force oracles and each other."""

import math

import numpy as np
import pytest

from metricdiff import _kernels
from metricdiff._kernels import fallback


def brute_maximal(values, spacing):
    """Direct enumeration: every node, every radius, open-ball averages."""
    u = np.abs(np.asarray(values, dtype=float))
    shape = u.shape
    coords = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"),
                      axis=-1).reshape(-1, len(shape))
    flat = u.ravel()
    nring = math.isqrt(sum((s - 1) ** 2 for s in shape)) + 1
    out = np.zeros(len(coords))
    for i, c in enumerate(coords):
        sq = np.sum((coords - c) ** 2, axis=1)
        for r in range(1, nring + 1):
            inside = sq < r * r
            out[i] = max(out[i], flat[inside].mean())
    return out.reshape(shape)


BACKENDS = [fallback]
if _kernels._impl is not fallback:
    BACKENDS.append(_kernels._impl)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
@pytest.mark.parametrize("shape", [(9,), (6, 5), (4, 3, 3)])
def test_maximal_matches_brute_force(impl, shape):
    rng = np.random.default_rng(hash(shape) % 2**31)
    u = rng.normal(size=shape)
    got = impl.maximal_function_grid(u, 0.25)
    want = brute_maximal(u, 0.25)
    assert np.max(np.abs(got - want)) <= 1e-12


def test_backends_agree_on_larger_grids():
    rng = np.random.default_rng(11)
    for shape in [(65,), (31, 29)]:
        u = rng.normal(size=shape)
        a = fallback.maximal_function_grid(u, 0.1)
        b = _kernels.maximal_function_grid(u, 0.1)
        assert np.max(np.abs(a - b)) <= 1e-10


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_maximal_dominates_pointwise(impl):
    rng = np.random.default_rng(12)
    u = rng.normal(size=(12, 11))
    Mu = impl.maximal_function_grid(u, 0.5)
    assert np.all(Mu >= np.abs(u))


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_maximal_constant_field(impl):
    Mu = impl.maximal_function_grid(np.full((7, 7), -3.0), 1.0)
    assert np.all(Mu == 3.0)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_maximal_power_of_two_scaling_exact(impl):
    rng = np.random.default_rng(13)
    u = rng.normal(size=(10, 9))
    base = impl.maximal_function_grid(u, 0.3)
    for c in (2.0, -4.0, 0.5):
        assert np.array_equal(impl.maximal_function_grid(c * u, 0.3), abs(c) * base)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_maximal_monotone_in_magnitude(impl):
    rng = np.random.default_rng(14)
    u = rng.normal(size=(8, 8))
    v = u * rng.uniform(1.0, 2.0, size=u.shape)  # |u| <= |v| nodewise
    Mu = impl.maximal_function_grid(u, 0.2)
    Mv = impl.maximal_function_grid(v, 0.2)
    assert np.all(Mu <= Mv + 1e-14)


def test_maximal_left_half_indicator_brute_force():
    # indicator of the left half of [0,1] on 9 nodes; value at the right edge
    u = (np.linspace(0, 1, 9) < 0.5).astype(float)
    want = brute_maximal(u, 1.0 / 8.0)
    got = _kernels.maximal_function_grid(u, 1.0 / 8.0)
    assert np.array_equal(got, want)
    assert got[-1] == want[-1] > 0


def brute_pairwise(dom, img, p, w, a):
    best = 0.0
    for i in range(len(dom)):
        for j in range(i + 1, len(dom)):
            dd = math.sqrt(float(np.sum((dom[i] - dom[j]) ** 2)))
            if dd == 0:
                continue
            diff = np.abs(img[i] - img[j])
            di = float(np.max(diff)) if math.isinf(p) else \
                float((w * np.sum(diff**p)) ** (1.0 / p))
            best = max(best, di**a / dd)
    return best


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
@pytest.mark.parametrize("p,w,a", [(2.0, 1.0, 1.0), (1.0, 0.25, 1.0),
                                   (math.inf, 1.0, 1.0), (2.0, 1.0, 0.5)])
def test_pairwise_matches_brute_force(impl, p, w, a):
    rng = np.random.default_rng(15)
    dom = rng.normal(size=(40, 2))
    img = rng.normal(size=(40, 3))
    got = impl.pairwise_max_quotient(dom, img, p, w, a)
    want = brute_pairwise(dom, img, p, w, a)
    assert got == pytest.approx(want, rel=1e-12)


def test_pairwise_skips_coincident_rows():
    dom = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    img = np.array([[0.0], [5.0], [2.0]])
    # the coincident pair (rows 0,1) is skipped; the best remaining quotient
    # is |5 - 2| / 1 from rows 1,2
    got = _kernels.pairwise_max_quotient(dom, img, 2.0, 1.0, 1.0)
    assert got == pytest.approx(3.0, rel=1e-12)
