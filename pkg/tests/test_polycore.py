from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rootlab import polycore as pc
from rootlab.adspace import dist
from rootlab.errors import NonConvergence

from conftest import random_complex

cplx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def test_monic_validation():
    with pytest.raises(ValueError):
        pc.MonicPolynomial([])
    with pytest.raises(ValueError):
        pc.MonicPolynomial([np.nan])
    p = pc.MonicPolynomial([0, -1])
    assert p.d == 2
    np.testing.assert_array_equal(p.full(), [1, 0, -1])
    with pytest.raises(ValueError):
        p.coeffs[0] = 3


def test_known_roots():
    r = pc.roots(pc.MonicPolynomial([0, -1]))
    np.testing.assert_allclose(r.roots, [1, -1], atol=1e-14)
    r = pc.roots(pc.MonicPolynomial([0, 0]))
    np.testing.assert_allclose(r.roots, [0, 0], atol=1e-14)
    r = pc.roots(pc.MonicPolynomial([0, -3, 2]))
    assert dist(r.roots, [1, 1, -2]) < 1e-6


def test_horner_matches_polyval(rng):
    a = random_complex(rng, 5)
    p = pc.MonicPolynomial(a)
    z = random_complex(rng, 7)
    np.testing.assert_allclose(pc.eval_poly(p, z), np.polyval(p.full(), z), rtol=1e-12)


def test_roots_match_companion_eigenvalues(rng):
    for d in range(1, 9):
        a = random_complex(rng, d)
        p = pc.MonicPolynomial(a)
        ours = pc.roots(p).roots
        ref = np.roots(p.full())
        assert dist(ours, ref) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.lists(cplx, min_size=1, max_size=8))
def test_cauchy_bound_holds(a):
    p = pc.MonicPolynomial(a)
    r = pc.roots(p)
    assert np.all(np.abs(r.roots) <= pc.cauchy_bound(p) * (1 + 1e-9) + 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(cplx, min_size=1, max_size=7))
def test_from_roots_round_trip(rs):
    p = pc.from_roots(rs)
    assert p.d == len(rs)
    # a cluster of m roots is only determined to ~eps^(1/m), times a conditioning
    # factor that grows when other roots sit nearby
    z = np.asarray(rs, dtype=complex)
    scale = 1 + np.abs(z).max()
    m = int((np.abs(z[:, None] - z[None, :]) <= 1e-2 * scale).sum(axis=1).max())
    eps = np.finfo(float).eps
    assert dist(pc.roots(p).roots, rs) < min(1e-2, max(1e-8, 1e3 * eps ** (1 / m))) * scale


@settings(max_examples=60, deadline=None)
@given(st.lists(cplx, min_size=1, max_size=6), cplx)
def test_taylor_shift_moves_roots(a, s):
    p = pc.MonicPolynomial(a)
    q = pc.taylor_shift(p, s)
    z = np.array([0.3, -1.1 + 0.5j, 2j])
    np.testing.assert_allclose(pc.eval_poly(q, z), pc.eval_poly(p, z + s),
                               rtol=1e-9, atol=1e-9 * (1 + np.abs(pc.eval_poly(p, z + s))).max())


def test_tschirnhausen_example():
    q, shift = pc.tschirnhausen(pc.MonicPolynomial([3, 0, 0]))
    np.testing.assert_allclose(q.coeffs, [0, -3, 2], atol=1e-14)
    assert shift == -1
    r = pc.roots(q)
    assert dist(r.roots, [1, 1, -2]) < 1e-6


@settings(max_examples=80, deadline=None)
@given(st.lists(cplx, min_size=1, max_size=6))
def test_tschirnhausen_invariants(a):
    p = pc.MonicPolynomial(a)
    q, shift = pc.tschirnhausen(p)
    assert q.coeffs[0] == 0
    assert shift == pytest.approx(-a[0] / len(a))
    # q(z) = p(z + shift); root-level checks live in the acceptance suite on generic input
    z = np.array([0.0, 1.0, -0.5 + 2j])
    ref = pc.eval_poly(p, z + shift)
    np.testing.assert_allclose(pc.eval_poly(q, z), ref, rtol=1e-9,
                               atol=1e-9 * (1 + pc.cauchy_bound(p)) ** len(a))


def test_dominant_index():
    q, _ = pc.tschirnhausen(pc.MonicPolynomial([3, 0, 0]))
    # |a2|^(1/2) = sqrt(3) vs |a3|^(1/3) = 2^(1/3): a2 wins
    assert pc.dominant_index(q) == 2
    assert pc.dominant_index(pc.MonicPolynomial([0, 0, 8])) == 3
    assert pc.dominant_index(pc.MonicPolynomial([0, 4, 8])) == 2  # tie -> smallest index
    assert pc.dominant_index(pc.MonicPolynomial([0, 0])) is None
    with pytest.raises(ValueError):
        pc.dominant_index(pc.MonicPolynomial([1, 0]))


def test_split_example():
    q, _ = pc.tschirnhausen(pc.MonicPolynomial([3, 0, 0]))
    factors, residual = pc.split(q)
    assert sorted(f.d for f in factors) == [1, 2]
    big = next(f for f in factors if f.d == 2)
    small = next(f for f in factors if f.d == 1)
    np.testing.assert_allclose(big.coeffs, [-2, 1], atol=1e-6)
    np.testing.assert_allclose(small.coeffs, [2], atol=1e-6)
    assert residual < 1e-6
    np.testing.assert_allclose(pc.poly_mul(factors).coeffs, q.coeffs, atol=1e-6)


def test_split_single_cluster_returns_input():
    p = pc.MonicPolynomial([0, 0])
    factors, residual = pc.split(p)
    assert len(factors) == 1 and factors[0].d == 2


@settings(max_examples=40, deadline=None)
@given(st.lists(cplx, min_size=2, max_size=6, unique=True))
def test_split_product_reconstructs(rs):
    p = pc.from_roots(rs)
    factors, residual = pc.split(p)
    assert sum(f.d for f in factors) == p.d
    np.testing.assert_allclose(pc.poly_mul(factors).coeffs, p.coeffs,
                               atol=1e-5 * (1 + np.abs(p.coeffs).max()))


def test_roots_batch_shapes_and_residual(rng):
    A = random_complex(rng, (500, 4))
    Z, res = pc.roots_batch(A)
    assert Z.shape == (500, 4) and res.shape == (500,)
    assert np.all(res < 1e-12)


def test_roots_batch_rejects_bad_input():
    with pytest.raises(ValueError):
        pc.roots_batch(np.array([[np.inf, 0]]))


def test_nonconvergence_is_raised():
    with pytest.raises(NonConvergence):
        pc.roots_batch(np.array([[1e-3, 2.0, 0.5]]), max_iter=1)
