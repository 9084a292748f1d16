from __future__ import annotations

import math

import numpy as np
import pytest

from rootlab import polycore as pc
from rootlab.adspace import dist, dist_batch
from rootlab.errors import RefinementLimit
from rootlab.lab.families import get_family, perturbation
from rootlab.tracking import (CoefficientCurve, holder_constants, track, track_radical,
                              unordered_samples)


def sqrt_curve(lo=1.0, hi=2.0, M=2001):
    return perturbation([[0], [0, -1]], [[0], [0]], interval=(lo, hi)).curve(math.inf, M)


def test_curve_validation():
    x = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        CoefficientCurve(x[::-1], np.zeros((5, 2)))
    with pytest.raises(ValueError):
        CoefficientCurve(x, np.zeros((4, 2)))
    with pytest.raises(ValueError):
        CoefficientCurve(x, np.zeros((5, 2)), derivs=np.zeros((1, 5, 3)))


def test_track_sqrt_closed_form():
    curve = sqrt_curve()
    rc = track(curve, seed=[1, -1])
    x = curve.grid
    np.testing.assert_allclose(rc.lam[:, 0], np.sqrt(x), atol=1e-12)
    np.testing.assert_allclose(rc.lam[:, 1], -np.sqrt(x), atol=1e-12)
    rc2 = track(curve, seed=[-1, 1])
    np.testing.assert_allclose(rc2.lam[:, 0], -np.sqrt(x), atol=1e-12)


def test_constant_curve():
    x = np.linspace(0, 1, 50)
    a0 = np.array([1 + 1j, -2, 0.5])
    rc = track(CoefficientCurve(x, np.tile(a0, (50, 1))))
    assert np.allclose(rc.lam, rc.lam[0])
    assert np.all(rc.match_quality <= 1e-12)
    ut = unordered_samples(rc)
    assert all(dist(u, ut[0]) == 0 for u in ut)


def test_track_through_discriminant():
    curve = perturbation([[0], [0, -1]], [[0], [0]]).curve(math.inf, 2001)
    rc = track(curve)
    i0 = np.argmin(np.abs(curve.grid))
    assert curve.grid[i0] == 0
    np.testing.assert_allclose(rc.lam[i0], [0, 0], atol=1e-12)
    assert np.all(np.isfinite(rc.match_quality))
    # continuity: steps are controlled by the Hoelder bound
    H, H1 = holder_constants(curve)
    dx = np.diff(curve.grid)
    assert np.all(rc.match_quality <= H1 * dx ** 0.5 + 1e-10)


def test_root_consistency():
    fam = get_family("cubic_perturbation")
    curve = fam.curve(8, 1001)
    rc = track(curve)
    for m in range(0, 1001, 50):
        p = pc.MonicPolynomial(curve.samples[m])
        cb = pc.cauchy_bound(p)
        assert np.max(np.abs(pc.eval_poly(p, rc.lam[m]))) <= rc.residual[m] * max(1, cb) ** 3 * 1.0001 + 1e-15


def test_consecutive_matching_is_optimal():
    rc = track(get_family("cubic_perturbation").curve(4, 501))
    step = np.linalg.norm(np.diff(rc.lam, axis=0), axis=1) / math.sqrt(3)
    np.testing.assert_allclose(step, dist_batch(rc.lam[:-1], rc.lam[1:]), atol=1e-12)
    np.testing.assert_allclose(step, rc.match_quality, atol=1e-12)


def test_seed_invariance():
    curve = get_family("cubic_perturbation").curve(3, 801)
    a = track(curve, seed=[1, 0, -1])
    b = track(curve, seed=[-1, 1j, 0])
    np.testing.assert_allclose(dist_batch(a.lam, b.lam), 0, atol=1e-10)


def test_deterministic():
    curve = get_family("parabola_shift").curve(16, 1001)
    np.testing.assert_array_equal(track(curve).lam, track(curve).lam)


def test_holder_constants_example():
    curve = perturbation([[0], [0, -1]], [[0], [0]], interval=(0, 1)).curve(math.inf, 101)
    H, H1 = holder_constants(curve)
    assert H1 == pytest.approx(4 * math.sqrt(3))
    # ||a_2||_{C^{0,1}} = sup|x| + Lip = 2 on [0, 1]
    assert H == pytest.approx(4 * 2 * math.sqrt(2))


def test_holder_constants_constant_curve():
    x = np.linspace(0, 1, 11)
    H, H1 = holder_constants(CoefficientCurve(x, np.tile([0.0, -4.0], (11, 1))))
    assert H == pytest.approx(8 * 2)  # only sup norms: 4 d |a_2|^(1/2)
    assert H1 == 0


def test_holder_certificate_on_all_pairs():
    curve = get_family("radical_shift").curve(math.inf, 801)
    rc = track(curve)
    H, H1 = holder_constants(curve)
    I, J = np.triu_indices(curve.grid.size, 1)
    dd = dist_batch(rc.lam[I], rc.lam[J])
    gap = np.abs(curve.grid[I] - curve.grid[J]) ** 0.5
    assert np.all(dd <= H * gap + 2e-12)
    assert np.all(dd <= H1 * gap + 2e-12)


def test_refinement_bisects_when_bound_is_tight():
    fam = perturbation([[0], [0, -1]], [[0], [0]], interval=(1, 2))
    curve = fam.curve(math.inf, 3)
    # understated derivative data shrinks H1, so the grid steps need bisection
    small = CoefficientCurve(curve.grid, curve.samples, derivs=curve.derivs * 1e-3,
                             sampler=curve.sampler)
    rc = track(small, seed=[1, -1])
    assert rc.bisections > 0 and not rc.interpolated
    np.testing.assert_allclose(rc.lam[:, 0], np.sqrt(curve.grid), atol=1e-12)


def test_coarse_grid_agrees_with_fine_grid():
    fam = get_family("parabola_shift")
    coarse = fam.curve(10_000, 5)
    rc = track(coarse)
    assert rc.grid.size == 5
    fine = track(fam.curve(10_000, 4001))
    np.testing.assert_allclose(dist_batch(rc.lam, fine.lam[::1000]), 0, atol=1e-10)


def test_refinement_limit_with_inconsistent_derivatives():
    # derivative data claiming a constant curve forces H1 = 0, which no real step can meet
    x = np.array([0.0, 1.0])
    samples = np.array([[0, -1], [0, -4]], dtype=complex)
    curve = CoefficientCurve(x, samples, derivs=np.zeros((1, 2, 2)))
    with pytest.raises(RefinementLimit):
        track(curve, max_bisections=3)
    with pytest.raises(RefinementLimit):
        track(curve)
    assert track(curve, refine=False).lam.shape == (2, 2)


def test_linear_interpolation_is_flagged():
    x = np.linspace(0, 1, 3)
    curve = CoefficientCurve(x, np.array([[0, -1], [0, -4], [0, -9]], dtype=complex))
    rc = track(curve)
    assert rc.lam.shape == (3, 2)
    assert rc.interpolated == (rc.bisections > 0)


def test_track_radical_examples():
    x = np.linspace(0.01, 1, 500)
    np.testing.assert_allclose(track_radical(np.ones(10), 2, 1), 1)
    lam = track_radical(x, 2, 1)
    np.testing.assert_allclose(lam, np.sqrt(x), atol=1e-14)


def test_track_radical_residual(rng):
    g = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    for d in (2, 3, 5):
        lam = track_radical(g, d, 1)
        assert np.all(np.abs(lam ** d - g) <= 1e-12 * (1 + np.abs(g)))


def test_track_radical_lift_limit():
    n = 10 ** 4
    x = np.linspace(-1, 1, 10001)
    lam = track_radical(x + 1j / n, 2, np.sqrt(-1 + 1j / n))
    keep = np.abs(x) >= 0.05
    target = np.where(x >= 0, np.sqrt(np.abs(x)), 1j * np.sqrt(np.abs(x)))
    assert np.max(np.abs(lam - target)[keep]) < 1e-2
