"""Sobolev and metric analytics of sampled curves.

Curves are sampled on a shared grid.  Derivatives are second-order finite
differences, integrals use the composite trapezoid rule, and the weak
``L^p`` quasinorm is read off the decreasing rearrangement of the samples.

Ordered root curves are passed as :class:`~rootlab.tracking.RootCurve` or
as a ``(grid, values)`` pair with ``values`` of shape ``(M, d)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _norms
from .adspace import (ENUM_MAX_D, UnorderedTuple, all_permutations, almgren_embed_batch,
                      dist_batch, dist_rad, minimizing_permutations)
from .errors import DimensionMismatch, GridMismatch, InsufficientData
from .tracking import CoefficientCurve, RootCurve

COLLISION_FACTOR = 10.0


@dataclass(eq=False)
class SampledFunction:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float).reshape(-1)
        self.values = np.asarray(self.values)
        if self.values.shape[0] != self.grid.size:
            raise ValueError("values and grid lengths differ")
        if not (np.all(np.isfinite(self.grid)) and np.all(np.isfinite(self.values))):
            raise ValueError("samples must be finite")


@dataclass(eq=False)
class PairComparison:
    """Pointwise ``s0`` (tuple distance) and ``s1`` (matched derivative gap).

    ``defined`` is False where ``s1`` rests on finite differences taken
    across a root collision; those values are still reported.
    """

    grid: np.ndarray
    s0: np.ndarray
    s1: np.ndarray
    defined: np.ndarray

    def to_csv(self) -> str:
        lines = ["x,s0,s1,defined_flag"]
        for x, a, b, f in zip(self.grid, self.s0, self.s1, self.defined):
            lines.append(f"{x:.17g},{a:.17g},{b:.17g},{int(bool(f))}")
        return "\n".join(lines) + "\n"


def _arrays(c):
    if isinstance(c, RootCurve):
        return c.grid, c.lam
    if isinstance(c, SampledFunction):
        return c.grid, c.values
    grid, values = c
    if len(values) and isinstance(values[0], UnorderedTuple):
        values = np.stack([t.values for t in values])
    return np.asarray(grid, dtype=float), np.asarray(values)


def _same_grid(g1, g2):
    if g1.shape != g2.shape or not np.array_equal(g1, g2):
        raise GridMismatch("curves are sampled on different grids")


def fd_derivative(f) -> SampledFunction:
    """Central differences inside, one-sided second order at both ends."""
    grid, values = _arrays(f)
    if grid.size < 3:
        raise ValueError("need at least 3 grid points")
    return SampledFunction(grid, np.gradient(values, grid, axis=0, edge_order=2))


def _pointwise_abs(values) -> np.ndarray:
    v = np.asarray(values)
    return np.linalg.norm(v, axis=1) if v.ndim > 1 else np.abs(v)


def integrate(grid, y) -> float:
    return float(np.trapezoid(y, grid))


def lq_norm(f, q: float = 1.0, mask=None) -> float:
    """Trapezoid approximation of ``(int |f|^q)^(1/q)``; ``q = inf`` gives the sup.

    Vector samples use the pointwise Euclidean norm.  ``mask`` restricts the
    integral to a subset of grid points (the integrand is zeroed elsewhere).
    """
    grid, values = _arrays(f)
    if q < 1:
        raise ValueError("q must be >= 1")
    a = _pointwise_abs(values)
    if mask is not None:
        a = np.where(np.asarray(mask, dtype=bool), a, 0.0)
    if math.isinf(q):
        return float(a.max()) if a.size else 0.0
    return integrate(grid, a ** q) ** (1.0 / q)


def weak_lp(f, p: float, lower: float | None = None) -> float:
    """``sup_r r |{|f| > r}|^(1/p)`` from the decreasing rearrangement of the samples.

    Each sample owns the grid cell to its left; the first sample owns
    ``[lower, x_0]`` (empty by default).  With samples ``x_k = k/M`` on
    ``(0, 1)`` and ``lower = 0`` this is exact for decreasing ``|f|``.
    """
    grid, values = _arrays(f)
    if p < 1:
        raise ValueError("p must be >= 1")
    w = np.diff(grid, prepend=grid[0] if lower is None else lower)
    a = _pointwise_abs(values)
    order = np.argsort(-a, kind="stable")
    mass = np.cumsum(w[order])
    return float(np.max(a[order] * mass ** (1.0 / p)))


def ck_gamma_norm(curve: CoefficientCurve, k: int, gamma: float = 1.0,
                  allow_fd: bool = True, max_pairs: int = _norms.MAX_PAIRS) -> np.ndarray:
    """``||a_j||_{C^{k,gamma}}`` for each coefficient.

    Sum of ``max_{s<=k} sup |a_j^(s)|`` and the ``gamma``-Hölder seminorm of
    ``a_j^(k)`` over grid pairs.  Missing derivative orders are filled in by
    finite differences (with a warning) unless ``allow_fd`` is False.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    layers = [curve.samples]
    for s in range(1, k + 1):
        if s <= curve.deriv_order:
            layers.append(curve.derivs[s - 1])
        elif allow_fd:
            if s == curve.deriv_order + 1:
                warnings.warn(f"derivative order {s} estimated by finite differences",
                              stacklevel=2)
            layers.append(np.gradient(layers[-1], curve.grid, axis=0, edge_order=2))
        else:
            raise InsufficientData(f"order {k} requested, {curve.deriv_order} available")
    stack = np.abs(np.stack(layers))
    sup = stack.max(axis=1).max(axis=0)
    semi = np.array([_norms.holder_seminorm(curve.grid, layers[-1][:, j], gamma, max_pairs)
                     for j in range(curve.d)])
    return sup + semi


def metric_speed(curve) -> SampledFunction:
    """Symmetric difference quotient of the tuple distance (one-sided at the ends)."""
    grid, lam = _arrays(curve)
    if grid.size < 3:
        raise ValueError("need at least 3 grid points")
    lam = lam.reshape(grid.size, -1)
    speed = np.empty(grid.size)
    speed[1:-1] = dist_batch(lam[2:], lam[:-2]) / (grid[2:] - grid[:-2])
    speed[0] = dist_batch(lam[1:2], lam[:1])[0] / (grid[1] - grid[0])
    speed[-1] = dist_batch(lam[-1:], lam[-2:-1])[0] / (grid[-1] - grid[-2])
    return SampledFunction(grid, speed)


def q_energy(curve, q: float = 1.0) -> float:
    return lq_norm(metric_speed(curve), q) ** q


def length(curve) -> float:
    """Polygonal length in ``C^d``."""
    _, lam = _arrays(curve)
    lam = np.asarray(lam).reshape(lam.shape[0], -1)
    return float(np.linalg.norm(np.diff(lam, axis=0), axis=1).sum())


def collision_free(grid, lam, factor: float = COLLISION_FACTOR) -> np.ndarray:
    """True where the minimal root gap exceeds ``factor`` times the local step.

    Gap and step are taken over the three-point stencil, so a point is
    flagged when its finite difference reaches across a collision.
    """
    lam = np.asarray(lam).reshape(len(grid), -1)
    M, d = lam.shape
    if d == 1:
        return np.ones(M, dtype=bool)
    iu = np.triu_indices(d, 1)
    gap = np.abs(lam[:, iu[0]] - lam[:, iu[1]]).min(axis=1)
    step = np.abs(np.diff(lam, axis=0)).max(axis=1)
    step_at = np.zeros(M)
    step_at[:-1] = step
    step_at[1:] = np.maximum(step_at[1:], step)
    gap_at = gap.copy()
    gap_at[1:] = np.minimum(gap_at[1:], gap[:-1])
    gap_at[:-1] = np.minimum(gap_at[:-1], gap[1:])
    return gap_at > factor * step_at


def s0s1(f, g, slack: float | None = None) -> PairComparison:
    """Pointwise distance and the largest matched derivative discrepancy.

    ``s1(x)`` maximizes ``(1/sqrt d)||f'(x) - sigma g'(x)||`` over every
    permutation ``sigma`` that attains ``dist(f(x), g(x))`` within ``slack``
    (default ``1e-9 (1 + dist)``).  Where some ordering matches values and
    derivatives exactly, ``s1`` is 0: valid differentials have equal
    derivatives on coinciding values, so every minimizer then agrees.
    """
    gf, F = _arrays(f)
    gg, G = _arrays(g)
    _same_grid(gf, gg)
    if F.shape[1] != G.shape[1]:
        raise DimensionMismatch(f"d={F.shape[1]} vs d={G.shape[1]}")
    M, d = F.shape
    Fd = fd_derivative((gf, F)).values
    Gd = fd_derivative((gg, G)).values
    s0 = dist_batch(F, G)
    tol = (1e-9 * (1.0 + s0)) if slack is None else np.full(M, float(slack))
    s1 = np.empty(M)
    if d <= ENUM_MAX_D:
        perms = all_permutations(d)
        step = max(1, 2_000_000 // (len(perms) * d))
        for s in range(0, M, step):
            sl = slice(s, s + step)
            cost = np.sqrt((np.abs(F[sl, None, :] - G[sl][:, perms]) ** 2).sum(axis=2) / d)
            ok = cost <= s0[sl, None] + tol[sl, None]
            disc = np.sqrt((np.abs(Fd[sl, None, :] - Gd[sl][:, perms]) ** 2).sum(axis=2) / d)
            s1[sl] = np.where(ok, disc, -np.inf).max(axis=1)
            # an exact joint match of values and derivatives means the curves agree to first order
            exact = ((cost == 0) & (disc == 0)).any(axis=1)
            s1[sl][exact] = 0.0
    else:
        for m in range(M):
            sig = minimizing_permutations(F[m], G[m], tol[m])
            gaps = [np.linalg.norm(Fd[m] - Gd[m][list(p)]) for p in sig]
            exact = s0[m] == 0 and min(gaps) == 0
            s1[m] = 0.0 if exact else max(gaps) / math.sqrt(d)
    defined = collision_free(gf, F) & collision_free(gg, G)
    return PairComparison(gf, s0, s1, defined)


def d1q(cmp: PairComparison, E=None, q: float = 1.0) -> float:
    """``sup_E s0 + ||s1||_{L^q(E)}``; ``E`` is a boolean mask over the grid (None: everything)."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if E is None:
        E = np.ones(cmp.grid.size, dtype=bool)
    E = np.asarray(E, dtype=bool)
    if not E.any():
        return 0.0
    return float(cmp.s0[E].max()) + lq_norm((cmp.grid, cmp.s1), q, mask=E)


def s_rad(grid, lam, mu, d: int, slack: float | None = None) -> PairComparison:
    """Radical analogue of :func:`s0s1` for solutions of ``Z^d = g``.

    ``lam`` and ``mu`` are scalar branches; the orbits under the ``d``-th
    roots of unity are compared.
    """
    grid = np.asarray(grid, dtype=float)
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    mu = np.asarray(mu, dtype=complex).reshape(-1)
    if lam.size != grid.size or mu.size != grid.size:
        raise GridMismatch("branches must be sampled on the given grid")
    rot = np.exp(2j * np.pi * np.arange(d) / d)
    s0 = dist_rad(lam, mu, d)
    tol = (1e-9 * (1.0 + s0)) if slack is None else np.full(grid.size, float(slack))
    cost = np.abs(lam[:, None] - rot[None, :] * mu[:, None])
    ok = cost <= s0[:, None] + tol[:, None]
    dl = np.gradient(lam, grid, edge_order=2)
    dm = np.gradient(mu, grid, edge_order=2)
    disc = np.abs(dl[:, None] - rot[None, :] * dm[:, None])
    s1 = np.where(ok, disc, -np.inf).max(axis=1)
    s1[((cost == 0) & (disc == 0)).any(axis=1)] = 0.0
    orbit_l = lam[:, None] * rot[None, :]
    orbit_m = mu[:, None] * rot[None, :]
    defined = collision_free(grid, orbit_l) & collision_free(grid, orbit_m)
    return PairComparison(grid, s0, s1, defined)


def dist_s(c1, c2, q: float = 1.0) -> float:
    """``sup d(c1, c2) + || |c1'| - |c2'| ||_{L^q}`` with metric speeds."""
    g1, L1 = _arrays(c1)
    g2, L2 = _arrays(c2)
    _same_grid(g1, g2)
    sup = float(dist_batch(L1, L2).max())
    diff = metric_speed((g1, L1)).values - metric_speed((g2, L2)).values
    return sup + lq_norm((g1, diff), q)


def dist_e(c1, c2, q: float = 1.0) -> float:
    """``sup d(c1, c2) + |E_q(c1) - E_q(c2)|``."""
    g1, L1 = _arrays(c1)
    g2, L2 = _arrays(c2)
    _same_grid(g1, g2)
    sup = float(dist_batch(L1, L2).max())
    return sup + abs(q_energy((g1, L1), q) - q_energy((g2, L2), q))


def almgren_w1q_distance(f, g, q: float = 1.0) -> float:
    """``||Delta o f - Delta o g||_{W^{1,q}}`` of the embedded curves (values plus FD derivative)."""
    gf, F = _arrays(f)
    gg, G = _arrays(g)
    _same_grid(gf, gg)
    D = almgren_embed_batch(F) - almgren_embed_batch(G)
    return lq_norm((gf, D), q) + lq_norm(fd_derivative((gf, D)), q)
