"""Continuous root tracking along one-parameter coefficient curves.

Roots are solved at every grid point at once, then stitched together step
by step: the roots at ``x_{m+1}`` are reordered by the minimum-cost
(sum of squares) assignment against the already ordered roots at ``x_m``.
A step whose unordered distance exceeds the Hölder bound
``H1 * dx^(1/d) + 10 tol`` is bisected before matching.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _norms
from .adspace import ENUM_MAX_D, UnorderedTuple, best_permutations
from .errors import RefinementLimit
from .polycore import roots_batch

MAX_BISECTIONS = 20


@dataclass(eq=False)
class CoefficientCurve:
    """Samples ``a(x_m)`` of a coefficient curve on ``[grid[0], grid[-1]]``.

    ``derivs[s-1]`` holds exact samples of ``a^(s)`` when known.  ``sampler``
    evaluates the curve off-grid (builtin families); without it, refinement
    falls back to linear interpolation of the samples.
    """

    grid: np.ndarray
    samples: np.ndarray
    derivs: np.ndarray | None = None
    family: dict | None = None
    sampler: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float).reshape(-1)
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]
        if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing with >= 2 points")
        if self.samples.shape[0] != self.grid.size:
            raise ValueError("one coefficient vector per grid point required")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")
        if self.derivs is not None:
            self.derivs = np.asarray(self.derivs, dtype=complex)
            if self.derivs.ndim == 2:
                self.derivs = self.derivs[None]
            if self.derivs.shape[1:] != self.samples.shape:
                raise ValueError("derivative samples must match the samples' shape")

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    @property
    def alpha(self) -> float:
        return float(self.grid[0])

    @property
    def beta(self) -> float:
        return float(self.grid[-1])

    @property
    def deriv_order(self) -> int:
        return 0 if self.derivs is None else self.derivs.shape[0]

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.sampler is not None:
            return np.asarray(self.sampler(x), dtype=complex).reshape(x.size, self.d)
        cols = [np.interp(x, self.grid, self.samples[:, j].real)
                + 1j * np.interp(x, self.grid, self.samples[:, j].imag)
                for j in range(self.d)]
        return np.stack(cols, axis=1)


@dataclass(eq=False)
class RootCurve:
    grid: np.ndarray
    lam: np.ndarray
    match_quality: np.ndarray
    holder_margin: np.ndarray
    residual: np.ndarray
    bisections: int = 0
    interpolated: bool = False

    @property
    def d(self) -> int:
        return self.lam.shape[1]


def coefficient_norms_c01(curve: CoefficientCurve) -> tuple[np.ndarray, np.ndarray]:
    """Per coefficient ``(sup |a_j|, Lipschitz seminorm of a_j)``."""
    sup = np.abs(curve.samples).max(axis=0)
    if curve.derivs is not None:
        lip = np.abs(curve.derivs[0]).max(axis=0)
    else:
        lip = np.array([_norms.holder_seminorm(curve.grid, curve.samples[:, j], 1.0,
                                               max_pairs=0)
                        for j in range(curve.d)])
    return sup, lip


def holder_constants(curve: CoefficientCurve) -> tuple[float, float]:
    """``(H, H1)`` for the ``1/d``-Hölder bound on the unordered root curve.

    ``H = 4d max_j ||a_j||_{C^{0,1}}^{1/j}`` and
    ``H1 = 2d A^{1/d} (1 + B + ... + B^{d-1})^{1/d}`` with ``A`` the Lipschitz
    seminorm of ``a`` and ``B = 2 max_j ||a_j||_inf^{1/j}``.
    """
    d = curve.d
    j = np.arange(1, d + 1)
    sup, lip = coefficient_norms_c01(curve)
    H = 4 * d * float(np.max((sup + lip) ** (1.0 / j)))
    A = float(lip.max())
    B = 2 * float(np.max(sup ** (1.0 / j)))
    H1 = 2 * d * A ** (1.0 / d) * float(sum(B ** k for k in range(d))) ** (1.0 / d)
    return H, H1


def _match(prev: np.ndarray, cand: np.ndarray) -> tuple[np.ndarray, float]:
    cols, step = _match_index(prev, cand)
    return cand[cols], step


def _match_index(prev: np.ndarray, cand: np.ndarray) -> tuple[np.ndarray, float]:
    C = np.abs(prev[:, None] - cand[None, :]) ** 2
    rows, cols = linear_sum_assignment(C)
    return cols, math.sqrt(max(float(C[rows, cols].sum()), 0.0) / prev.size)


def _seeded_start(z0: np.ndarray, seed) -> np.ndarray:
    if seed is None:
        order = np.lexsort((-np.round(z0.imag, 9), -np.round(z0.real, 9)))
        return z0[order]
    seed = np.asarray(seed, dtype=complex).reshape(-1)
    if seed.size != z0.size:
        raise ValueError(f"seed has {seed.size} entries, expected {z0.size}")
    return _match(seed, z0)[0]


def track(curve: CoefficientCurve, tol: float = 1e-12, seed=None,
          refine: bool = True, max_bisections: int = MAX_BISECTIONS) -> RootCurve:
    """A sampled continuous parameterization of the roots of ``P_{a(x)}``.

    Raises NonConvergence from the solver, RefinementLimit when a step
    cannot be brought under the Hölder criterion within ``max_bisections``
    nested bisections.
    """
    x = curve.grid
    d = curve.d
    Z, residual = roots_batch(curve.samples, tol)
    H, H1 = holder_constants(curve)
    M = x.size
    lam = np.empty_like(Z)
    lam[0] = _seeded_start(Z[0], seed)
    quality = np.empty(M - 1)
    margin = np.zeros(M - 1)
    bisections = 0

    def allowed(dx):
        return H1 * dx ** (1.0 / d) + 10 * tol

    def refine_step(xa, za, xb, zb, depth):
        nonlocal bisections
        matched, step = _match(za, zb)
        if step <= allowed(xb - xa):
            return matched
        if depth >= max_bisections:
            raise RefinementLimit(f"step [{xa:.6g}, {xb:.6g}] exceeds the Hölder bound "
                                  f"after {depth} bisections")
        bisections += 1
        xm = 0.5 * (xa + xb)
        zm, _ = roots_batch(curve.evaluate(np.array([xm])), tol)
        left = refine_step(xa, za, xm, zm[0], depth + 1)
        return refine_step(xm, left, xb, zb, depth + 1)

    # lam[m] = Z[m][order].  Matching lam[m] against Z[m+1] is a relabelling of
    # matching Z[m] against Z[m+1], so for small d all consecutive matchings
    # are scored in one vectorized pass and only composed here.
    batched = d <= ENUM_MAX_D and M > 1
    if batched:
        perm, steps = best_permutations(Z[:-1], Z[1:])
    order = _match_index(lam[0], Z[0])[0]
    for m in range(M - 1):
        dx = x[m + 1] - x[m]
        if batched:
            order, step = perm[m][order], float(steps[m])
            nxt = Z[m + 1][order]
        else:
            order, step = _match_index(lam[m], Z[m + 1])
            nxt = Z[m + 1][order]
        if refine and step > allowed(dx):
            nxt = refine_step(x[m], lam[m], x[m + 1], Z[m + 1], 0)
            step = math.sqrt(float(np.sum(np.abs(nxt - lam[m]) ** 2)) / d)
            step = min(step, _match(lam[m], nxt)[1])
            order = _match_index(nxt, Z[m + 1])[0]
        lam[m + 1] = nxt
        quality[m] = step
        if H > 0:
            margin[m] = step / (H * dx ** (1.0 / d))
    return RootCurve(grid=x, lam=lam, match_quality=quality, holder_margin=margin,
                     residual=residual, bisections=bisections,
                     interpolated=bisections > 0 and curve.sampler is None)


def unordered_samples(rc: RootCurve) -> list[UnorderedTuple]:
    return [UnorderedTuple(row) for row in rc.lam]


def track_radical(g_samples, d: int, seed: complex) -> np.ndarray:
    """Continuous solution of ``Z^d = g`` along the samples.

    Starts from the ``d``-th root of ``g[0]`` nearest ``seed``; each next
    value is the ``d``-th root nearest the previous one.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    g = np.asarray(g_samples, dtype=complex).reshape(-1)
    principal = g ** (1.0 / d)
    rot = np.exp(2j * np.pi * np.arange(d) / d)
    out = np.empty_like(g)
    prev = complex(seed)
    for m in range(g.size):
        cands = principal[m] * rot
        prev = cands[np.argmin(np.abs(cands - prev))]
        out[m] = prev
    return out
