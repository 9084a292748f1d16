"""The metric space of unordered d-tuples of complex numbers.

``dist([z], [w]) = min_sigma (1/sqrt(d)) ||z - sigma w||_2`` is evaluated by
an exact minimum-cost assignment on the squared-distance matrix.  The same
quantity is also the 2-Wasserstein distance between the uniform atomic
measures on the entries, which :func:`wasserstein2` computes through the
transport linear program instead.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .errors import DimensionMismatch

ENUM_MAX_D = 6
_CHUNK = 2_000_000


@dataclass(frozen=True, eq=False)
class UnorderedTuple:
    """A point ``[z_1, ..., z_d]``; the stored ordering carries no meaning."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).reshape(-1)
        if v.size < 1:
            raise ValueError("tuple needs d >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("tuple entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.d

    def __repr__(self) -> str:
        return f"UnorderedTuple({self.values.tolist()})"


def _as_values(T) -> np.ndarray:
    if isinstance(T, UnorderedTuple):
        return T.values
    return np.asarray(T, dtype=complex).reshape(-1)


def _check(z, w):
    if z.size != w.size:
        raise DimensionMismatch(f"d={z.size} vs d={w.size}")


def _cost(z, w) -> np.ndarray:
    return np.abs(z[:, None] - w[None, :]) ** 2


def optimal_assignment(T1, T2) -> tuple[np.ndarray, float]:
    """Return ``(sigma, cost)`` with ``sigma[i]`` the index in ``T2`` matched to ``T1[i]``."""
    z, w = _as_values(T1), _as_values(T2)
    _check(z, w)
    C = _cost(z, w)
    rows, cols = linear_sum_assignment(C)
    sigma = np.empty(z.size, dtype=int)
    sigma[rows] = cols
    # fsum is correctly rounded, so the cost does not depend on argument order
    return sigma, math.fsum(C[rows, cols])


def dist(T1, T2) -> float:
    """The metric on unordered tuples."""
    z, w = _as_values(T1), _as_values(T2)
    # canonical argument order makes symmetry exact even when the optimum is not unique
    key = lambda v: sorted(zip(v.real.tolist(), v.imag.tolist()))
    if key(w) < key(z):
        z, w = w, z
    _, cost = optimal_assignment(z, w)
    return math.sqrt(max(cost, 0.0) / z.size)


@lru_cache(maxsize=None)
def all_permutations(d: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(d))), dtype=int)


def dist_batch(Z, W) -> np.ndarray:
    """Row-wise ``dist`` for arrays of shape ``(M, d)``.

    For ``d <= 6`` all permutations are scored at once (still exact);
    larger ``d`` loops over the assignment solver.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    if Z.shape[1] != W.shape[1]:
        raise DimensionMismatch(f"d={Z.shape[1]} vs d={W.shape[1]}")
    if Z.shape[0] != W.shape[0]:
        raise ValueError("row counts differ")
    if Z.shape[1] > ENUM_MAX_D:
        return np.array([dist(z, w) for z, w in zip(Z, W)])
    return best_permutations(Z, W)[1]


def best_permutations(Z, W) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise optimal matching for ``d <= 6`` by scoring every permutation.

    Returns ``(P, D)`` with ``W[m, P[m]]`` the ordering of ``W[m]`` closest to
    ``Z[m]`` and ``D[m] = dist(Z[m], W[m])``.  Ties go to the first
    permutation in lexicographic order.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    M, d = Z.shape
    if d > ENUM_MAX_D:
        raise ValueError(f"permutation enumeration is limited to d <= {ENUM_MAX_D}")
    perms = all_permutations(d)
    best = np.empty(M, dtype=int)
    out = np.empty(M)
    step = max(1, _CHUNK // (len(perms) * d))
    for s in range(0, M, step):
        z, w = Z[s:s + step], W[s:s + step]
        cost = (np.abs(z[:, None, :] - w[:, perms]) ** 2).sum(axis=2)
        k = cost.argmin(axis=1)
        best[s:s + step] = k
        out[s:s + step] = np.sqrt(cost[np.arange(k.size), k] / d)
    return perms[best], out


def perm_costs(Z, W) -> np.ndarray:
    """``(1/sqrt d)||z - sigma w||`` for every permutation, shape ``(M, d!)``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    d = Z.shape[1]
    perms = all_permutations(d)
    return np.sqrt((np.abs(Z[:, None, :] - W[:, perms]) ** 2).sum(axis=2) / d)


def minimizing_permutations(T1, T2, slack: float | None = None) -> list[tuple[int, ...]]:
    """All ``sigma`` with ``(1/sqrt d)||z - sigma w|| <= dist + slack``.

    ``sigma[i]`` indexes ``T2``.  Default slack is ``1e-9 (1 + dist)``.
    Uses a depth-first branch and bound seeded by the assignment optimum, so
    larger ``d`` stay cheap when the minimizer is (nearly) unique.
    """
    z, w = _as_values(T1), _as_values(T2)
    _check(z, w)
    d = z.size
    best = dist(z, w)
    if slack is None:
        slack = 1e-9 * (1.0 + best)
    limit = d * (best + slack) ** 2
    C = _cost(z, w)
    # optimistic completion: each remaining row takes its cheapest column
    row_min = C.min(axis=1)
    tail = np.concatenate((np.cumsum(row_min[::-1])[::-1], [0.0]))
    found: list[tuple[int, ...]] = []
    perm: list[int] = []
    used = [False] * d

    def dfs(i: int, acc: float):
        if i == d:
            found.append(tuple(perm))
            return
        for j in np.argsort(C[i], kind="stable"):
            if used[j]:
                continue
            c = acc + C[i, j]
            if c + tail[i + 1] > limit:
                continue
            used[j] = True
            perm.append(int(j))
            dfs(i + 1, c)
            perm.pop()
            used[j] = False

    dfs(0, 0.0)
    return sorted(found)


@dataclass(frozen=True)
class AlmgrenConfig:
    """``h = 2d^2 + 1`` directions ``theta_l = exp(2 pi i l / h)``, ``l = 0..h-1``."""

    d: int
    thetas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        h = 2 * self.d ** 2 + 1
        th = np.exp(2j * np.pi * np.arange(h) / h)
        th.setflags(write=False)
        object.__setattr__(self, "thetas", th)

    @property
    def h(self) -> int:
        return 2 * self.d ** 2 + 1

    @property
    def N(self) -> int:
        return self.d * self.h

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant ``sqrt(h)`` of each Almgren map."""
        return math.sqrt(self.h)


def almgren_map(T, theta: complex) -> np.ndarray:
    """``Re(theta z_i)`` sorted non-decreasingly."""
    if not np.isclose(abs(theta), 1.0, rtol=0, atol=1e-12):
        raise ValueError("theta must be a unit complex number")
    return np.sort((theta * _as_values(T)).real)


def almgren_embed(T, cfg: AlmgrenConfig | None = None) -> np.ndarray:
    """The embedding into ``R^N``: ``h^(-1/2)`` times all Almgren maps stacked."""
    z = _as_values(T)
    cfg = cfg or AlmgrenConfig(z.size)
    if cfg.d != z.size:
        raise DimensionMismatch(f"config d={cfg.d} vs tuple d={z.size}")
    return almgren_embed_batch(z[None, :], cfg)[0]


def almgren_embed_batch(Z, cfg: AlmgrenConfig | None = None) -> np.ndarray:
    """Embed each row of ``Z`` (shape ``(M, d)``); returns shape ``(M, N)``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    cfg = cfg or AlmgrenConfig(Z.shape[1])
    if cfg.d != Z.shape[1]:
        raise DimensionMismatch(f"config d={cfg.d} vs tuple d={Z.shape[1]}")
    eta = np.sort((cfg.thetas[None, :, None] * Z[:, None, :]).real, axis=2)
    return eta.reshape(Z.shape[0], -1) / math.sqrt(cfg.h)


def combinatorial_alpha(points: Sequence[complex], cfg: AlmgrenConfig) -> float:
    """Best ``alpha`` such that some direction has ``|Re(theta z_k)| >= alpha |z_k|`` for all k.

    Zero entries are ignored (they satisfy the inequality for any alpha).
    """
    z = np.asarray(points, dtype=complex).reshape(-1)
    z = z[z != 0]
    if z.size == 0:
        return 1.0
    ratios = np.abs((cfg.thetas[:, None] * z[None, :]).real) / np.abs(z)[None, :]
    return float(ratios.min(axis=1).max())


def wasserstein2(T1, T2) -> float:
    """2-Wasserstein distance between ``(1/d) sum delta_{z_i}`` and ``(1/d) sum delta_{w_j}``.

    Solved as a transport linear program over couplings with marginals
    ``1/d``.  The plan is read back and the cost recomputed from it.
    """
    z, w = _as_values(T1), _as_values(T2)
    _check(z, w)
    d = z.size
    C = _cost(z, w)
    A_eq = np.zeros((2 * d, d * d))
    for i in range(d):
        A_eq[i, i * d:(i + 1) * d] = 1.0
        A_eq[d + i, i::d] = 1.0
    b_eq = np.full(2 * d, 1.0 / d)
    res = linprog(C.ravel(), A_eq=A_eq[:-1], b_eq=b_eq[:-1], bounds=(0, None),
                  method="highs-ds")
    if res.status != 0:
        raise ArithmeticError(f"transport LP failed: {res.message}")
    plan = np.clip(res.x.reshape(d, d), 0.0, None)
    return math.sqrt(max(float((plan * C).sum()), 0.0))


def coeffs_of(T) -> np.ndarray:
    """``a_j = (-1)^j e_j(z)``: the coefficient vector of the monic polynomial with roots ``T``."""
    from .polycore import from_roots

    return from_roots(_as_values(T)).coeffs.copy()


def sort_increasing(T: Sequence[float]) -> np.ndarray:
    """Non-decreasing rearrangement of a real tuple."""
    v = np.asarray(T)
    if np.iscomplexobj(v):
        if np.any(v.imag != 0):
            raise ValueError("entries must be real")
        v = v.real
    return np.sort(v.astype(float))


def dist_rad(lam, mu, d: int):
    """``min_j |lam - theta^j mu|`` with ``theta = exp(2 pi i / d)``; vectorized over arrays."""
    if d < 1:
        raise ValueError("d must be >= 1")
    lam = np.asarray(lam, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    rot = np.exp(2j * np.pi * np.arange(d) / d)
    out = np.abs(lam[..., None] - rot * mu[..., None]).min(axis=-1)
    return float(out) if out.ndim == 0 else out


def radical_orbit(lam: complex, d: int) -> UnorderedTuple:
    """``[lam, theta lam, ..., theta^(d-1) lam]``."""
    return UnorderedTuple(lam * np.exp(2j * np.pi * np.arange(d) / d))
