"""Monic complex polynomials: evaluation, roots, Cauchy bound, Tschirnhausen form, splitting.

A monic polynomial of degree ``d`` is stored by its non-leading coefficients
``(a_1, ..., a_d)`` so that ``P(Z) = Z^d + a_1 Z^(d-1) + ... + a_d``.

Roots are computed with the Aberth-Ehrlich simultaneous iteration.  The
batched solver :func:`roots_batch` runs the same iteration on many
polynomials at once and is what the tracking code uses along a grid.
Multiple roots are not deflated; an ``m``-fold root is only resolved to
about ``eps**(1/m)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonConvergence

EPS = np.finfo(float).eps
MAX_ITER = 500
MAX_RESTARTS = 4


@dataclass(frozen=True, eq=False)
class MonicPolynomial:
    """``Z^d + sum_j coeffs[j-1] Z^(d-j)``; the leading 1 is implicit."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size < 1:
            raise ValueError("monic polynomial needs degree d >= 1")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return int(self.coeffs.size)

    def full(self) -> np.ndarray:
        """Coefficients highest degree first, including the leading 1."""
        return np.concatenate(([1.0 + 0j], self.coeffs))

    def __call__(self, z):
        return eval_poly(self, z)

    def __repr__(self) -> str:
        return f"MonicPolynomial(d={self.d}, coeffs={self.coeffs.tolist()})"


@dataclass(frozen=True, eq=False)
class RootMultiset:
    roots: np.ndarray
    residual: float

    @property
    def d(self) -> int:
        return int(self.roots.size)


def eval_poly(p: MonicPolynomial, z):
    """Horner evaluation of ``p`` at ``z`` (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    acc = np.ones_like(z)
    for a in p.coeffs:
        acc = acc * z + a
    return acc[()] if acc.ndim == 0 else acc


def cauchy_bound(p: MonicPolynomial) -> float:
    """``2 max_j |a_j|^(1/j)``; bounds the modulus of every root."""
    return float(_cauchy_rows(p.coeffs[None, :])[0])


def _cauchy_rows(A: np.ndarray) -> np.ndarray:
    j = np.arange(1, A.shape[1] + 1)
    return 2.0 * np.max(np.abs(A) ** (1.0 / j), axis=1)


def _horner_rows(A: np.ndarray, Z: np.ndarray):
    """Value, derivative and roundoff scale ``sum |a_j||z|^(d-j)`` per root."""
    p = np.ones_like(Z)
    dp = np.zeros_like(Z)
    scale = np.ones(Z.shape)
    absz = np.abs(Z)
    for j in range(A.shape[1]):
        a = A[:, j, None]
        dp = dp * Z + p
        p = p * Z + a
        scale = scale * absz + np.abs(a)
    return p, dp, scale


def _initial_guess(A: np.ndarray, cb: np.ndarray, attempt: int) -> np.ndarray:
    d = A.shape[1]
    k = np.arange(d)
    phase = 2 * np.pi * k / d + 0.4 + 0.9 * attempt
    # radial jitter breaks symmetric stalls (e.g. real starts for Z^2 + 1)
    radius = 0.5 * cb[:, None] * (1.0 + 0.05 * (k + 1) / d)
    center = -A[:, :1] / d
    return center + radius * np.exp(1j * phase)[None, :]


def _aberth(A: np.ndarray, Z: np.ndarray, max_iter: int) -> np.ndarray:
    Z = Z.copy()
    M, d = Z.shape
    active = np.ones((M, d), dtype=bool)
    rows = np.arange(M)
    for _ in range(max_iter):
        rows = rows[active[rows].any(axis=1)]
        if rows.size == 0:
            break
        Ar, Zr, act = A[rows], Z[rows], active[rows]
        p, dp, scale = _horner_rows(Ar, Zr)
        on_root = np.abs(p) <= 8 * EPS * scale
        diff = Zr[:, :, None] - Zr[:, None, :]
        idx = np.arange(d)
        diff[:, idx, idx] = 1.0
        inv = 1.0 / diff
        inv[:, idx, idx] = 0.0
        s = inv.sum(axis=2)
        denom = dp - p * s
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = p / denom
        bad = ~np.isfinite(delta)
        if bad.any():
            kick = 1e-3 * (1.0 + np.abs(Zr)) * np.exp(1j * (idx[None, :] + 1.0))
            delta = np.where(bad, kick, delta)
        step = act & ~on_root
        Znew = np.where(step, Zr - delta, Zr)
        stalled = np.abs(delta) <= 4 * EPS * np.abs(Zr)
        Z[rows] = Znew
        active[rows] = step & ~stalled
    return Z


def roots_batch(A, tol: float = 1e-12, max_iter: int = MAX_ITER):
    """Roots of many monic polynomials at once.

    ``A`` has shape ``(M, d)`` holding ``(a_1..a_d)`` per row.  Returns
    ``(roots, residual)`` with ``residual[m] = max_k |P(r_k)| / max(1, cb)^d``.
    Raises NonConvergence when a row stays above ``tol`` after all restarts.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if tol <= 0:
        raise ValueError("tol must be positive")
    M, d = A.shape
    if d < 1:
        raise ValueError("degree must be >= 1")
    if not np.all(np.isfinite(A)):
        raise ValueError("coefficients must be finite")
    cb = _cauchy_rows(A)
    Z = np.zeros((M, d), dtype=complex)
    residual = np.zeros(M)
    pending = np.flatnonzero(cb > 0)
    for attempt in range(MAX_RESTARTS + 1):
        if pending.size == 0:
            break
        Ap = A[pending]
        Zp = _aberth(Ap, _initial_guess(Ap, cb[pending], attempt), max_iter)
        p, _, _ = _horner_rows(Ap, Zp)
        res = np.max(np.abs(p), axis=1) / np.maximum(1.0, cb[pending]) ** d
        Z[pending] = Zp
        residual[pending] = res
        pending = pending[res > tol]
    if pending.size:
        raise NonConvergence(
            f"{pending.size} polynomial(s) above tol={tol:g}; worst residual "
            f"{residual[pending].max():.3e}"
        )
    return Z, residual


def roots(p: MonicPolynomial, tol: float = 1e-12) -> RootMultiset:
    """All ``d`` roots of ``p`` with multiplicity, in a canonical order."""
    Z, res = roots_batch(p.coeffs[None, :], tol)
    z = Z[0]
    order = np.lexsort((-np.round(z.imag, 9), -np.round(z.real, 9)))
    return RootMultiset(roots=z[order], residual=float(res[0]))


def from_roots(rs: Sequence[complex]) -> MonicPolynomial:
    """Monic polynomial with the given roots, multiplying factors by increasing modulus."""
    rs = np.asarray(rs, dtype=complex).reshape(-1)
    c = np.array([1.0 + 0j])
    for r in rs[np.argsort(np.abs(rs), kind="stable")]:
        c = np.append(c, 0) - r * np.concatenate(([0], c))
    return MonicPolynomial(c[1:])


def taylor_shift(p: MonicPolynomial, s: complex) -> MonicPolynomial:
    """Coefficients of ``Z -> p(Z + s)`` via repeated synthetic division."""
    c = p.full().astype(complex)
    n = c.size
    for i in range(n - 1):
        for j in range(1, n - i):
            c[j] += s * c[j - 1]
    return MonicPolynomial(c[1:])


def tschirnhausen(p: MonicPolynomial) -> tuple[MonicPolynomial, complex]:
    """Return ``(q, shift)`` with ``q(Z) = p(Z + shift)``, ``shift = -a_1/d`` and ``q``'s first coefficient 0.

    The roots of ``q`` are the roots of ``p`` moved by ``a_1/d``.
    """
    shift = complex(-p.coeffs[0] / p.d)
    if shift == 0:
        return p, 0j
    q = taylor_shift(p, shift).coeffs.copy()
    q[0] = 0.0
    return MonicPolynomial(q), shift


def dominant_index(p: MonicPolynomial, rtol: float = 1e-12):
    """Smallest ``k >= 2`` maximizing ``|a_k|^(1/k)``, or None if all vanish.

    ``p`` must be in Tschirnhausen form.  Values within ``rtol`` of the
    maximum count as ties.
    """
    if p.coeffs[0] != 0:
        raise ValueError("polynomial is not in Tschirnhausen form")
    if p.d < 2:
        return None
    k = np.arange(2, p.d + 1)
    v = np.abs(p.coeffs[1:]) ** (1.0 / k)
    top = v.max()
    if top == 0:
        return None
    return int(k[np.flatnonzero(v >= top * (1 - rtol))[0]])


def _clusters(z: np.ndarray, threshold: float) -> list[np.ndarray]:
    d = z.size
    parent = list(range(d))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(d):
        for j in range(i + 1, d):
            if abs(z[i] - z[j]) <= threshold:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(d):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def poly_mul(factors: Sequence[MonicPolynomial]) -> MonicPolynomial:
    c = np.array([1.0 + 0j])
    for f in factors:
        c = np.convolve(c, f.full())
    return MonicPolynomial(c[1:])


def split(p: MonicPolynomial, gap_factor: float = 10.0, tol: float = 1e-6):
    """Factor ``p`` into coprime monic factors by single-linkage root clustering.

    Roots closer than ``gap_factor * tol * cauchy_bound(p)`` land in the
    same factor.  Returns ``(factors, residual)`` where ``residual`` is the
    max coefficient error of the product against ``p``.  Factors are
    ordered by the real part of their cluster centroid, descending.
    """
    if gap_factor <= 1:
        raise ValueError("gap_factor must exceed 1")
    rm = roots(p, min(tol, 1e-12))
    threshold = gap_factor * tol * cauchy_bound(p)
    groups = _clusters(rm.roots, threshold)
    groups.sort(key=lambda g: (-round(rm.roots[g].mean().real, 9),
                               -round(rm.roots[g].mean().imag, 9)))
    factors = [from_roots(rm.roots[g]) for g in groups]
    residual = float(np.max(np.abs(poly_mul(factors).coeffs - p.coeffs)))
    return factors, residual
