"""Analytic coefficient-curve families ``a_n = a + c(n) b`` with exact derivatives.

Every coefficient function is a polynomial in ``x``, optionally with a
different polynomial on each side of ``x = 0`` (used by the C^{d-1,1}
probe).  ``n = inf`` selects the limit member ``a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from ..tracking import CoefficientCurve

INF = math.inf


@dataclass(frozen=True)
class Piecewise:
    """Polynomial on ``x < 0`` and on ``x >= 0`` (identical for smooth pieces)."""

    neg: Polynomial
    pos: Polynomial

    @classmethod
    def smooth(cls, coef) -> "Piecewise":
        p = Polynomial(np.asarray(coef, dtype=complex))
        return cls(p, p)

    def __call__(self, x, s: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        neg = self.neg.deriv(s) if s else self.neg
        pos = self.pos.deriv(s) if s else self.pos
        return np.where(x >= 0, pos(x), neg(x)).astype(complex)

    def scale(self, t: complex) -> "Piecewise":
        return Piecewise(self.neg * t, self.pos * t)

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.neg.coef != 0) or np.any(self.pos.coef != 0))


def _zero() -> Piecewise:
    return Piecewise.smooth([0.0])


@dataclass(frozen=True)
class Family:
    """``a_n(x) = base(x) + rate(n) * pert(x)`` on ``interval``, ``rate(n) = 1/n^power``.

    ``analytic_limit`` optionally gives a closed-form continuous
    parameterization of the limit roots (shape ``(M, d)``).
    """

    name: str
    d: int
    interval: tuple[float, float]
    base: tuple[Piecewise, ...]
    pert: tuple[Piecewise, ...]
    power: float = 1.0
    params: dict = field(default_factory=dict)
    analytic_limit: Callable[[np.ndarray], np.ndarray] | None = None
    smooth: bool = True

    def rate(self, n: float) -> float:
        return 0.0 if math.isinf(n) else float(n) ** (-self.power)

    def coeffs(self, x, n: float = INF, s: int = 0) -> np.ndarray:
        """``a_n^{(s)}(x)``, shape ``(len(x), d)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r = self.rate(n)
        cols = [b(x, s) + (r * p(x, s) if r else 0) for b, p in zip(self.base, self.pert)]
        return np.stack(cols, axis=1)

    def grid(self, grid_size: int) -> np.ndarray:
        return np.linspace(self.interval[0], self.interval[1], int(grid_size))

    def curve(self, n: float = INF, grid_size: int = 10_000, grid=None) -> CoefficientCurve:
        x = self.grid(grid_size) if grid is None else np.asarray(grid, dtype=float)
        derivs = np.stack([self.coeffs(x, n, s) for s in range(1, self.d + 1)])
        return CoefficientCurve(
            grid=x, samples=self.coeffs(x, n), derivs=derivs,
            family={"name": self.name, "params": {**self.params, "n": _n_json(n)}},
            sampler=lambda xs: self.coeffs(xs, n),
        )

    @property
    def is_radical(self) -> bool:
        """True when only the constant term varies: ``Z^d = g`` with ``g = -a_d``."""
        return all(b.is_zero and p.is_zero
                   for b, p in zip(self.base[:-1], self.pert[:-1]))

    def g(self, x, n: float = INF, s: int = 0) -> np.ndarray:
        if not self.is_radical:
            raise ValueError(f"family {self.name!r} is not of radical type")
        return -self.coeffs(x, n, s)[:, -1]

    def scaled(self, t: float) -> "Family":
        """``a_j -> t^j a_j``: every root is multiplied by ``t``."""
        f = lambda seq: tuple(c.scale(t ** (j + 1)) for j, c in enumerate(seq))
        lim = self.analytic_limit
        return replace(self, base=f(self.base), pert=f(self.pert),
                       params={**self.params, "scale": t},
                       analytic_limit=None if lim is None else (lambda x: t * lim(x)))

    def describe(self) -> dict:
        return {"name": self.name, "d": self.d, "interval": list(self.interval),
                "power": self.power, "params": dict(self.params)}


def _n_json(n):
    return "inf" if math.isinf(n) else n


def radical(name, d, g_base, g_pert, interval, power=1.0, params=None, **kw) -> Family:
    """``Z^d = g_base + g_pert / n^power`` (coefficients in ascending powers of x)."""
    base = tuple(_zero() for _ in range(d - 1)) + (Piecewise.smooth(-np.asarray(g_base, complex)),)
    pert = tuple(_zero() for _ in range(d - 1)) + (Piecewise.smooth(-np.asarray(g_pert, complex)),)
    return Family(name, d, tuple(interval), base, pert, power, params or {}, **kw)


def perturbation(a, b, interval=(-1.0, 1.0), power=1.0, name="perturbation") -> Family:
    """Generic ``a_n = a + b / n^power``; ``a[j]``, ``b[j]`` are ascending coefficient lists of ``a_{j+1}(x)``."""
    if len(a) != len(b):
        raise ValueError("a and b must have the same degree")
    return Family(name, len(a), tuple(interval),
                  tuple(Piecewise.smooth(c) for c in a),
                  tuple(Piecewise.smooth(c) for c in b), power,
                  {"a": _jsonable(a), "b": _jsonable(b)})


def _jsonable(polys):
    out = []
    for c in polys:
        row = []
        for v in np.atleast_1d(np.asarray(c, dtype=complex)):
            row.append([float(v.real), float(v.imag)] if v.imag else float(v.real))
        out.append(row)
    return out


def radical_shift(d: int = 2, sign: int = 1) -> Family:
    """``g_n = x + sign * i / n`` on ``[-1, 1]``."""
    return radical("radical_shift" if sign > 0 else "radical_shift_conj", d,
                   [0, 1], [sign * 1j], (-1.0, 1.0), params={"d": d, "sign": sign})


def parabola_shift(d: int = 2) -> Family:
    """``g_n = x^2 + 1/n`` on ``[-1, 1]``; the limit roots admit the analytic lift ``(-x, x)``."""
    lim = None
    if d == 2:
        lim = lambda x: np.stack([-x, x], axis=1).astype(complex)
    return radical("parabola_shift", d, [0, 0, 1], [1], (-1.0, 1.0),
                   params={"d": d}, analytic_limit=lim)


def weaknorm(d: int = 2, p: float | None = None) -> Family:
    """``g_n = x + 1/n^p`` on ``[0, 1]`` with ``p = d/(d-1)`` by default."""
    p = d / (d - 1) if p is None else p
    return radical("weaknorm", d, [0, 1], [1], (0.0, 1.0), power=p,
                   params={"d": d, "p": p})


def sqrt_offset(d: int = 2, delta: float = 0.05) -> Family:
    """``g_n = x + 1/n^2`` on ``[delta, 1]``, away from the branch point."""
    lim = lambda x: (x[:, None] ** (1.0 / d)) * np.exp(2j * np.pi * np.arange(d) / d)[None, :]
    return radical("sqrt_offset", d, [0, 1], [1], (delta, 1.0), power=2.0,
                   params={"d": d, "delta": delta}, analytic_limit=lim)


def cubic_perturbation() -> Family:
    """``Z^3 - x Z + 1/n`` on ``[-1, 1]``; the limit has a triple root at 0."""
    f = perturbation([[0], [0, -1], [0]], [[0], [0], [1]])
    return replace(f, name="cubic_perturbation", params={})


def kink_probe() -> Family:
    """``Z^2 = x^2 + (x|x| + 1)/n``: converges in C^{1,1} but the members are not C^2."""
    base = (_zero(), Piecewise.smooth([0, 0, -1]))
    kink = Piecewise(Polynomial([-1, 0, 1 + 0j]), Polynomial([-1, 0, -1 + 0j]))
    return Family("kink_probe", 2, (-1.0, 1.0), base, (_zero(), kink), 1.0,
                  {"d": 2}, smooth=False)


BUILTINS: dict[str, Callable[..., Family]] = {
    "radical_shift": radical_shift,
    "radical_shift_conj": lambda d=2, sign=-1: radical_shift(d, sign),
    "parabola_shift": parabola_shift,
    "weaknorm": weaknorm,
    "sqrt_offset": sqrt_offset,
    "cubic_perturbation": cubic_perturbation,
    "kink_probe": kink_probe,
    "perturbation": perturbation,
}


def get_family(name: str, **params) -> Family:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; known: {', '.join(sorted(BUILTINS))}") from None
    return factory(**params)
