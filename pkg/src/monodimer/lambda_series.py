"""Assembly of ``lambda_d(p)`` from a solved amplitude sequence.

    lambda = S + sum(alpha) - T(2 sigma) + (p/2) * T(2 sigma / p)

where ``T(x) = sum_{k>=2} x**k / k = -ln(1-x) - x`` and ``sigma = sum i alpha_i``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .fixpoint import (
    DEFAULT_TOL,
    AlphaSymbolic,
    OutsideDomain,
    iterate_numeric,
    sigma_series,
    support_check,
)
from .formal_series import (
    BiSeries,
    div_by_p,
    log_tail,
    mul_by_p,
    rat_str,
    scale,
    series_add,
)
from .kernels import KernelTable, eval_w_poly, w_poly


class DomainError(ValueError):
    pass


class Lemma4Violation(ArithmeticError):
    pass


def _xlogx(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


def s_eval(p: float, d: int) -> float:
    """Entropy term ``(p/2) ln(2d) - (p/2) ln p - (1-p) ln(1-p) - p/2``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p} outside [0, 1]")
    return 0.5 * p * math.log(2 * d) - 0.5 * _xlogx(p) - _xlogx(1.0 - p) - 0.5 * p


def tail_numeric(x: float) -> float:
    """``-ln(1-x) - x`` without cancellation for small ``x``."""
    if x >= 1.0:
        raise OutsideDomain(f"log argument 1 - {x} <= 0")
    if abs(x) < 1e-2:
        total, term, k = 0.0, x, 1
        while True:
            k += 1
            term *= x
            add = term / k
            total += add
            if abs(add) <= 1e-18 * abs(total):
                return total
    return -math.log1p(-x) - x


@dataclass(frozen=True)
class LambdaExpansion:
    g: Mapping[int, BiSeries]
    p_trunc: int

    def to_json(self) -> dict:
        return {
            "p_trunc": self.p_trunc,
            "g": [
                {"s": s, "coeffs": {str(j): rat_str(c) for (_, j), c in sorted(poly.terms.items())}}
                for s, poly in sorted(self.g.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "LambdaExpansion":
        g = {
            int(e["s"]): w_poly({int(j): Fraction(c) for j, c in e["coeffs"].items()})
            for e in data["g"]
        }
        return cls(g, int(data["p_trunc"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def as_series(self) -> BiSeries:
        """``lambda - S`` as a single series in ``p`` and ``w``."""
        return BiSeries(
            {(s, j): c for s, poly in self.g.items() for (_, j), c in poly.terms.items()},
            self.p_trunc,
        )


def correction_series(a: AlphaSymbolic) -> BiSeries:
    """``lambda - S`` as a truncated series."""
    n = a.p_trunc
    sigma = sigma_series(a)
    total = BiSeries.zero(n)
    for alpha in a.entries.values():
        total = series_add(total, alpha)
    total = total - log_tail(scale(sigma, 2))
    total = total + scale(mul_by_p(log_tail(scale(div_by_p(sigma), 2))), Fraction(1, 2))
    return total


def assemble_symbolic(a: AlphaSymbolic) -> LambdaExpansion:
    bad = support_check(a)
    if bad:
        raise Lemma4Violation(f"input amplitudes violate support at {bad[:5]}")
    series = correction_series(a)
    g: dict[int, BiSeries] = {}
    for (i, j), c in series.terms.items():
        if i < 2 or not (i + 1) // 2 <= j <= i - 1:
            raise Lemma4Violation(f"term p^{i} w^{j} outside support window")
        g.setdefault(i, {})[j] = c
    return LambdaExpansion({s: w_poly(coeffs) for s, coeffs in sorted(g.items())}, a.p_trunc)


def a_table(L: LambdaExpansion, d: int) -> dict[int, Fraction]:
    """Exact ``a_s(d)`` for ``s = 2 .. p_trunc`` (zeros included)."""
    return {s: eval_w_poly(L.g[s], d) if s in L.g else Fraction(0) for s in range(2, L.p_trunc + 1)}


def c_table(L: LambdaExpansion, k_max: int) -> dict[int, dict[int, Fraction]]:
    """Regroup by powers of ``w``: ``c_k(p) = sum_s [w^k] g_s * p**s``."""
    out: dict[int, dict[int, Fraction]] = {k: {} for k in range(1, k_max + 1)}
    for s, poly in L.g.items():
        for (_, j), c in poly.terms.items():
            if j in out:
                out[j][s] = c
    return {k: dict(sorted(v.items())) for k, v in out.items()}


def series_value(L: LambdaExpansion, p: float, d: int) -> float:
    """Partial sum ``S + sum_{s <= p_trunc} a_s(d) p**s``."""
    return s_eval(p, d) + sum(float(c) * p**s for s, c in a_table(L, d).items())


def correction_numeric(alpha, p: float) -> float:
    """``lambda - S`` evaluated at a numeric amplitude vector."""
    if p == 0.0:
        return 0.0
    sigma = alpha.sigma()
    x = 2.0 * sigma
    if x >= 1.0 or x / p >= 1.0:
        raise OutsideDomain("logarithm argument <= 0 at the fixed point")
    return sum(alpha.values) - tail_numeric(x) + 0.5 * p * tail_numeric(x / p)


def eval_numeric(t: KernelTable, p: float, d: int, tol: float = DEFAULT_TOL) -> float:
    if p == 0.0:
        return 0.0
    alpha, _ = iterate_numeric(t, p, d, tol)
    return s_eval(p, d) + correction_numeric(alpha, p)
