"""Truncated bivariate power series in ``p`` and ``w = 1/d`` over the rationals.

A :class:`BiSeries` keeps every term ``c * p**i * w**j`` with ``i <= p_trunc``.
Only the power of ``p`` is truncated; powers of ``w`` are carried exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

Rat = Fraction

DEFAULT_P_TRUNC = 8


class SeriesError(ValueError):
    pass


class TruncationMismatch(SeriesError):
    pass


class NotAUnit(SeriesError):
    pass


class NotNilpotent(SeriesError):
    pass


class NotDivisibleByP(SeriesError):
    pass


def _clean(terms: Iterable[tuple[tuple[int, int], Fraction]], p_trunc: int) -> dict:
    out: dict[tuple[int, int], Fraction] = {}
    for (i, j), c in terms:
        if i < 0 or j < 0:
            raise SeriesError(f"negative exponent ({i}, {j})")
        if i > p_trunc:
            continue
        c = Fraction(c)
        if c:
            out[(i, j)] = out.get((i, j), 0) + c
    return {k: v for k, v in out.items() if v}


@dataclass(frozen=True, eq=False)
class BiSeries:
    """Immutable truncated series; equality is exact equality of term maps."""

    terms: Mapping[tuple[int, int], Fraction]
    p_trunc: int = DEFAULT_P_TRUNC
    _key: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.p_trunc < 0:
            raise SeriesError("p_trunc must be nonnegative")
        clean = _clean(self.terms.items(), self.p_trunc)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_key", frozenset(clean.items()))

    # construction helpers
    @classmethod
    def zero(cls, p_trunc: int = DEFAULT_P_TRUNC) -> "BiSeries":
        return cls({}, p_trunc)

    @classmethod
    def one(cls, p_trunc: int = DEFAULT_P_TRUNC) -> "BiSeries":
        return cls({(0, 0): Fraction(1)}, p_trunc)

    @classmethod
    def monomial(cls, c, i: int, j: int, p_trunc: int = DEFAULT_P_TRUNC) -> "BiSeries":
        return cls({(i, j): Fraction(c)}, p_trunc)

    @classmethod
    def from_w_poly(cls, coeffs: Mapping[int, Fraction], p_trunc: int = DEFAULT_P_TRUNC) -> "BiSeries":
        """Polynomial in ``w`` only (all ``p``-powers zero)."""
        return cls({(0, j): c for j, c in coeffs.items()}, p_trunc)

    def __eq__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        if not self.terms:
            return f"BiSeries(0, p_trunc={self.p_trunc})"
        parts = [f"({c})*p^{i}*w^{j}" for (i, j), c in sorted(self.terms.items())]
        return f"BiSeries({' + '.join(parts)}, p_trunc={self.p_trunc})"

    def with_trunc(self, p_trunc: int) -> "BiSeries":
        return BiSeries(self.terms, p_trunc)

    def min_p_order(self) -> int | None:
        return min((i for i, _ in self.terms), default=None)

    def w_poly(self, i: int) -> dict[int, Fraction]:
        """Coefficient of ``p**i`` as a map ``j -> c``."""
        return {j: c for (ii, j), c in self.terms.items() if ii == i}

    def eval_w(self, w: Fraction) -> dict[int, Fraction]:
        """Substitute ``w`` exactly, returning the ``p``-coefficients."""
        out: dict[int, Fraction] = {}
        for (i, j), c in self.terms.items():
            out[i] = out.get(i, 0) + c * Fraction(w) ** j
        return {i: c for i, c in out.items() if c}

    def __add__(self, other):
        return series_add(self, _coerce(other, self.p_trunc))

    __radd__ = __add__

    def __neg__(self):
        return BiSeries({k: -c for k, c in self.terms.items()}, self.p_trunc)

    def __sub__(self, other):
        return series_add(self, -_coerce(other, self.p_trunc))

    def __rsub__(self, other):
        return series_add(_coerce(other, self.p_trunc), -self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return scale(self, other)
        return series_mul(self, other)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, n: int):
        return series_pow(self, n)

    def to_json(self) -> dict:
        return {
            "p_trunc": self.p_trunc,
            "terms": [
                {"i": i, "j": j, "c": rat_str(c)}
                for (i, j), c in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "BiSeries":
        terms = {(int(t["i"]), int(t["j"])): parse_rat(t["c"]) for t in data["terms"]}
        return cls(terms, int(data["p_trunc"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def rat_str(c: Fraction) -> str:
    """Always ``num/den``, even for integers."""
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


def parse_rat(s: str) -> Fraction:
    return Fraction(s)


def _coerce(x, p_trunc: int) -> BiSeries:
    if isinstance(x, BiSeries):
        return x
    if isinstance(x, (int, Fraction)):
        return BiSeries({(0, 0): Fraction(x)}, p_trunc)
    raise TypeError(f"cannot use {type(x).__name__} as a series")


def _check_trunc(a: BiSeries, b: BiSeries) -> None:
    if a.p_trunc != b.p_trunc:
        raise TruncationMismatch(f"p_trunc {a.p_trunc} != {b.p_trunc}")


def series_add(a: BiSeries, b: BiSeries) -> BiSeries:
    _check_trunc(a, b)
    terms = dict(a.terms)
    for k, c in b.terms.items():
        terms[k] = terms.get(k, 0) + c
    return BiSeries(terms, a.p_trunc)


def scale(a: BiSeries, c) -> BiSeries:
    c = Fraction(c)
    return BiSeries({k: c * v for k, v in a.terms.items()}, a.p_trunc)


def series_mul(a: BiSeries, b: BiSeries) -> BiSeries:
    """Cauchy product, discarding every term above ``p_trunc``."""
    _check_trunc(a, b)
    n = a.p_trunc
    terms: dict[tuple[int, int], Fraction] = {}
    for (i1, j1), c1 in a.terms.items():
        for (i2, j2), c2 in b.terms.items():
            i = i1 + i2
            if i > n:
                continue
            key = (i, j1 + j2)
            terms[key] = terms.get(key, 0) + c1 * c2
    return BiSeries(terms, n)


def series_pow(a: BiSeries, n: int) -> BiSeries:
    if n < 0:
        raise ValueError("exponent must be nonnegative")
    result = BiSeries.one(a.p_trunc)
    base = a
    while n:
        if n & 1:
            result = series_mul(result, base)
        n >>= 1
        if n:
            base = series_mul(base, base)
    return result


def _p_order_positive(a: BiSeries) -> bool:
    return all(i >= 1 for i, _ in a.terms)


def geom_inverse(a: BiSeries) -> BiSeries:
    """Inverse of ``a = 1 - x`` as ``sum_m x**m``; ``x`` must be ``O(p)``."""
    if a.terms.get((0, 0)) != 1 or any(i == 0 and j != 0 for i, j in a.terms):
        raise NotAUnit("constant term must be exactly 1 with no other p^0 terms")
    x = BiSeries.one(a.p_trunc) - a
    result = BiSeries.one(a.p_trunc)
    power = BiSeries.one(a.p_trunc)
    # x = O(p), so x**m vanishes once m > p_trunc
    for _ in range(a.p_trunc):
        power = series_mul(power, x)
        if not power:
            break
        result = series_add(result, power)
    return result


def log_tail(x: BiSeries) -> BiSeries:
    """``sum_{k>=2} x**k / k``, i.e. ``-ln(1 - x) - x`` as a formal series."""
    if not _p_order_positive(x):
        raise NotNilpotent("series has terms of p-order 0")
    result = BiSeries.zero(x.p_trunc)
    power = x
    for k in range(2, x.p_trunc + 1):
        power = series_mul(power, x)
        if not power:
            break
        result = series_add(result, scale(power, Fraction(1, k)))
    return result


def div_by_p(a: BiSeries) -> BiSeries:
    """Shift every ``p`` exponent down by one; ``p_trunc`` is kept."""
    if not _p_order_positive(a):
        raise NotDivisibleByP("series has terms of p-order 0")
    return BiSeries({(i - 1, j): c for (i, j), c in a.terms.items()}, a.p_trunc)


def mul_by_p(a: BiSeries) -> BiSeries:
    return BiSeries({(i + 1, j): c for (i, j), c in a.terms.items()}, a.p_trunc)


def coeff_at(a: BiSeries, i: int, j: int) -> Fraction:
    return a.terms.get((i, j), Fraction(0))


def p_norm_at(a: BiSeries, p_val: float, d_val: int) -> float:
    """``sum_i |a_i| p**i`` where ``a_i`` is the ``p**i`` coefficient at ``w = 1/d``."""
    if p_val < 0:
        raise ValueError("p_val must be nonnegative")
    return sum(
        abs(float(c)) * p_val**i
        for i, c in a.eval_w(Fraction(1, d_val)).items()
    )
