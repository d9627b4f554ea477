"""The cluster-amplitude recursion, exactly (formal series) and numerically.

For ``sigma = sum_i i * alpha_i`` the map is

    alpha'_k = J_k p**k * (1 - 2 sigma)**(-2k) * (1 - 2 sigma / p)**k

with ``alpha_1 = 0`` so every sum starts at ``i = 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .formal_series import (
    BiSeries,
    div_by_p,
    geom_inverse,
    scale,
    series_add,
    series_mul,
    series_pow,
)
from .kernels import KernelTable

NUMERIC_K_MAX = 32
DEFAULT_TOL = 1e-13
MAX_ITERATIONS = 10_000
ROUNDOFF = 4 * 2.2e-16


class OutsideDomain(ArithmeticError):
    pass


class MaxIterationsExceeded(RuntimeError):
    pass


class InternalError(RuntimeError):
    pass


@dataclass(frozen=True)
class AlphaSymbolic:
    entries: Mapping[int, BiSeries]
    p_trunc: int

    def __eq__(self, other):
        if not isinstance(other, AlphaSymbolic):
            return NotImplemented
        ks = set(self.entries) | set(other.entries)
        z = BiSeries.zero(self.p_trunc)
        return all(self.entries.get(k, z) == other.entries.get(k, z) for k in ks)

    @classmethod
    def zero(cls, k_max: int, p_trunc: int) -> "AlphaSymbolic":
        return cls({k: BiSeries.zero(p_trunc) for k in range(2, k_max + 1)}, p_trunc)

    def evaluate(self, p: float, d: int) -> list[float]:
        """Numeric values ``alpha_2 .. alpha_K`` at ``(p, w = 1/d)``."""
        out = []
        for k in sorted(self.entries):
            coeffs = self.entries[k].eval_w(Fraction(1, d))
            out.append(sum(float(c) * p**i for i, c in sorted(coeffs.items())))
        return out


@dataclass(frozen=True)
class AlphaNumeric:
    values: Sequence[float]
    p_val: float
    d_val: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def k_max(self) -> int:
        return len(self.values) + 1

    def sigma(self) -> float:
        return sum(i * a for i, a in enumerate(self.values, start=2))


@dataclass
class IterationReport:
    iterations: int
    converged: bool
    residual: float | None = None
    stable_order: int | None = None
    history: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        out = {"iterations": self.iterations, "converged": self.converged}
        if self.residual is not None:
            out["residual"] = self.residual
        if self.stable_order is not None:
            out["stable_order"] = self.stable_order
        return out


def sigma_series(a: AlphaSymbolic) -> BiSeries:
    sigma = BiSeries.zero(a.p_trunc)
    for i, alpha in a.entries.items():
        sigma = series_add(sigma, scale(alpha, i))
    return sigma


def apply_master1_symbolic(t: KernelTable, a: AlphaSymbolic) -> AlphaSymbolic:
    n = a.p_trunc
    sigma = sigma_series(a)
    one = BiSeries.one(n)
    shifted = one - scale(div_by_p(sigma), 2)
    # (1 - 2 sigma)^(-2k) == (geom_inverse(1 - 2 sigma))^(2k) in the truncated ring
    inv = geom_inverse(one - scale(sigma, 2))
    out = {}
    for k in sorted(a.entries):
        kernel = t.get(k)
        if not kernel or k > n:
            out[k] = BiSeries.zero(n)
            continue
        lead = BiSeries({(k, j): c for (_, j), c in kernel.terms.items()}, n)
        # lead is O(p^k): only orders <= n - k of the correction factors survive
        r = n - k
        factor = series_mul(series_pow(inv.with_trunc(r), 2 * k), series_pow(shifted.with_trunc(r), k))
        out[k] = series_mul(lead, factor.with_trunc(n))
    return AlphaSymbolic(out, n)


def _agree_through(a: AlphaSymbolic, b: AlphaSymbolic) -> int:
    """Largest ``m`` such that ``a`` and ``b`` agree on every p-order ``<= m``."""
    first_diff = a.p_trunc + 1
    for k in set(a.entries) | set(b.entries):
        z = BiSeries.zero(a.p_trunc)
        diff = a.entries.get(k, z) - b.entries.get(k, z)
        order = diff.min_p_order()
        if order is not None:
            first_diff = min(first_diff, order)
    return first_diff - 1


def iterate_to_stability(t: KernelTable, p_trunc: int, k_max: int | None = None):
    """Iterate from zero until two consecutive iterates are identical.

    Each pass fixes at least one more order in ``p``; ``history[n]`` is the
    order through which iterates ``n`` and ``n+1`` agree (iterate 0 is zero).
    """
    k_max = p_trunc if k_max is None else k_max
    current = AlphaSymbolic.zero(k_max, p_trunc)
    history = []
    for n in range(1, p_trunc + 3):
        nxt = apply_master1_symbolic(t, current)
        if nxt == current:
            return current, IterationReport(n, True, stable_order=p_trunc, history=history)
        history.append(_agree_through(current, nxt))
        current = nxt
    raise InternalError(f"no exact stabilization within {p_trunc + 2} passes")


def first_iterate(t: KernelTable, p_trunc: int) -> AlphaSymbolic:
    return apply_master1_symbolic(t, AlphaSymbolic.zero(p_trunc, p_trunc))


def support_check(a: AlphaSymbolic, strict: bool = False) -> list[tuple[int, int, int]]:
    """Violations ``(k, i, j)`` of ``i >= k`` and ``ceil(i/2) <= j <= i-1``.

    ``strict`` additionally requires ``i == k`` (first iterate from zero).
    """
    bad = []
    for k, series in sorted(a.entries.items()):
        for i, j in sorted(series.terms):
            ok = i >= k and (i + 1) // 2 <= j <= i - 1
            if strict and i != k:
                ok = False
            if not ok:
                bad.append((k, i, j))
    return bad


def kernel_values(t: KernelTable, d: int, k_max: int = NUMERIC_K_MAX) -> list[float]:
    return [t.value(k, d) for k in range(2, k_max + 1)]


def _apply_numeric(jvals: Sequence[float], alpha: Sequence[float], p: float) -> list[float]:
    sigma = sum(i * a for i, a in enumerate(alpha, start=2))
    base = 1.0 - 2.0 * sigma
    if base <= 0.0:
        raise OutsideDomain(f"1 - 2*sigma = {base} <= 0")
    if p == 0.0:
        return [0.0] * len(alpha)
    shifted = 1.0 - 2.0 * sigma / p
    return [
        jk * p**k * base ** (-2 * k) * shifted**k
        for k, jk in enumerate(jvals, start=2)
    ]


def apply_master1_numeric(t: KernelTable, a: AlphaNumeric) -> AlphaNumeric:
    jvals = kernel_values(t, a.d_val, a.k_max)
    return AlphaNumeric(_apply_numeric(jvals, a.values, a.p_val), a.p_val, a.d_val)


def weighted_norm(values: Sequence[float]) -> float:
    return sum(2.0**k * abs(v) for k, v in enumerate(values, start=2))


def iterate_numeric(
    t: KernelTable,
    p: float,
    d: int,
    tol: float = DEFAULT_TOL,
    start: Sequence[float] | None = None,
    k_max: int = NUMERIC_K_MAX,
    max_iterations: int = MAX_ITERATIONS,
):
    """Plain (Jacobi) fixed-point iteration from zero (or ``start``).

    Converged once the weighted step norm is below ``tol`` relative to the
    iterate's norm, or within round-off of it; the reported residual
    ``||f(alpha) - alpha||`` is absolute.
    """
    if p < 0 or tol <= 0:
        raise ValueError("need p >= 0 and tol > 0")
    k_max = max(k_max, t.k_max)
    jvals = kernel_values(t, d, k_max)
    alpha = [0.0] * (k_max - 1) if start is None else list(start) + [0.0] * (k_max - 1 - len(start))
    history = []
    for n in range(1, max_iterations + 1):
        nxt = _apply_numeric(jvals, alpha, p)
        step = weighted_norm([x - y for x, y in zip(nxt, alpha)])
        history.append(step)
        alpha = nxt
        size = weighted_norm(nxt)
        if step <= max(tol, ROUNDOFF) * size:
            residual = weighted_norm(
                [x - y for x, y in zip(_apply_numeric(jvals, alpha, p), alpha)]
            )
            return (
                AlphaNumeric(alpha, p, d),
                IterationReport(n, True, residual=residual, history=history),
            )
    raise MaxIterationsExceeded(f"no convergence in {max_iterations} iterations (last step {step:g})")
