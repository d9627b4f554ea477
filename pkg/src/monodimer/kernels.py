"""Cluster-expansion kernels ``J_k`` as polynomials in ``w = 1/d``.

Kernels come either from a JSON file or are reconstructed from the published
coefficients ``a_2 .. a_6`` by a triangular solve through the full symbolic
pipeline.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Mapping

from .formal_series import BiSeries, parse_rat, rat_str

FOUR_E = 4 * math.e


class SolveFailure(RuntimeError):
    def __init__(self, stage: int, message: str):
        super().__init__(f"stage s={stage}: {message}")
        self.stage = stage


def w_window(k: int) -> range:
    """Allowed ``w`` exponents for index ``k``: ``ceil(k/2) <= j <= k-1``."""
    return range((k + 1) // 2, k)


def w_poly(coeffs: Mapping[int, Fraction]) -> BiSeries:
    return BiSeries.from_w_poly({j: Fraction(c) for j, c in coeffs.items()}, 0)


def eval_w_poly(poly: BiSeries, d: int) -> Fraction:
    """Exact value of a pure ``w`` polynomial at ``w = 1/d``."""
    return sum((c * Fraction(1, d) ** j for (_, j), c in poly.terms.items()), Fraction(0))


@dataclass(frozen=True)
class KernelTable:
    kernels: Mapping[int, BiSeries] = field(default_factory=dict)
    bound_B: float = FOUR_E

    def __post_init__(self):
        clean = {}
        for k, poly in self.kernels.items():
            if k < 2:
                raise ValueError(f"kernel index {k} < 2 (J_1 is identically zero)")
            if any(i != 0 for i, _ in poly.terms):
                raise ValueError(f"J_{k} must be a polynomial in w alone")
            clean[int(k)] = poly.with_trunc(0)
        object.__setattr__(self, "kernels", dict(sorted(clean.items())))
        if not self.bound_B > 0:
            raise ValueError("bound_B must be positive")

    @property
    def k_max(self) -> int:
        return max(self.kernels, default=1)

    def get(self, k: int) -> BiSeries:
        return self.kernels.get(k, BiSeries.zero(0))

    def value(self, k: int, d: int) -> float:
        return float(eval_w_poly(self.get(k), d))

    def to_json(self) -> dict:
        return {
            "B": self.bound_B,
            "kernels": [
                {"k": k, "coeffs": {str(j): rat_str(c) for (_, j), c in sorted(poly.terms.items())}}
                for k, poly in self.kernels.items()
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "KernelTable":
        kernels = {
            int(entry["k"]): w_poly({int(j): parse_rat(c) for j, c in entry["coeffs"].items()})
            for entry in data["kernels"]
        }
        return cls(kernels, float(data.get("B", FOUR_E)))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "KernelTable":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())


@dataclass(frozen=True)
class ATable:
    """Coefficients ``a_k`` of ``lambda - S`` as polynomials in ``w``."""

    coeffs: Mapping[int, BiSeries]

    def at(self, d: int) -> dict[int, Fraction]:
        return {k: eval_w_poly(poly, d) for k, poly in sorted(self.coeffs.items())}

    def to_json(self) -> dict:
        return {
            "coeffs": [
                {"k": k, "coeffs": {str(j): rat_str(c) for (_, j), c in sorted(poly.terms.items())}}
                for k, poly in sorted(self.coeffs.items())
            ]
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ATable":
        return cls({
            int(e["k"]): w_poly({int(j): parse_rat(c) for j, c in e["coeffs"].items()})
            for e in data["coeffs"]
        })


def paper_a_table() -> ATable:
    F = Fraction
    return ATable({
        2: w_poly({1: F(1, 8)}),
        3: w_poly({2: F(1, 48)}),
        4: w_poly({2: F(1, 32), 3: F(-5, 192)}),
        5: w_poly({3: F(1, 16), 4: F(-39, 640)}),
        6: w_poly({3: F(1, 24), 4: F(-1, 32), 5: F(-19, 1920)}),
    })


def support_violations(k: int, poly: BiSeries) -> list[tuple[int, int]]:
    window = w_window(k)
    return [(k, j) for (_, j) in sorted(poly.terms) if j not in window]


def validate_support(t: KernelTable) -> list[tuple[int, int]]:
    """List of ``(k, s)`` pairs where ``J_k`` has a ``w**s`` term outside its window."""
    out = []
    for k, poly in t.kernels.items():
        out.extend(support_violations(k, poly))
    return out


def solve_from_a_table(a: ATable, p_trunc: int = 6, bound_B: float = FOUR_E) -> KernelTable:
    """Recover ``J_2 .. J_K`` from ``a_2 .. a_K``.

    ``g_s`` depends on ``J_s`` only through the additive term ``J_s`` itself, so
    each stage sets ``J_s = a_s - g_s(J_2, .., J_{s-1}, J_s = 0)``.
    """
    from .fixpoint import iterate_to_stability
    from .lambda_series import assemble_symbolic

    ks = sorted(a.coeffs)
    if ks != list(range(2, max(ks) + 1)):
        raise SolveFailure(min(ks), "a-table must cover a contiguous range starting at k=2")
    if p_trunc < max(ks):
        raise ValueError(f"p_trunc={p_trunc} below highest a_k index {max(ks)}")

    kernels: dict[int, BiSeries] = {}
    for s in ks:
        alpha, _ = iterate_to_stability(KernelTable(kernels, bound_B), s)
        g_partial = assemble_symbolic(alpha).g.get(s, BiSeries.zero(0))
        j_s = a.coeffs[s].with_trunc(0) - g_partial.with_trunc(0)
        bad = support_violations(s, j_s)
        if bad:
            raise SolveFailure(s, f"solved J_{s} leaves its w-window at {bad}")
        kernels[s] = j_s
        alpha, _ = iterate_to_stability(KernelTable(kernels, bound_B), s)
        got = assemble_symbolic(alpha).g.get(s, BiSeries.zero(0)).with_trunc(0)
        if got != a.coeffs[s].with_trunc(0):
            raise SolveFailure(s, "stage equation not satisfied after solve")

    table = KernelTable(kernels, bound_B)
    alpha, _ = iterate_to_stability(table, p_trunc)
    expansion = assemble_symbolic(alpha)
    for s in ks:
        if expansion.g.get(s, BiSeries.zero(0)).with_trunc(0) != a.coeffs[s].with_trunc(0):
            raise SolveFailure(s, f"round trip failed at p_trunc={p_trunc}")
    return table


def derived_kernels() -> KernelTable:
    """The checked-in table solved from the published ``a_2 .. a_6``."""
    data = resources.files("monodimer").joinpath("data/derived_kernels.json").read_text()
    return KernelTable.from_json(json.loads(data))


def u_norm(d: int) -> float:
    """Weighted count of nearest-neighbour dimers meeting a fixed dimer in ``Z^d``.

    Each dimer carries weight ``|v| = 1/d``; the hard-core ``u`` is ``-1`` on
    overlapping pairs.
    """
    if d < 1:
        raise ValueError("d must be positive")
    origin = (0,) * d
    e0 = tuple(1 if a == 0 else 0 for a in range(d))
    fixed = {origin, e0}
    overlapping = set()
    for site in fixed:
        for axis, step in product(range(d), (-1, 1)):
            nb = tuple(x + (step if a == axis else 0) for a, x in enumerate(site))
            overlapping.add(frozenset((site, nb)))
    total = len(overlapping) * (1.0 / d)
    assert total <= 4.0
    return total


def site_weight_sum(d: int) -> float:
    """``sum_j |v(i, j)|`` over the ``2d`` neighbours of a site."""
    return 2 * d * (1.0 / d)


def kernel_bound_check(t: KernelTable, B: float, d_list) -> bool:
    for k, poly in t.kernels.items():
        for d in d_list:
            if abs(eval_w_poly(poly, d)) > Fraction(B) ** k:
                return False
    return True
