"""Exact matching counts on small lattices and the closed-form ``d = 1`` limit.

``count_matchings`` sweeps the sites in lexicographic order and keeps, as a DP
state, the set of not-yet-processed sites that are already covered by a dimer
reaching back into the processed region (the frontier).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Sequence

from .kernels import KernelTable
from .lambda_series import DomainError, eval_numeric, series_value

MAX_SITES = 64


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    extents: tuple[int, ...]
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        if not self.extents:
            raise ValueError("need at least one dimension")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "periodic" and min(self.extents) < 3:
            raise ValueError("periodic extents must be >= 3 to keep the graph simple")
        if min(self.extents) < 1:
            raise ValueError("extents must be >= 1")

    @property
    def dimension(self) -> int:
        return len(self.extents)

    @property
    def n_sites(self) -> int:
        return math.prod(self.extents)

    def sites(self) -> list[tuple[int, ...]]:
        return list(product(*(range(e) for e in self.extents)))

    def edges(self) -> list[tuple[int, int]]:
        """Nearest-neighbour edges as sorted pairs of site indices."""
        sites = self.sites()
        index = {s: n for n, s in enumerate(sites)}
        out = set()
        for s in sites:
            for axis, ext in enumerate(self.extents):
                step = s[axis] + 1
                if step >= ext:
                    if self.boundary == "open":
                        continue
                    step = 0
                nb = s[:axis] + (step,) + s[axis + 1:]
                a, b = index[s], index[nb]
                out.add((min(a, b), max(a, b)))
        return sorted(out)


@dataclass(frozen=True)
class MatchCountTable:
    n_sites: int
    counts: tuple[int, ...]

    def __getitem__(self, m: int) -> int:
        return self.counts[m] if 0 <= m < len(self.counts) else 0

    def to_json(self) -> dict:
        return {"N": self.n_sites, "counts": {str(m): str(c) for m, c in enumerate(self.counts)}}

    @classmethod
    def from_json(cls, data) -> "MatchCountTable":
        counts = sorted((int(m), int(c)) for m, c in data["counts"].items())
        return cls(int(data["N"]), tuple(c for _, c in counts))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _xlogx(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


def lambda1_exact(p: float) -> float:
    """``(1-p/2) ln(1-p/2) - (p/2) ln(p/2) - (1-p) ln(1-p)``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p} outside [0, 1]")
    h = 0.5 * p
    return _xlogx(1.0 - h) - _xlogx(h) - _xlogx(1.0 - p)


def count_graph_matchings(n: int, edges: Iterable[tuple[int, int]]) -> MatchCountTable:
    """Frontier DP over vertices ``0 .. n-1`` on an arbitrary simple graph."""
    later: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        if a == b:
            raise ValueError("self-loops are not allowed")
        a, b = min(a, b), max(a, b)
        later[a].append(b)
    # state: bitmask of future vertices already covered -> counts by dimer number
    states: dict[int, list[int]] = {0: [1]}
    for v in range(n):
        bit = 1 << v
        nxt: dict[int, list[int]] = {}

        def push(mask: int, poly: list[int], shift: int) -> None:
            acc = nxt.get(mask)
            if acc is None:
                acc = nxt[mask] = []
            need = len(poly) + shift
            if len(acc) < need:
                acc.extend([0] * (need - len(acc)))
            for m, c in enumerate(poly):
                acc[m + shift] += c

        for mask, poly in states.items():
            if mask & bit:
                push(mask & ~bit, poly, 0)
                continue
            push(mask, poly, 0)
            for u in later[v]:
                if not mask & (1 << u):
                    push(mask | (1 << u), poly, 1)
        states = nxt
    final = states.get(0, [1])
    return MatchCountTable(n, tuple(final))


def brute_force_matchings(n: int, edges: Sequence[tuple[int, int]]) -> MatchCountTable:
    """Counts by scanning every edge subset; only for tiny graphs."""
    edges = list(edges)
    counts = [0] * (n // 2 + 1)
    for r in range(len(edges) + 1):
        for subset in combinations(edges, r):
            seen = set()
            ok = True
            for a, b in subset:
                if a in seen or b in seen:
                    ok = False
                    break
                seen.update((a, b))
            if ok:
                counts[r] += 1
    while len(counts) > 1 and counts[-1] == 0:
        counts.pop()
    return MatchCountTable(n, tuple(counts))


def count_matchings(spec: LatticeSpec) -> MatchCountTable:
    if spec.n_sites > MAX_SITES:
        raise TooLarge(f"{spec.n_sites} sites exceeds {MAX_SITES}")
    return count_graph_matchings(spec.n_sites, spec.edges())


def finite_lambda(spec: LatticeSpec, p: float, table: MatchCountTable | None = None) -> float:
    """``(1/N) ln counts[m]`` with ``m = round(p N / 2)`` (ties to even)."""
    table = count_matchings(spec) if table is None else table
    n = spec.n_sites
    m = round(p * n / 2)
    if not 0 <= m < len(table.counts) or table[m] == 0:
        raise DomainError(f"no matchings with m={m} dimers on {n} sites")
    return math.log(table[m]) / n


def d1_tail_bound(p: float, p_trunc: int) -> float:
    """``sum_{k > p_trunc} (p/2)**k / (k (k-1))``, summed to convergence."""
    x = 0.5 * p
    total, k = 0.0, p_trunc + 1
    term = x**k / (k * (k - 1))
    while term > 1e-300 and (total == 0.0 or term > 1e-20 * total):
        total += term
        k += 1
        term = x**k / (k * (k - 1))
    return total


def compare_series_oracle(t: KernelTable, spec: LatticeSpec, p_list, expansion=None) -> list[dict]:
    """Rows comparing the series ``lambda`` with the finite-lattice count.

    ``expansion`` is the truncated ``LambdaExpansion``; when given, its partial
    sum is reported alongside the numeric fixed-point value.
    """
    d = spec.dimension
    table = count_matchings(spec)
    rows = []
    for p in p_list:
        numeric = eval_numeric(t, p, d)
        oracle = finite_lambda(spec, p, table)
        row = {"p": p, "series": numeric, "oracle": oracle, "diff": abs(numeric - oracle)}
        if expansion is not None:
            partial = series_value(expansion, p, d)
            row["partial_sum"] = partial
        if d == 1:
            exact = lambda1_exact(p)
            row["exact"] = exact
            row["diff_exact"] = abs(numeric - exact)
            if expansion is not None:
                row["partial_diff_exact"] = abs(row["partial_sum"] - exact)
                row["tail_bound"] = d1_tail_bound(p, expansion.p_trunc) + 1e-12
        rows.append(row)
    return rows


def legendre_lambda(spec: LatticeSpec, p: float, table: MatchCountTable | None = None) -> float:
    """Grand-canonical estimate ``(1/N) ln Z(x) - (p/2) ln x`` at mean density ``p``.

    The activity ``x`` is found by bisection in ``ln x``; unlike
    :func:`finite_lambda` this carries no ``ln N / N`` bias from fixing ``m``.
    """
    table = count_matchings(spec) if table is None else table
    n = spec.n_sites
    if p == 0.0:
        return 0.0
    m_max = len(table.counts) - 1
    if not 0.0 < p < 2.0 * m_max / n:
        raise DomainError(f"density {p} not reachable on {n} sites")
    logs = [(m, math.log(c)) for m, c in enumerate(table.counts) if c]

    def stats(t: float) -> tuple[float, float]:
        exps = [lc + m * t for m, lc in logs]
        top = max(exps)
        weights = [math.exp(e - top) for e in exps]
        z = sum(weights)
        mean = sum(m * w for (m, _), w in zip(logs, weights)) / z
        return top + math.log(z), mean

    lo, hi = -60.0, 60.0
    target = 0.5 * p * n
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if stats(mid)[1] < target:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    log_z, _ = stats(t)
    return log_z / n - 0.5 * p * t
