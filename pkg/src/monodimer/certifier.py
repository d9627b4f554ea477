"""Contraction-mapping certificate for the amplitude recursion.

On the ball ``S = {alpha : ||alpha|| <= p eps}`` with ``||alpha|| = sum 2^k |alpha_k|``
the recursion maps ``S`` into itself once

    (1/2) (1 + 2 eps) / (1 - 2 eps)**2 <= 1,   6 eps / (1 - 2 eps) <= 1,
    p**(k-1) B**k <= eps / 8**k  for all k >= 2.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass
from typing import Sequence

from .fixpoint import (
    NUMERIC_K_MAX,
    AlphaNumeric,
    AlphaSymbolic,
    OutsideDomain,
    _apply_numeric,
    iterate_numeric,
    kernel_values,
    weighted_norm,
)
from .formal_series import p_norm_at
from .kernels import KernelTable

P0_SCAN_K = 64


class MembershipViolated(ArithmeticError):
    pass


@dataclass
class Certificate:
    B: float
    epsilon: float
    p0: float
    binding_k: int
    map_margin: float | None = None
    contraction_ratio: float | None = None

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def self_map_condition(eps: float) -> float:
    """Left side of the map-into condition; admissible iff ``<= 1``."""
    return 0.5 * (1.0 + 2.0 * eps) / (1.0 - 2.0 * eps) ** 2


def contraction_condition(eps: float) -> float:
    """Left side of the contraction condition; admissible iff ``<= 1``."""
    return 6.0 * eps / (1.0 - 2.0 * eps)


def eps_max() -> float:
    # 8 eps^2 - 10 eps + 1 >= 0 below its lower root; contraction needs eps <= 1/8
    return min((5.0 - math.sqrt(17.0)) / 8.0, 0.125)


def p0_scan(B: float, eps: float, k_max: int = P0_SCAN_K) -> dict[int, float]:
    """Per-``k`` upper limits ``eps**(1/(k-1)) * (8B)**(-k/(k-1))``."""
    if B <= 0 or not 0 < eps < 0.5:
        raise ValueError("need B > 0 and 0 < eps < 1/2")
    log8b = math.log(8.0 * B)
    return {
        k: math.exp((math.log(eps) - k * log8b) / (k - 1))
        for k in range(2, k_max + 1)
    }


def p0(B: float, eps: float) -> tuple[float, int]:
    scan = p0_scan(B, eps)
    binding_k = min(scan, key=scan.__getitem__)
    value = min(scan[binding_k], 1.0 / (8.0 * B))
    return value, binding_k


def alpha_norm(a, p: float | None = None, d: int | None = None) -> float:
    """``sum_k 2^k |alpha_k|``; symbolic entries are measured at ``(p, 1/d)``."""
    if isinstance(a, AlphaSymbolic):
        if p is None or d is None:
            raise ValueError("symbolic amplitudes need (p, d) to be measured")
        return sum(2.0**k * p_norm_at(s, p, d) for k, s in a.entries.items())
    if isinstance(a, AlphaNumeric):
        return weighted_norm(a.values)
    return weighted_norm(list(a))


def worst_case_points(p: float, eps: float, k_max: int) -> list[list[float]]:
    """All of the ball's radius placed on one coordinate, both signs."""
    radius = p * eps
    points = []
    for k in range(2, k_max + 1):
        for sign in (1.0, -1.0):
            v = [0.0] * (k_max - 1)
            v[k - 2] = sign * radius / 2.0**k
            points.append(v)
    return points


def random_ball_point(rng: random.Random, p: float, eps: float, k_max: int) -> list[float]:
    """A random point with ``||alpha|| <= p eps`` (random direction and radius)."""
    raw = [rng.uniform(-1.0, 1.0) * rng.random() ** 4 for _ in range(k_max - 1)]
    norm = weighted_norm(raw)
    scale = p * eps * rng.random() / norm if norm else 0.0
    return [x * scale for x in raw]


def _image_norm(jvals, point, p) -> float:
    try:
        return weighted_norm(_apply_numeric(jvals, point, p))
    except OutsideDomain:
        return math.inf


def certify_membership(
    t: KernelTable,
    p: float,
    d: int,
    eps: float | None = None,
    k_max: int | None = None,
    extra_points: Sequence[Sequence[float]] = (),
    check_p0: bool = True,
) -> Certificate:
    """Check that the recursion maps the ball of radius ``p eps`` into half of it.

    With ``check_p0`` the precondition ``p <= p0(B, eps)`` is enforced; the
    check is always carried out numerically regardless.
    """
    eps = eps_max() if eps is None else eps
    radius0, binding_k = p0(t.bound_B, eps)
    if check_p0 and p > radius0:
        raise ValueError(f"p={p} exceeds certified p0={radius0}")
    k_max = max(t.k_max, 2) if k_max is None else k_max
    jvals = kernel_values(t, d, k_max)
    points = [[0.0] * (k_max - 1)] + worst_case_points(p, eps, k_max) + [list(x) for x in extra_points]
    worst = max(_image_norm(jvals, pt, p) for pt in points)
    bound = 0.5 * p * eps
    if worst > bound:
        raise MembershipViolated(f"||f(alpha)|| = {worst:g} > p*eps/2 = {bound:g}")
    return Certificate(t.bound_B, eps, radius0, binding_k, map_margin=bound - worst)


def empirical_contraction(
    t: KernelTable,
    p: float,
    d: int,
    n_iters: int = 50,
    start: Sequence[float] | None = None,
    k_max: int | None = None,
) -> float:
    """Largest ratio of successive step norms along the iteration.

    Steps at the level of floating-point noise are not used as denominators.
    """
    k_max = max(t.k_max, 2) if k_max is None else k_max
    jvals = kernel_values(t, d, k_max)
    alpha = [0.0] * (k_max - 1) if start is None else list(start)
    steps = []
    for _ in range(n_iters):
        nxt = _apply_numeric(jvals, alpha, p)
        steps.append((weighted_norm([x - y for x, y in zip(nxt, alpha)]), weighted_norm(nxt)))
        alpha = nxt
    ratio = 0.0
    for (prev, scale), (cur, _) in zip(steps, steps[1:]):
        floor = 1024 * 2.2e-16 * scale
        if prev == 0.0 or prev <= floor or cur <= floor:
            break
        ratio = max(ratio, cur / prev)
    return ratio


def certify(
    t: KernelTable,
    d: int,
    p: float | None = None,
    eps: float | None = None,
    n_iters: int = 50,
) -> Certificate:
    """Full certificate at ``d``; ``p`` defaults to ``0.99 * p0``."""
    eps = eps_max() if eps is None else eps
    radius0, _ = p0(t.bound_B, eps)
    p = 0.99 * radius0 if p is None else p
    cert = certify_membership(t, p, d, eps)
    cert.contraction_ratio = empirical_contraction(t, p, d, n_iters)
    return cert


def fixed_point_gap(t: KernelTable, p: float, d: int, start: Sequence[float], tol: float = 1e-15) -> float:
    """Norm distance between the fixed points reached from zero and from ``start``."""
    k = max(NUMERIC_K_MAX, t.k_max)
    a, _ = iterate_numeric(t, p, d, tol, k_max=k)
    b, _ = iterate_numeric(t, p, d, tol, start=start, k_max=k)
    return weighted_norm([x - y for x, y in zip(a.values, b.values)])
