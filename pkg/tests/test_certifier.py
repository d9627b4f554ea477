import json
import math
import random

import pytest

from monodimer.certifier import (
    Certificate,
    MembershipViolated,
    alpha_norm,
    certify,
    certify_membership,
    contraction_condition,
    empirical_contraction,
    eps_max,
    fixed_point_gap,
    p0,
    p0_scan,
    random_ball_point,
    self_map_condition,
)
from monodimer.fixpoint import AlphaNumeric, _apply_numeric, iterate_to_stability, kernel_values, weighted_norm
from monodimer.kernels import FOUR_E, KernelTable, derived_kernels


@pytest.fixture(scope="module")
def table():
    return derived_kernels()


def _bisect_eps() -> float:
    """Largest eps in (0, 1/2) with both conditions, found without the closed form."""
    lo, hi = 0.0, 0.49
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if self_map_condition(mid) <= 1 and contraction_condition(mid) <= 1:
            lo = mid
        else:
            hi = mid
    return lo


def test_eps_max():
    e = eps_max()
    assert e == pytest.approx((5 - math.sqrt(17)) / 8, abs=1e-15)
    assert e == pytest.approx(0.1096117, abs=1e-7)
    assert e == pytest.approx(_bisect_eps(), abs=1e-12)
    assert self_map_condition(e) == pytest.approx(1.0, abs=1e-12)
    assert contraction_condition(e) == pytest.approx(0.842, abs=1e-3)
    assert self_map_condition(e + 1e-6) > 1
    assert self_map_condition(0.125) == pytest.approx(10 / 9)
    assert self_map_condition(0.0) == 0.5


def _condition_holds(p, B, eps, k_max=400):
    lhs = lambda k: (k - 1) * math.log(p) + k * math.log(B)  # noqa: E731
    return all(lhs(k) <= math.log(eps) - k * math.log(8) + 1e-12 for k in range(2, k_max))


@pytest.mark.parametrize("B", [1.0, FOUR_E, 100.0])
@pytest.mark.parametrize("eps", [0.01, eps_max()])
def test_p0_binding_at_two(B, eps):
    value, k = p0(B, eps)
    assert k == 2
    assert value == pytest.approx(eps / (8 * B) ** 2, rel=1e-12)
    assert value <= 1 / (8 * B)
    assert _condition_holds(value * (1 - 1e-9), B, eps)
    assert not _condition_holds(value * (1 + 1e-6), B, eps)


def test_p0_examples():
    value, k = p0(FOUR_E, eps_max())
    assert value == pytest.approx(1.4487e-5, rel=1e-4) and k == 2
    value, k = p0(1.0, 0.1)
    assert value == pytest.approx(1.5625e-3, rel=1e-12) and k == 2
    assert p0_scan(1.0, 0.1)[3] == pytest.approx(0.01398, abs=1e-5)


def test_alpha_norm():
    assert alpha_norm([]) == 0
    assert alpha_norm([0.01, 0, 0]) == pytest.approx(0.04)
    assert alpha_norm(AlphaNumeric([1e-3, 1e-3], 0.1, 1)) == pytest.approx(0.012)


def test_alpha_norm_symbolic_matches_numeric_bound(table):
    alpha, _ = iterate_to_stability(table, 6)
    p, d = 1e-3, 2
    sym = alpha_norm(alpha, p, d)
    assert sym >= weighted_norm(alpha.evaluate(p, d)) - 1e-18
    with pytest.raises(ValueError):
        alpha_norm(alpha)


def test_membership_certified(table):
    cert = certify_membership(table, 1e-5, 3, eps_max())
    assert cert.map_margin > 0
    assert cert.binding_k == 2


def test_membership_at_zero(table):
    cert = certify_membership(table, 0.0, 3)
    assert cert.map_margin == 0.0


def test_understated_bound_is_caught(table):
    fake = KernelTable(table.kernels, 0.01)
    fake_p0, _ = p0(0.01, eps_max())
    assert fake_p0 > 1
    with pytest.raises(MembershipViolated):
        certify_membership(fake, 0.99 * min(fake_p0, 1.0), 1, eps_max())


def test_p_above_p0_rejected(table):
    with pytest.raises(ValueError):
        certify_membership(table, 1e-3, 1)


@pytest.mark.parametrize("d", range(1, 6))
def test_map_into_half_ball(table, d):
    eps = eps_max()
    p = 0.99 * p0(table.bound_B, eps)[0]
    rng = random.Random(d)
    k_max = 12
    jvals = kernel_values(table, d, k_max)
    for _ in range(100):
        point = random_ball_point(rng, p, eps, k_max)
        assert weighted_norm(point) <= p * eps
        assert weighted_norm(_apply_numeric(jvals, point, p)) <= 0.5 * p * eps


def test_empirical_contraction(table):
    assert empirical_contraction(table, 1e-5, 3, 30) < 1
    assert empirical_contraction(KernelTable({}), 1e-5, 3, 30) == 0.0
    assert empirical_contraction(table, 1e-5, 3) <= empirical_contraction(table, 1.4e-5, 3)


def test_uniqueness(table):
    eps = eps_max()
    p = 0.99 * p0(table.bound_B, eps)[0]
    start = random_ball_point(random.Random(1), p, eps, 32)
    assert fixed_point_gap(table, p, 2, start) < 1e-12


def test_certify_fills_everything(table):
    cert = certify(table, 2)
    data = json.loads(cert.dumps())
    assert set(data) == {"B", "epsilon", "p0", "binding_k", "map_margin", "contraction_ratio"}
    assert 0 < cert.epsilon < 0.5 and cert.p0 > 0
    assert cert.map_margin >= 0 and cert.contraction_ratio < 1
    assert isinstance(cert, Certificate)
