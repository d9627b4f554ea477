import json
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monodimer.fixpoint import (
    AlphaNumeric,
    AlphaSymbolic,
    IterationReport,
    OutsideDomain,
    apply_master1_numeric,
    apply_master1_symbolic,
    first_iterate,
    iterate_numeric,
    iterate_to_stability,
    support_check,
    weighted_norm,
)
from monodimer.formal_series import BiSeries, NotDivisibleByP
from monodimer.kernels import KernelTable, derived_kernels, w_poly


@pytest.fixture(scope="module")
def table():
    return derived_kernels()


def lemma1_tables(min_k=2, max_k=8):
    """Random kernel tables whose ``w`` supports respect the Lemma 1 window."""
    coeff = st.builds(F, st.integers(-9, 9), st.integers(1, 12))

    def build(draw_map):
        return KernelTable({k: w_poly(v) for k, v in draw_map.items()})

    entries = {
        k: st.dictionaries(st.sampled_from(range((k + 1) // 2, k)), coeff, max_size=k - 1)
        for k in range(min_k, max_k + 1)
    }
    return st.fixed_dictionaries(entries).map(build)


def test_zero_input_gives_leading_terms(table):
    out = apply_master1_symbolic(table, AlphaSymbolic.zero(6, 6))
    for k in range(2, 7):
        expected = BiSeries({(k, j): c for (_, j), c in table.get(k).terms.items()}, 6)
        assert out.entries[k] == expected


def test_second_application_by_hand():
    # alpha_2 = (1/8) p^2 w;  sigma/p = (1/4) p w  so  (1 - 2 sigma/p)^2 = 1 - p w + ...
    t = KernelTable({2: w_poly({1: F(1, 8)})})
    a1 = apply_master1_symbolic(t, AlphaSymbolic.zero(3, 3))
    a2 = apply_master1_symbolic(t, a1)
    assert a2.entries[2] == BiSeries({(2, 1): F(1, 8), (3, 2): F(-1, 8)}, 3)
    assert a2.entries[3] == BiSeries.zero(3)


def test_corrupted_input_raises(table):
    bad = AlphaSymbolic({2: BiSeries({(0, 0): F(1, 10)}, 4)}, 4)
    with pytest.raises(NotDivisibleByP):
        apply_master1_symbolic(table, bad)


def test_zero_kernels_one_iteration():
    alpha, report = iterate_to_stability(KernelTable({}), 6)
    assert report.iterations == 1 and report.converged
    assert all(not s for s in alpha.entries.values())


def test_stable_and_fixed(table):
    alpha, report = iterate_to_stability(table, 6)
    assert report.converged
    assert alpha.entries[2].terms[(2, 1)] == F(1, 8)
    assert apply_master1_symbolic(table, alpha) == alpha


def test_monotone_stabilization(table):
    _, report = iterate_to_stability(table, 8)
    # iterates n and n+1 (iterate 0 is zero) agree through p-order n+1
    for n, through in enumerate(report.history):
        assert through >= n + 1


def test_support_modes(table):
    assert support_check(first_iterate(table, 8), strict=True) == []
    alpha, _ = iterate_to_stability(table, 8)
    assert support_check(alpha) == []
    assert support_check(alpha, strict=True) != []
    bad = AlphaSymbolic({2: BiSeries({(2, 2): F(1)}, 4)}, 4)
    assert support_check(bad) == [(2, 2, 2)]


@settings(max_examples=25)
@given(lemma1_tables())
def test_lemma_supports_on_random_tables(t):
    assert support_check(first_iterate(t, 7), strict=True) == []
    current = AlphaSymbolic.zero(7, 7)
    for _ in range(8):
        current = apply_master1_symbolic(t, current)
        assert support_check(current) == []


def test_numeric_examples(table):
    out = apply_master1_numeric(table, AlphaNumeric([0.0] * 5, 0.001, 2))
    assert out.values[0] == pytest.approx(6.25e-8, rel=1e-15)
    assert apply_master1_numeric(table, AlphaNumeric([0.0] * 5, 0.0, 2)).values == (0.0,) * 5
    with pytest.raises(OutsideDomain):
        apply_master1_numeric(table, AlphaNumeric([0.25, 0, 0, 0, 0], 0.01, 1))


def test_iterate_numeric_converges(table):
    alpha, report = iterate_numeric(table, 1e-5, 3, tol=1e-14)
    assert report.converged and report.residual < 1e-14
    _, report0 = iterate_numeric(table, 0.0, 3)
    assert report0.iterations == 1


def test_uniqueness_from_two_starts(table):
    rng = random.Random(5)
    p, eps = 1e-5, 0.1096
    start = [rng.uniform(-1, 1) * p * eps / 2**k / 31 for k in range(2, 33)]
    assert weighted_norm(start) <= p * eps
    a, _ = iterate_numeric(table, p, 3, 1e-16)
    b, _ = iterate_numeric(table, p, 3, 1e-16, start=start)
    assert weighted_norm([x - y for x, y in zip(a.values, b.values)]) < 1e-12


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("p", [1e-3, 3e-4, 1e-4, 1e-5])
def test_symbolic_numeric_consistency(table, p, d):
    numeric, _ = iterate_numeric(table, p, d, tol=1e-30)
    for p_trunc in (3, 8):
        sym, _ = iterate_to_stability(table, p_trunc)
        values = sym.evaluate(p, d)
        for k, (s, n) in enumerate(zip(values, numeric.values), start=2):
            # float round-off floor; it dominates 10 p^(P+1) only at P = 8
            floor = 8 * 2.2e-16 * abs(n)
            assert abs(s - n) <= 10 * p ** (p_trunc + 1) + floor, (k, p_trunc)


def test_report_json():
    r = IterationReport(3, True, residual=1e-15)
    assert json.loads(json.dumps(r.to_json())) == {"iterations": 3, "residual": 1e-15, "converged": True}
