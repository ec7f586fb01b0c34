import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st
from mpmath import mp

from maxdet.exact_stats import mu_exact
from maxdet.stirling import (
    Interval,
    bernoulli,
    check_mu_sigma_inequalities,
    containment_rows,
    ln_bigint,
    ln_central_binomial,
    mu_interval,
    stirling_coefficient,
    stirling_error_bound,
)

fractions = st.fractions(min_value=-1000, max_value=1000, max_denominator=10**6)


def test_bernoulli_values():
    assert bernoulli(0) == 1
    assert bernoulli(2) == Fraction(1, 6)
    assert bernoulli(4) == Fraction(-1, 30)
    assert bernoulli(8) == Fraction(-1, 30)
    assert bernoulli(12) == Fraction(-691, 2730)


@pytest.mark.parametrize("j", range(1, 21))
def test_bernoulli_sign(j):
    assert (bernoulli(2 * j) > 0) == (j % 2 == 1)


def test_bernoulli_rejects_odd():
    with pytest.raises(ValueError):
        bernoulli(3)


def test_small_enclosures():
    assert ln_central_binomial(2, 2).contains(ln_bigint(6))
    assert mp.mpf("1.79175") < ln_central_binomial(2, 2).hi
    assert ln_central_binomial(1, 1).contains(ln_bigint(2))
    assert ln_central_binomial(498, 3).contains(ln_bigint(math.comb(996, 498)))


def test_mu_interval():
    assert mu_interval(4).contains(Fraction(5, 2))
    assert mu_interval(996).contains(mu_exact(996))
    assert mu_interval(996).width < mp.mpf(10) ** -12


def test_ln_bigint_is_tight_and_sound():
    n = 3 ** 2000 + 17
    enc = ln_bigint(n)
    with mp.workdps(150):
        exact = mp.log(n)
        assert enc.lo <= exact <= enc.hi
    assert enc.width < mp.mpf(10) ** -80


def test_containment_grid():
    rows = containment_rows(300, range(1, 6))
    assert len(rows) == 1500
    assert all(r.passed for r in rows)


@pytest.mark.parametrize("k", range(1, 6))
def test_error_bound_dominates_true_error(k):
    with mp.workdps(120):
        for m in (1, 2, 3, 5, 10, 50, 120, 300):
            exact = mp.log(math.comb(2 * m, m))
            series = m * mp.log(4) - mp.log(mp.pi * m) / 2
            series -= sum(mp.mpf(stirling_coefficient(j).numerator) / stirling_coefficient(j).denominator
                          / mp.mpf(m) ** (2 * j - 1) for j in range(1, k))
            bound = stirling_error_bound(m, k)
            assert abs(exact - series) <= mp.mpf(bound.numerator) / bound.denominator


def test_inequalities_small_and_full():
    assert check_mu_sigma_inequalities(64).ok
    report = check_mu_sigma_inequalities(2048)
    assert report.ok and report.checked == 512 and report.first_violation is None


@given(fractions, fractions)
def test_interval_arithmetic_sound(x, y):
    a, b = Interval.point(x), Interval.point(y)
    assert (a + b).contains(x + y)
    assert (a - b).contains(x - y)
    assert (a * b).contains(x * y)
    if y:
        assert (a / b).contains(x / y)


@given(st.fractions(min_value=Fraction(1, 1000), max_value=50, max_denominator=10**5))
def test_interval_functions_sound(x):
    a = Interval.point(x)
    with mp.workdps(200):
        v = mp.mpf(x.numerator) / x.denominator
        for enc, exact in ((a.exp(), mp.exp(v)), (a.log(), mp.log(v)), (a.sqrt(), mp.sqrt(v))):
            assert enc.lo <= exact <= enc.hi


@given(fractions, fractions)
def test_interval_ordering(x, y):
    assume(x != y)
    lo, hi = sorted((x, y))
    assert Interval.point(lo).certainly_lt(hi)
    assert Interval.point(hi).certainly_gt(lo)
    assert not Interval.point(lo).certainly_gt(hi)


def test_interval_rejects_empty_and_bad_domains():
    with pytest.raises(ValueError):
        Interval(mp.mpf(2), mp.mpf(1))
    with pytest.raises(ValueError):
        Interval.point(0).log()
    with pytest.raises(ValueError):
        ln_central_binomial(0)
