from fractions import Fraction

import numpy as np
import pytest

from maxdet.exact_stats import mu_exact, sigma2_exact
from maxdet.hadamard import paley_i, paley_ii, sylvester
from maxdet.sampler import (
    GoodEvent,
    TooLarge,
    TrialStats,
    best_det_search,
    border_from_index,
    column_table,
    enumerate_stats,
    good_event_rate,
    mc_stats,
    verify_good_bound,
    _exhaustive_hf,
)
from maxdet.schur import batch_scaled_f


@pytest.mark.parametrize("A, d", [
    (sylvester(2), 1), (sylvester(2), 2), (sylvester(3), 1), (sylvester(3), 2), (sylvester(2), 3),
])
def test_exhaustive_matches_exact_moments(A, d):
    h = A.rows
    st = enumerate_stats(A, d)
    assert st.trials == 2 ** (h * d)
    assert st.mean_gii == mu_exact(h)
    assert st.var_gii == sigma2_exact(h)
    if d > 1:
        assert st.mean_gij == 0 and st.var_gij == 1
    assert st.bound_violations == 0


def test_exhaustive_order_12():
    st = enumerate_stats(paley_i(11), 2)
    assert (st.mean_gii, st.var_gii, st.mean_gij, st.var_gij) == (mu_exact(12), sigma2_exact(12), 0, 1)


def test_exhaustive_known_values():
    assert enumerate_stats(sylvester(2), 2).good_rate == Fraction(7, 8)
    assert enumerate_stats(sylvester(3), 2).good_rate == Fraction(925, 1024)


def test_exhaustive_refuses_large():
    with pytest.raises(TooLarge):
        enumerate_stats(sylvester(4), 2)


def test_column_table_agrees_with_direct_product():
    A = sylvester(3)
    a = A.to_array()
    for start, hf in _exhaustive_hf(a, 2, chunk=4096):
        idx = np.arange(start, start + 40)
        b = np.stack([border_from_index(int(t), 8, 2) for t in idx])
        assert np.array_equal(hf[:40], batch_scaled_f(a, b))
        if start > 20000:
            break
    p = column_table(a)
    # |c_x . v_y| <= ||v_y||_1 = P[y, y]
    assert np.array_equal(np.diag(p), np.abs(p).max(axis=0))


def test_mc_deterministic():
    A = sylvester(4)
    assert mc_stats(A, 2, 5000, seed=9) == mc_stats(A, 2, 5000, seed=9)
    assert mc_stats(A, 2, 5000, seed=9) != mc_stats(A, 2, 5000, seed=10)


def test_mc_independent_of_workers():
    A = sylvester(4)
    one = mc_stats(A, 2, 20_000, seed=4, workers=1)
    assert mc_stats(A, 2, 20_000, seed=4, workers=3) == one


def test_mc_mean_h16():
    st = mc_stats(sylvester(4), 2, 100_000, seed=0)
    assert abs(float(st.mean_gii - mu_exact(16))) < 4 * st.se_mean_gii
    assert abs(float(st.var_gii - sigma2_exact(16))) < 4 * st.se_var_gii


def test_mc_offdiag_variance_h96(registry):
    st = mc_stats(registry.matrix(96), 2, 10_000, seed=1)
    assert abs(float(st.var_gij) - 1) < 4 * st.se_var_gij
    assert abs(float(st.mean_gij)) < 4 * st.se_mean_gij


def test_mc_converges_across_seed_batches():
    A, mu = sylvester(4), mu_exact(16)
    hits = sum(
        abs(float(st.mean_gii - mu)) < 4 * st.se_mean_gii
        for st in (mc_stats(A, 2, 1000, seed=s) for s in range(100))
    )
    assert hits >= 99


def test_trial_stats_roundtrip():
    st = mc_stats(sylvester(3), 3, 3000, seed=2)
    assert TrialStats.from_dict(st.to_dict()) == st


def test_good_event_thresholds():
    ev = GoodEvent.make(8, 2)
    mu = Fraction(51, 16)
    # integer thresholds on h*g reproduce the strict rational inequalities
    for x in range(-100, 100):
        assert (ev.diag_lo <= x <= ev.diag_hi) == (abs(Fraction(x, 8) - mu) < 2)
        assert (abs(x) <= ev.off_abs) == (abs(Fraction(x, 8)) < 2)


def test_good_rate_positive_and_chebyshev():
    for A, d in ((sylvester(4), 2), (paley_i(11), 3)):
        st = mc_stats(A, d, 10_000, seed=3)
        rate = float(st.good_rate)
        assert rate > 0
        bad = 1 - rate
        se = (rate * (1 - rate) / st.trials) ** 0.5
        assert bad <= d * d / float(st.lam) ** 2 + 3 * se


def test_good_rate_d1_exhaustive():
    st = enumerate_stats(sylvester(4), 1)
    assert 0 < st.good_rate < 1
    assert good_event_rate(sylvester(4), 1, 2000, seed=0) > 0


def test_verify_good_bound():
    for k in (2, 3):
        assert verify_good_bound(sylvester(k), 2, exhaustive=True).ok
    r = verify_good_bound(paley_i(11), 3, trials=10_000, seed=5)
    assert r.ok and r.good_count > 0


def test_best_det_search_exhaustive_small():
    r = best_det_search(sylvester(2), 1, exhaustive=True)
    assert r.best_abs_det == 48 and r.meets_thm1


def test_best_det_search_meets_theorem_two():
    h = 12
    r = best_det_search(paley_i(11), 2, trials=100_000, seed=0)
    assert r.best_abs_det >= h ** 6 * (mu_exact(h) ** 2 - 1)
    assert paley_ii(5).rows == h
    r2 = best_det_search(paley_ii(5), 2, trials=100_000, seed=0)
    assert r2.best_abs_det >= h ** 6 * (mu_exact(h) ** 2 - 1)
