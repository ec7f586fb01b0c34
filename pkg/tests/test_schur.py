import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxdet.hadamard import constructible_registry, sylvester, paley_i
from maxdet.schur import (
    batch_det,
    batch_scaled_f,
    border_batch,
    border_from_b,
    complete_D,
    complete_D_trace,
    det_exact,
    det_rational,
    minus_identity,
    ostrowski_lower_bound,
    sample_border,
    schur_identity_check,
    schur_pair,
    sign_complement,
    u_row_norms,
)
from maxdet.signmatrix import SignMatrix

REG = constructible_registry(64)
CORES = [o for o in REG.known_orders if 4 <= o <= 64]


def cofactor_det(m):
    n = len(m)
    if n == 0:
        return 1
    total = 0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i, j in itertools.combinations(range(n), 2) if perm[i] > perm[j])
        total += (-1) ** inversions * math.prod(m[i][perm[i]] for i in range(n))
    return total


def test_border_determinism_and_sharding():
    a = border_batch(7, 0, 50, 12, 3)
    assert np.array_equal(a, border_batch(7, 0, 50, 12, 3))
    assert np.array_equal(a[20:35], border_batch(7, 20, 15, 12, 3))
    assert not np.array_equal(a, border_batch(8, 0, 50, 12, 3))
    assert set(np.unique(a)) == {-1, 1}


def test_sample_border_repeatable():
    A = sylvester(3)
    assert sample_border(A, 2, seed=11, trial=4) == sample_border(A, 2, seed=11, trial=4)


def test_c_for_all_ones_border():
    A = sylvester(2)
    s = border_from_b(A, SignMatrix.ones(4, 1))
    col_sums = A.to_array().sum(axis=0)
    assert s.C.to_lists() == [[1 if x >= 0 else -1 for x in col_sums]]


def test_b_equal_to_a_column():
    A = paley_i(11)
    for j in range(12):
        b = SignMatrix.from_array(A.to_array()[:, [j]])
        pair = schur_pair(A, border_from_b(A, b))
        # A^T b = h e_j, sgn(0) = +1 makes C all ones and F = c_j = 1
        assert pair.F == ((Fraction(1),),)


@pytest.mark.parametrize("seed", range(5))
def test_c_matches_direct_definition(seed):
    A = sylvester(2)
    s = sample_border(A, 3, seed)
    a, b = A.to_array(), s.B.to_array()
    expected = [[1 if sum(a[r][j] * b[r][i] for r in range(4)) >= 0 else -1 for j in range(4)] for i in range(3)]
    assert s.C.to_lists() == expected
    assert sign_complement(A, s.B) == s.C


@pytest.mark.parametrize("h", CORES)
def test_cauchy_schwarz_and_row_norms(h):
    A = REG.matrix(h)
    b = border_batch(h, 0, 300, h, 3)
    hf = batch_scaled_f(A.to_array(), b)
    # |F_ij| <= sqrt(h)  <=>  (hF_ij)^2 <= h^3
    assert np.all(hf.astype(object) ** 2 <= h ** 3)
    assert np.all(np.diagonal(hf, axis1=1, axis2=2) >= 0)
    for t in range(5):
        s = border_from_b(A, SignMatrix.from_array(b[t]))
        assert u_row_norms(A, s.C) == [1, 1, 1]
        assert np.array_equal(np.array(schur_pair(A, s).scaled_f()), hf[t])


def test_independent_entries_uncorrelated():
    a = sylvester(3).to_array()
    n = 100_000
    hf = batch_scaled_f(a, border_batch(3, 0, n, 8, 4)).astype(float) / 8
    for x, y in ((hf[:, 0, 0], hf[:, 1, 1]), (hf[:, 0, 1], hf[:, 2, 3])):
        prod = (x - x.mean()) * (y - y.mean())
        se = prod.std(ddof=1) / math.sqrt(n)
        assert abs(prod.mean()) < 4 * se


def test_det_exact_examples():
    assert det_exact(np.eye(5, dtype=int)) == 1
    assert abs(det_exact(sylvester(2))) == 16
    assert det_exact([[2, 3], [4, 6]]) == 0
    assert det_exact([[0, 1], [1, 0]]) == -1
    assert det_exact([]) == 1


def test_det_exact_against_cofactor_oracle():
    rng = random.Random(5)
    for n in range(1, 7):
        for _ in range(8):
            m = [[rng.choice((-1, 1)) for _ in range(n)] for _ in range(n)]
            assert det_exact(m) == cofactor_det(m)
            assert int(batch_det(np.array([m], dtype=np.int64))[0]) == cofactor_det(m)


@given(st.lists(st.lists(st.integers(-50, 50), min_size=4, max_size=4), min_size=4, max_size=4))
def test_det_exact_integer_matrices(m):
    assert det_exact(m) == cofactor_det(m)


def test_det_rational():
    assert det_rational([[Fraction(1, 2), 0], [0, Fraction(2, 3)]]) == Fraction(1, 3)


def test_schur_identity_h4_d1():
    A = sylvester(2)
    for seed in range(20):
        assert schur_identity_check(A, sample_border(A, 1, seed), minus_identity(1))


def test_schur_identity_h8_d3():
    A = sylvester(3)
    for seed in range(100):
        s = sample_border(A, 3, seed)
        assert schur_identity_check(A, s, minus_identity(3))
        assert schur_identity_check(A, s, complete_D(A, s))


def test_complete_d_small_cases():
    A = sylvester(3)
    s = sample_border(A, 1, 0)
    assert complete_D(A, s).to_lists() == [[-1]]
    s2 = sample_border(A, 2, 4)
    D, trace = complete_D_trace(A, s2)
    before = abs(det_exact(np.block([[A.to_array(), s2.B.to_array()], [s2.C.to_array(), minus_identity(2)]])))
    after = abs(det_exact(np.block([[A.to_array(), s2.B.to_array()], [s2.C.to_array(), D.to_array()]])))
    assert trace[0] == before and trace[-1] == after >= before
    assert [D.to_lists()[i][i] for i in range(2)] == [-1, -1]


@pytest.mark.parametrize("seed", range(30))
def test_complete_d_never_decreases(seed):
    A = paley_i(11)
    s = sample_border(A, 3, seed)
    _, trace = complete_D_trace(A, s)
    assert len(trace) == 7
    assert all(x <= y for x, y in zip(trace, trace[1:]))


def test_ostrowski_examples():
    for d in (1, 2, 5):
        assert ostrowski_lower_bound(np.eye(d, dtype=int).tolist()) == 1
    q = Fraction(1, 4)
    m = [[1 - q, -q], [-q, 1 - q]]
    assert ostrowski_lower_bound(m) == Fraction(1, 2)
    assert det_rational(m) == Fraction(1, 2)
    with pytest.raises(ValueError):
        ostrowski_lower_bound([[0, 1], [1, 0]])


def test_ostrowski_random():
    rng = random.Random(2)
    for _ in range(10_000):
        eps = Fraction(rng.randint(0, 30), 90)
        m = [[(1 if i == j else 0) - eps * Fraction(rng.randint(-6, 6), 6) for j in range(3)] for i in range(3)]
        assert det_rational(m) >= ostrowski_lower_bound(m) >= 1 - 3 * eps
