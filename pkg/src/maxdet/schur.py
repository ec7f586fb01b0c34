"""The bordered construction and its Schur complement.

A Hadamard core A (h x h) gets d extra columns B drawn uniformly from
{+1,-1}, d extra rows C = sgn((A^T B)^T) and a corner D. With F = C A^-1 B and
G = F + I, the determinant factors as det(A~) = det(A) det(D - F). Since
A^-1 = A^T / h, the scaled matrix hF = C A^T B is integral, and all exact
arithmetic below works with hF rather than F.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

from .signmatrix import SignMatrix


# -- randomness ---------------------------------------------------------------

def _blocks_per_trial(h: int, d: int) -> int:
    # one Philox block is 256 bits; every trial owns whole blocks
    return -(-h * d // 256)


def border_batch(seed: int, start: int, count: int, h: int, d: int) -> np.ndarray:
    """Borders for trials ``start .. start+count-1`` as an int64 array (count, h, d).

    Trial t's border depends only on (seed, t): it is read from the Philox
    counter blocks reserved for t, so any sharding of trials reproduces it.
    """
    blocks = _blocks_per_trial(h, d)
    gen = np.random.Philox(key=seed, counter=start * blocks)
    words = gen.random_raw(count * blocks * 4).reshape(count, blocks * 4)
    bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")[:, : h * d]
    return (2 * bits.astype(np.int64) - 1).reshape(count, h, d)


# -- construction ---------------------------------------------------------------

def sgn(x):
    """+1 for x >= 0, -1 otherwise."""
    return np.where(np.asarray(x) >= 0, 1, -1)


def batch_scaled_f(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """hF = C A^T B for a stack of borders ``b`` of shape (count, h, d)."""
    # float64 products are exact here: every partial sum is an integer of size <= h^2
    at = a.T.astype(np.float64)
    v = np.matmul(at, b.astype(np.float64))
    c = np.where(v >= 0, 1.0, -1.0).transpose(0, 2, 1)
    return np.rint(np.matmul(c, v)).astype(np.int64)


@dataclass(frozen=True)
class BorderSample:
    B: SignMatrix
    C: SignMatrix
    h: int
    d: int

    def __post_init__(self):
        if self.B.shape != (self.h, self.d) or self.C.shape != (self.d, self.h):
            raise ValueError(f"border shapes {self.B.shape}, {self.C.shape} do not fit h={self.h}, d={self.d}")


def sign_complement(A: SignMatrix, B: SignMatrix) -> SignMatrix:
    """C with c_ij = sgn((A^T B)_ji)."""
    if not A.is_square or B.rows != A.rows:
        raise ValueError(f"shape mismatch: A is {A.shape}, B is {B.shape}")
    atb = A.T.gram(B.T)
    return SignMatrix.from_array(sgn(atb).T)


def border_from_b(A: SignMatrix, B: SignMatrix) -> BorderSample:
    return BorderSample(B=B, C=sign_complement(A, B), h=A.rows, d=B.cols)


def sample_border(A: SignMatrix, d: int, seed: int, trial: int = 0) -> BorderSample:
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    b = border_batch(seed, trial, 1, A.rows, d)[0]
    return border_from_b(A, SignMatrix.from_array(b))


@dataclass(frozen=True)
class SchurPair:
    """F = C A^-1 B and G = F + I, as exact rationals."""

    F: tuple[tuple[Fraction, ...], ...]
    G: tuple[tuple[Fraction, ...], ...]
    h: int

    @property
    def d(self) -> int:
        return len(self.F)

    def scaled_f(self) -> list[list[int]]:
        out = [[f * self.h for f in row] for row in self.F]
        assert all(x.denominator == 1 for row in out for x in row)
        return [[int(x) for x in row] for row in out]


def scaled_f(A: SignMatrix, sample: BorderSample) -> np.ndarray:
    return sample.C.matmul(A.T).dot(sample.B.to_array())


def schur_pair(A: SignMatrix, sample: BorderSample) -> SchurPair:
    h, d = sample.h, sample.d
    hf = scaled_f(A, sample)
    F = tuple(tuple(Fraction(int(hf[i, j]), h) for j in range(d)) for i in range(d))
    G = tuple(tuple(F[i][j] + (1 if i == j else 0) for j in range(d)) for i in range(d))
    return SchurPair(F=F, G=G, h=h)


def u_row_norms(A: SignMatrix, C: SignMatrix) -> list[Fraction]:
    """Row sums of squares of U = C A^-1."""
    h = A.rows
    cat = C.gram(A)
    return [Fraction(int((row * row).sum()), h * h) for row in cat]


# -- determinants ---------------------------------------------------------------

def det_exact(m) -> int:
    """Exact determinant of a square integer matrix (fraction-free Bareiss)."""
    if isinstance(m, SignMatrix):
        m = m.to_lists()
    a = [[int(x) for x in row] for row in m]
    n = len(a)
    if n == 0:
        return 1
    if any(len(row) != n for row in a):
        raise ValueError("det_exact needs a square matrix")
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        rowk = a[k]
        for i in range(k + 1, n):
            ai = a[i]
            aik = ai[k]
            for j in range(k + 1, n):
                ai[j] = (ai[j] * akk - aik * rowk[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def det_rational(m: Sequence[Sequence]) -> Fraction:
    """Exact determinant of a square matrix of rationals."""
    rows = [[Fraction(x) for x in row] for row in m]
    scale = Fraction(1)
    ints = []
    for row in rows:
        den = lcm(*(x.denominator for x in row)) if row else 1
        scale /= den
        ints.append([int(x * den) for x in row])
    return det_exact(ints) * scale


def batch_det(m: np.ndarray) -> np.ndarray:
    """Determinants of a stack (..., n, n) by cofactor expansion; exact for integer dtypes."""
    n = m.shape[-1]
    if n == 1:
        return m[..., 0, 0]
    if n == 2:
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    total = 0
    cols = np.arange(n)
    for j in range(n):
        minor = m[..., 1:, :][..., cols != j]
        term = m[..., 0, j] * batch_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def safe_int_dtype(h: int, d: int):
    """int64 if every d x d determinant of hG-sized entries fits, else object."""
    from math import factorial, isqrt

    bound = (isqrt(h) + 2) * h
    return np.int64 if factorial(d) * bound ** d < 2 ** 62 else object


# -- completing D ---------------------------------------------------------------

def complete_d_batch(hf: np.ndarray, h: int) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Greedy completion of D = -I for a stack of hF matrices.

    Off-diagonal zeros are set in row-major order to the sign giving the larger
    |det(hD - hF)|, +1 on ties. Returns (D, det(hD - hF), |det| after each step).
    """
    count, d, _ = hf.shape
    dtype = safe_int_dtype(h, d)
    hf = hf.astype(dtype)
    dmat = np.zeros((count, d, d), dtype=np.int64)
    for i in range(d):
        dmat[:, i, i] = -1
    k = h * dmat - hf
    history = [np.abs(batch_det(k))]
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            k[:, i, j] = h - hf[:, i, j]
            det_plus = batch_det(k)
            k[:, i, j] = -h - hf[:, i, j]
            det_minus = batch_det(k)
            choose_plus = np.abs(det_plus) >= np.abs(det_minus)
            dmat[:, i, j] = np.where(choose_plus, 1, -1)
            k[:, i, j] = h * dmat[:, i, j] - hf[:, i, j]
            history.append(np.where(choose_plus, np.abs(det_plus), np.abs(det_minus)))
    return dmat, batch_det(k), history


def complete_D_trace(A: SignMatrix, sample: BorderSample) -> tuple[SignMatrix, list[int]]:
    """Completed D together with |det(A~)| before and after every replacement."""
    hf = scaled_f(A, sample)[None, :, :]
    dmat, _, history = complete_d_batch(hf, sample.h)
    h, d = sample.h, sample.d
    det_a = abs(det_exact(A))
    trace = [int(Fraction(det_a * int(x[0]), h ** d)) for x in history]
    return SignMatrix.from_array(dmat[0]), trace


def complete_D(A: SignMatrix, sample: BorderSample) -> SignMatrix:
    return complete_D_trace(A, sample)[0]


def minus_identity(d: int) -> np.ndarray:
    return -np.eye(d, dtype=np.int64)


def bordered_matrix(A: SignMatrix, sample: BorderSample, D) -> np.ndarray:
    """A~ = [[A, B], [C, D]] as an integer array; D may contain zeros."""
    d_arr = D.to_array() if isinstance(D, SignMatrix) else np.asarray(D, dtype=np.int64)
    return np.block([[A.to_array(), sample.B.to_array()], [sample.C.to_array(), d_arr]])


def schur_identity_check(A: SignMatrix, sample: BorderSample, D) -> bool:
    """det(A~) == det(A) * det(D - F), compared exactly."""
    d_arr = D.to_array() if isinstance(D, SignMatrix) else np.asarray(D, dtype=np.int64)
    h, d = sample.h, sample.d
    lhs = det_exact(bordered_matrix(A, sample, d_arr))
    k = h * d_arr - scaled_f(A, sample)
    rhs = det_exact(A) * Fraction(det_exact(k), h ** d)
    return lhs == rhs


def ostrowski_lower_bound(m: Sequence[Sequence]) -> Fraction:
    """1 - d*eps for M = I - E with |e_ij| <= eps; requires d*eps <= 1."""
    rows = [[Fraction(x) for x in row] for row in m]
    d = len(rows)
    eps = max(abs((1 if i == j else 0) - rows[i][j]) for i in range(d) for j in range(d))
    if d * eps > 1:
        raise ValueError(f"d*eps = {d * eps} exceeds 1")
    return 1 - d * eps
