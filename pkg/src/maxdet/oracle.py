"""Exact maximal determinants for tiny orders by exhaustive search."""

from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bounds import thm1_dbar_exact, thm2_dbar_exact
from .schur import batch_det, det_exact
from .signmatrix import SignMatrix

MAX_ORDER = 6
_BATCH = 1 << 15


class BoundViolation(AssertionError):
    pass


@dataclass(frozen=True)
class MaxDetRecord:
    n: int
    dbar: int
    witness: SignMatrix

    def __post_init__(self):
        if abs(det_exact(self.witness)) != self.dbar:
            raise ValueError("witness determinant does not match dbar")
        a = self.witness.to_array()
        if not (np.all(a[0] == 1) and np.all(a[:, 0] == 1)):
            raise ValueError("witness is not normalized")


def _normalized_rows(n: int) -> np.ndarray:
    """All {+1,-1} rows of length n starting with +1, the all-ones row first."""
    idx = np.arange(2 ** (n - 1))
    tail = np.where((idx[:, None] >> np.arange(n - 2, -1, -1)) & 1, -1, 1)
    return np.hstack([np.ones((len(idx), 1), dtype=np.int64), tail])


@lru_cache(maxsize=None)
def maxdet_exhaustive(n: int, allow_large: bool = False) -> MaxDetRecord:
    """Maximum |det| over all n x n {+1,-1} matrices.

    Negating rows and columns makes the first row and column all +1. The
    remaining rows are then distinct members of the 2^(n-1) - 1 normalized
    rows other than all-ones (a repeat gives det 0), and reordering them only
    flips the sign, so it is enough to scan combinations of n - 1 of them.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > MAX_ORDER and not allow_large:
        raise ValueError(f"n = {n} exceeds the exhaustive cutoff {MAX_ORDER}")
    if n == 1:
        return MaxDetRecord(1, 1, SignMatrix.from_array([[1]]))
    rows = _normalized_rows(n)
    first, rest = rows[0], rows[1:]
    best, best_combo = -1, None
    combos = itertools.combinations(range(len(rest)), n - 1)
    while True:
        chunk = np.array(list(itertools.islice(combos, _BATCH)), dtype=np.int64)
        if chunk.size == 0:
            break
        mats = np.concatenate([np.broadcast_to(first, (len(chunk), 1, n)), rest[chunk]], axis=1)
        dets = np.abs(batch_det(mats))
        i = int(np.argmax(dets))
        if dets[i] > best:
            best, best_combo = int(dets[i]), chunk[i]
    witness = np.vstack([first, rest[best_combo]])
    return MaxDetRecord(n, best, SignMatrix.from_array(witness))


def maxdet_bruteforce(n: int) -> int:
    """Maximum |det| over all 2^(n^2) matrices, with no normalization (n <= 4)."""
    if n > 4:
        raise ValueError("full enumeration is limited to n <= 4")
    total = 1 << (n * n)
    best = 0
    for start in range(0, total, _BATCH):
        t = np.arange(start, min(start + _BATCH, total), dtype=np.int64)
        mats = np.where((t[:, None] >> np.arange(n * n)) & 1, 1, -1).reshape(-1, n, n)
        best = max(best, int(np.abs(batch_det(mats)).max()))
    return best


@dataclass(frozen=True)
class OracleCheck:
    n: int
    h: int
    d: int
    method: str
    bound: Fraction
    dbar: int

    @property
    def ok(self) -> bool:
        return self.bound <= self.dbar


def check_bounds_vs_oracle() -> list[OracleCheck]:
    """Both theorems against exact maxima at n = 5, 6 (h = 4) and the small-h cases n = 2, 3.

    Raises BoundViolation if any bound exceeds the true maximum.
    """
    checks = []
    for n, h, d in ((5, 4, 1), (6, 4, 2)):
        dbar = maxdet_exhaustive(n).dbar
        checks.append(OracleCheck(n, h, d, "thm1", thm1_dbar_exact(h, d), dbar))
        checks.append(OracleCheck(n, h, d, "thm2", thm2_dbar_exact(h, d), dbar))
    for n, h, d in ((2, 1, 1), (3, 2, 1)):
        dbar = maxdet_exhaustive(n).dbar
        checks.append(OracleCheck(n, h, d, "thm2", thm2_dbar_exact(h, d), dbar))
    bad = [c for c in checks if not c.ok]
    if bad:
        raise BoundViolation(f"bounds exceed the true maximum: {bad}")
    return checks
