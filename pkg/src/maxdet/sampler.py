"""Exhaustive and Monte Carlo estimation of the moments of G.

All accumulation is on the integer matrix hG = hF + hI, so sums are exact
Python integers, shards merge associatively, and the result is the same for
any number of workers. Floating point appears only in standard errors.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .exact_stats import mu_exact
from .schur import (
    batch_det,
    batch_scaled_f,
    border_batch,
    complete_d_batch,
    det_exact,
    safe_int_dtype,
)
from .signmatrix import SignMatrix

CHUNK = 4096
MAX_EXHAUSTIVE_BITS = 26
TABLE_MAX_H = 12


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class GoodEvent:
    """Integer thresholds for the event |g_ij| < lam (i != j), |g_ii - mu| < lam."""

    h: int
    d: int
    mu: Fraction
    lam: Fraction
    diag_lo: int
    diag_hi: int
    off_abs: int
    det_threshold: int

    @classmethod
    def make(cls, h: int, d: int, lam: Fraction | int | None = None) -> "GoodEvent":
        mu = mu_exact(h)
        lam = Fraction(d if lam is None else lam)
        lo, hi = h * (mu - lam), h * (mu + lam)
        off = h * lam
        # det G >= mu^d (1 - d*lam/mu), scaled by h^d and rounded up
        det_t = h ** d * (mu ** d - d * lam * mu ** (d - 1))
        return cls(
            h=h, d=d, mu=mu, lam=lam,
            diag_lo=math.floor(lo) + 1,
            diag_hi=math.ceil(hi) - 1,
            off_abs=math.ceil(off) - 1,
            det_threshold=math.ceil(det_t),
        )


@dataclass
class _Accum:
    observations: int = 0
    diag: list = field(default_factory=lambda: [0, 0, 0, 0, 0])  # count, sum x^1..x^4
    off: list = field(default_factory=lambda: [0, 0, 0, 0, 0])
    diag_trial: list = field(default_factory=lambda: [0, 0])  # sums of per-trial totals and squares
    off_trial: list = field(default_factory=lambda: [0, 0])
    good: int = 0
    violations: int = 0
    best_det: int | None = None
    best_trial: int = -1
    best_good_det: int | None = None

    def merge(self, other: "_Accum") -> "_Accum":
        self.observations += other.observations
        for mine, theirs in ((self.diag, other.diag), (self.off, other.off),
                             (self.diag_trial, other.diag_trial), (self.off_trial, other.off_trial)):
            for i, v in enumerate(theirs):
                mine[i] += v
        self.good += other.good
        self.violations += other.violations
        if other.best_det is not None and (
            self.best_det is None
            or other.best_det > self.best_det
            or (other.best_det == self.best_det and other.best_trial < self.best_trial)
        ):
            self.best_det, self.best_trial = other.best_det, other.best_trial
        if other.best_good_det is not None and (self.best_good_det is None or other.best_good_det > self.best_good_det):
            self.best_good_det = other.best_good_det
        return self


def _sum_pow(x: np.ndarray, p: int) -> int:
    """Exact sum of x**p, in int64 when it cannot overflow."""
    if x.size == 0:
        return 0
    peak = int(np.abs(x).max())
    if x.dtype != object and peak ** p * x.size < 2 ** 62:
        return int((x ** p).sum())
    return int((x.astype(object) ** p).sum())


def _power_sums(x: np.ndarray) -> list[int]:
    return [int(x.size)] + [_sum_pow(x, p) for p in range(1, 5)]


def _accumulate(hg: np.ndarray, event: GoodEvent, first_trial: int) -> _Accum:
    count, d, _ = hg.shape
    acc = _Accum(observations=count)
    eye = np.eye(d, dtype=bool)
    diag = hg[:, eye]
    off = hg[:, ~eye]
    acc.diag = _power_sums(diag)
    t = diag.sum(axis=1)
    acc.diag_trial = [_sum_pow(t, 1), _sum_pow(t, 2)]
    if d > 1:
        acc.off = _power_sums(off)
        t = off.sum(axis=1)
        acc.off_trial = [_sum_pow(t, 1), _sum_pow(t, 2)]
    good = np.all((diag >= event.diag_lo) & (diag <= event.diag_hi), axis=1)
    if d > 1:
        good &= np.all(np.abs(off) <= event.off_abs, axis=1)
    dets = batch_det(hg.astype(safe_int_dtype(event.h, d)))
    acc.good = int(good.sum())
    if acc.good:
        good_dets = dets[good]
        acc.violations = int((good_dets < event.det_threshold).sum())
        acc.best_good_det = int(good_dets.max())
    best = int(np.argmax(dets))
    acc.best_det, acc.best_trial = int(dets[best]), first_trial + best
    return acc


@dataclass(frozen=True)
class TrialStats:
    """Moments of G over a set of borders; exact rationals, floats only for standard errors."""

    h: int
    d: int
    trials: int
    mode: str
    lam: Fraction
    mean_gii: Fraction
    var_gii: Fraction
    mean_gij: Fraction | None
    var_gij: Fraction | None
    good_rate: Fraction
    good_count: int
    bound_violations: int
    best_detG: Fraction
    best_trial: int
    best_good_detG: Fraction | None
    se_mean_gii: float = 0.0
    se_var_gii: float = 0.0
    se_mean_gij: float = 0.0
    se_var_gij: float = 0.0

    def __post_init__(self):
        if not 0 <= self.good_rate <= 1:
            raise ValueError("good_rate outside [0, 1]")

    def to_dict(self) -> dict:
        def exact(x):
            return None if x is None else str(x)

        def approx(x):
            return None if x is None else float(x)

        return {
            "h": self.h, "d": self.d, "trials": self.trials, "mode": self.mode, "lambda": exact(self.lam),
            "mean_gii": approx(self.mean_gii), "mean_gii_exact": exact(self.mean_gii),
            "var_gii": approx(self.var_gii), "var_gii_exact": exact(self.var_gii),
            "mean_gij": approx(self.mean_gij), "mean_gij_exact": exact(self.mean_gij),
            "var_gij": approx(self.var_gij), "var_gij_exact": exact(self.var_gij),
            "good_rate": approx(self.good_rate), "good_rate_exact": exact(self.good_rate),
            "good_count": self.good_count, "bound_violations": self.bound_violations,
            "best_detG": approx(self.best_detG), "best_detG_exact": exact(self.best_detG),
            "best_trial": self.best_trial,
            "best_good_detG_exact": exact(self.best_good_detG),
            "se_mean_gii": self.se_mean_gii, "se_var_gii": self.se_var_gii,
            "se_mean_gij": self.se_mean_gij, "se_var_gij": self.se_var_gij,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrialStats":
        def frac(key):
            return None if data[key] is None else Fraction(data[key])

        return cls(
            h=data["h"], d=data["d"], trials=data["trials"], mode=data["mode"], lam=Fraction(data["lambda"]),
            mean_gii=frac("mean_gii_exact"), var_gii=frac("var_gii_exact"),
            mean_gij=frac("mean_gij_exact"), var_gij=frac("var_gij_exact"),
            good_rate=frac("good_rate_exact"), good_count=data["good_count"],
            bound_violations=data["bound_violations"], best_detG=frac("best_detG_exact"),
            best_trial=data["best_trial"], best_good_detG=frac("best_good_detG_exact"),
            se_mean_gii=data["se_mean_gii"], se_var_gii=data["se_var_gii"],
            se_mean_gij=data["se_mean_gij"], se_var_gij=data["se_var_gij"],
        )


def _moments(sums: list[int], trial_sums: list[int], h: int, trials: int, exact_population: bool):
    n = sums[0]
    s1, s2, _, s4 = (Fraction(v) for v in sums[1:])
    mean = s1 / n / h
    if exact_population:
        var = (s2 / n - (s1 / n) ** 2) / h ** 2
        return mean, var, 0.0, 0.0
    var = (s2 - s1 * s1 / n) / (n - 1) / h ** 2 if n > 1 else Fraction(0)
    per = n // trials
    # standard errors from per-trial totals, which are independent across trials
    t1, t2 = (Fraction(v) for v in trial_sums)
    var_t = (t2 - t1 * t1 / trials) / (trials - 1) if trials > 1 else Fraction(0)
    se_mean = math.sqrt(float(var_t) / trials) / (per * h)
    m4 = float(s4 / n) / h ** 4
    central4 = m4 - 4 * float(mean) * float(Fraction(sums[3], n)) / h ** 3 \
        + 6 * float(mean) ** 2 * float(s2 / n) / h ** 2 - 3 * float(mean) ** 4
    se_var = math.sqrt(max(central4 - float(var) ** 2, 0.0) / trials)
    return mean, var, se_mean, se_var


def _finish(acc: _Accum, h: int, d: int, trials: int, mode: str, event: GoodEvent) -> TrialStats:
    exact = mode == "exhaustive"
    mean_ii, var_ii, se_m_ii, se_v_ii = _moments(acc.diag, acc.diag_trial, h, trials, exact)
    if d > 1:
        mean_ij, var_ij, se_m_ij, se_v_ij = _moments(acc.off, acc.off_trial, h, trials, exact)
    else:
        mean_ij = var_ij = None
        se_m_ij = se_v_ij = 0.0
    scale = h ** d
    return TrialStats(
        h=h, d=d, trials=trials, mode=mode, lam=event.lam,
        mean_gii=mean_ii, var_gii=var_ii, mean_gij=mean_ij, var_gij=var_ij,
        good_rate=Fraction(acc.good, trials), good_count=acc.good, bound_violations=acc.violations,
        best_detG=Fraction(acc.best_det, scale), best_trial=acc.best_trial,
        best_good_detG=None if acc.best_good_det is None else Fraction(acc.best_good_det, scale),
        se_mean_gii=se_m_ii, se_var_gii=se_v_ii, se_mean_gij=se_m_ij, se_var_gij=se_v_ij,
    )


# -- exhaustive -----------------------------------------------------------------

def column_table(a: np.ndarray) -> np.ndarray:
    """P[x, y] = c_x . v_y over all 2^h border columns, with v = A^T b and c = sgn(v).

    Column index x encodes b by bits (bit r set means b_r = +1). For a border
    with column indices (x_1, ..., x_d), hF_ij = P[x_i, x_j].
    """
    h = a.shape[0]
    idx = np.arange(2 ** h, dtype=np.int64)
    cols = np.where((idx[:, None] >> np.arange(h)) & 1, 1, -1)
    v = cols @ a
    c = np.where(v >= 0, 1, -1)
    return (c @ v.T).astype(np.int32)


def border_columns(index: np.ndarray, h: int, d: int) -> np.ndarray:
    """Column indices (count, d) of exhaustive border numbers."""
    mask = (1 << h) - 1
    return np.stack([(index >> (h * i)) & mask for i in range(d)], axis=1)


def border_from_index(t: int, h: int, d: int) -> np.ndarray:
    """The h x d border with exhaustive number t."""
    cols = border_columns(np.array([t], dtype=np.int64), h, d)[0]
    return np.stack([np.where((int(x) >> np.arange(h)) & 1, 1, -1) for x in cols], axis=1)


def _exhaustive_hf(a: np.ndarray, d: int, chunk: int = 1 << 16) -> Iterator[tuple[int, np.ndarray]]:
    h = a.shape[0]
    if h * d > MAX_EXHAUSTIVE_BITS:
        raise TooLarge(f"2^(h*d) = 2^{h * d} borders is too many to enumerate (limit 2^{MAX_EXHAUSTIVE_BITS})")
    # the 2^h x 2^h table pays off only while it is small
    p = column_table(a) if h <= TABLE_MAX_H else None
    total = 1 << (h * d)
    for start in range(0, total, chunk):
        t = np.arange(start, min(start + chunk, total), dtype=np.int64)
        x = border_columns(t, h, d)
        if p is not None:
            yield start, p[x[:, :, None], x[:, None, :]].astype(np.int64)
        else:
            bits = (x[:, None, :] >> np.arange(h)[None, :, None]) & 1
            yield start, batch_scaled_f(a, 2 * bits - 1)


def _hadamard_array(A: SignMatrix) -> np.ndarray:
    if not A.is_square:
        raise ValueError("A must be square")
    return A.to_array()


def enumerate_stats(A: SignMatrix, d: int, lam=None) -> TrialStats:
    """Exact moments and good-event rate over all 2^(h d) borders."""
    a = _hadamard_array(A)
    h = a.shape[0]
    event = GoodEvent.make(h, d, lam)
    acc = _Accum()
    for start, hf in _exhaustive_hf(a, d):
        acc.merge(_accumulate(hf + h * np.eye(d, dtype=np.int64), event, start))
    return _finish(acc, h, d, 1 << (h * d), "exhaustive", event)


# -- Monte Carlo -----------------------------------------------------------------

def _mc_shard(args) -> _Accum:
    a, d, seed, start, stop, lam = args
    h = a.shape[0]
    event = GoodEvent.make(h, d, lam)
    acc = _Accum()
    for s in range(start, stop, CHUNK):
        n = min(CHUNK, stop - s)
        hf = batch_scaled_f(a, border_batch(seed, s, n, h, d))
        acc.merge(_accumulate(hf + h * np.eye(d, dtype=np.int64), event, s))
    return acc


def _shards(trials: int, workers: int) -> list[tuple[int, int]]:
    per = -(-trials // max(workers, 1))
    per = -(-per // CHUNK) * CHUNK  # shard boundaries on chunk boundaries
    return [(s, min(s + per, trials)) for s in range(0, trials, per)]


def _run_shards(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def mc_stats(A: SignMatrix, d: int, trials: int, seed: int, lam=None, workers: int = 1) -> TrialStats:
    if trials < 1:
        raise ValueError("trials must be positive")
    a = _hadamard_array(A)
    h = a.shape[0]
    event = GoodEvent.make(h, d, lam)
    jobs = [(a, d, seed, s, e, lam) for s, e in _shards(trials, workers)]
    acc = _Accum()
    for part in _run_shards(_mc_shard, jobs, workers):
        acc.merge(part)
    return _finish(acc, h, d, trials, "monte-carlo", event)


def good_event_rate(A: SignMatrix, d: int, trials: int, seed: int, lam=None, workers: int = 1) -> float:
    return float(mc_stats(A, d, trials, seed, lam=lam, workers=workers).good_rate)


@dataclass(frozen=True)
class GoodBoundReport:
    h: int
    d: int
    trials: int
    good_count: int
    violations: int
    threshold: Fraction
    best_detG: Fraction
    best_good_detG: Fraction | None

    @property
    def ok(self) -> bool:
        return self.violations == 0


def verify_good_bound(A: SignMatrix, d: int, trials: int | None = None, seed: int = 0,
                      exhaustive: bool = False, workers: int = 1) -> GoodBoundReport:
    """Check det G / mu^d >= 1 - d^2/mu on every good trial (exactly)."""
    if exhaustive:
        stats = enumerate_stats(A, d)
    else:
        if trials is None:
            raise ValueError("trials required for Monte Carlo mode")
        stats = mc_stats(A, d, trials, seed, workers=workers)
    mu = mu_exact(A.rows)
    return GoodBoundReport(
        h=A.rows, d=d, trials=stats.trials, good_count=stats.good_count, violations=stats.bound_violations,
        threshold=1 - Fraction(d * d) / mu, best_detG=stats.best_detG, best_good_detG=stats.best_good_detG,
    )


# -- best determinant ----------------------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    h: int
    d: int
    trials: int
    best_abs_det: int
    best_trial: int
    ratio: float  # |det| / n^(n/2)
    border: SignMatrix
    corner: SignMatrix
    thm1_bound: Fraction
    meets_thm1: bool | None


def _search_shard(args):
    a, d, seed, start, stop, exhaustive = args
    h = a.shape[0]
    best, best_t = -1, -1
    if exhaustive:
        source = ((s, hf) for s, hf in _exhaustive_hf(a, d) if start <= s < stop)
    else:
        source = ((s, batch_scaled_f(a, border_batch(seed, s, min(CHUNK, stop - s), h, d)))
                  for s in range(start, stop, CHUNK))
    for s, hf in source:
        _, detk, _ = complete_d_batch(hf, h)
        absdet = np.abs(detk)
        i = int(np.argmax(absdet))
        if int(absdet[i]) > best:
            best, best_t = int(absdet[i]), s + i
    return best, best_t


def best_det_search(A: SignMatrix, d: int, trials: int = 1000, seed: int = 0,
                    exhaustive: bool = False, workers: int = 1) -> SearchResult:
    """Largest |det A~| over sampled borders, with D completed greedily."""
    from .bounds import LogScalar, thm1_dbar_exact
    from .schur import border_from_b, complete_D

    a = _hadamard_array(A)
    h = a.shape[0]
    if exhaustive:
        total = 1 << (h * d)
        if h * d > MAX_EXHAUSTIVE_BITS:
            raise TooLarge(f"2^{h * d} borders is too many to enumerate")
        jobs = [(a, d, seed, 0, total, True)]
    else:
        total = trials
        jobs = [(a, d, seed, s, e, False) for s, e in _shards(trials, workers)]
    parts = _run_shards(_search_shard, jobs, workers)
    best, best_t = max(parts, key=lambda bt: (bt[0], -bt[1]))
    if exhaustive:
        b = border_from_index(best_t, h, d)
    else:
        b = border_batch(seed, best_t, 1, h, d)[0]
    sample = border_from_b(A, SignMatrix.from_array(b))
    corner = complete_D(A, sample)
    det_a = abs(det_exact(a))
    abs_det = Fraction(det_a * best, h ** d)
    assert abs_det.denominator == 1
    n = h + d
    bound = thm1_dbar_exact(h, d)
    ratio = LogScalar.from_int(int(abs_det)).ratio_to_hadamard(n) if abs_det else 0.0
    meets = None
    if bound > 0 and (exhaustive or total >= 1000):
        meets = abs_det >= bound
    return SearchResult(
        h=h, d=d, trials=total, best_abs_det=int(abs_det), best_trial=best_t, ratio=ratio,
        border=sample.B, corner=corner, thm1_bound=bound, meets_thm1=meets,
    )
