"""Certified enclosures of ln C(2m, m) and of the mean mu(h).

Interval endpoints are mpmath floats; every operation goes through
``mpmath.iv`` at ``WORK_DPS`` decimal digits, so results are rounded outward
and always contain the exact real value.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Union

from mpmath import iv, mp, mpf

from .exact_stats import mu_exact, sigma2_exact

WORK_DPS = 100
# leading bits kept when taking the logarithm of a huge integer
BIGLOG_BITS = 320
MAX_BERNOULLI_INDEX = 40
MAX_TERMS = 10
DEFAULT_TERMS = 3

Number = Union[int, Fraction, "Interval"]


@contextmanager
def _working_precision(dps: int = WORK_DPS):
    saved = iv.prec
    iv.dps = dps
    try:
        yield
    finally:
        iv.prec = saved


def _to_fraction(x: mpf) -> Fraction:
    sign, man, exp, _ = x._mpf_
    if not man and exp:
        raise ValueError(f"non-finite endpoint {x}")
    man = -int(man) if sign else int(man)
    return Fraction(man * 2 ** exp) if exp >= 0 else Fraction(man, 2 ** -exp)


def _iv(x: Number):
    if isinstance(x, Interval):
        return iv.mpf([x.lo, x.hi])
    if isinstance(x, Fraction):
        return iv.mpf(x.numerator) / x.denominator
    if isinstance(x, int):
        return iv.mpf(x)
    raise TypeError(f"cannot make an interval from {type(x).__name__}")


def _wrap(v) -> "Interval":
    return Interval(mp.make_mpf(v._mpi_[0]), mp.make_mpf(v._mpi_[1]))


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] of reals."""

    lo: mpf
    hi: mpf

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: int | Fraction) -> "Interval":
        with _working_precision():
            return _wrap(_iv(x))

    @classmethod
    def pi(cls) -> "Interval":
        with _working_precision():
            return _wrap(iv.pi)

    def _binary(self, other: Number, op) -> "Interval":
        with _working_precision():
            return _wrap(op(_iv(self), _iv(other)))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def _unary(self, fn) -> "Interval":
        with _working_precision():
            return _wrap(fn(_iv(self)))

    def exp(self) -> "Interval":
        return self._unary(iv.exp)

    def log(self) -> "Interval":
        if self.lo <= 0:
            raise ValueError("log of an interval reaching zero or below")
        return self._unary(iv.log)

    def sqrt(self) -> "Interval":
        if self.lo < 0:
            raise ValueError("sqrt of an interval reaching below zero")
        return self._unary(iv.sqrt)

    @property
    def width(self) -> mpf:
        with mp.workdps(WORK_DPS):
            return self.hi - self.lo

    @property
    def mid(self) -> mpf:
        with mp.workdps(WORK_DPS):
            return (self.lo + self.hi) / 2

    def contains(self, x: int | Fraction | "Interval") -> bool:
        """Exact containment test; an Interval argument must lie entirely inside."""
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        x = Fraction(x)
        return _to_fraction(self.lo) <= x <= _to_fraction(self.hi)

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def certainly_lt(self, other: Number) -> bool:
        other = other if isinstance(other, Interval) else Interval.point(other)
        return _to_fraction(self.hi) < _to_fraction(other.lo)

    def certainly_gt(self, other: Number) -> bool:
        other = other if isinstance(other, Interval) else Interval.point(other)
        return _to_fraction(self.lo) > _to_fraction(other.hi)

    def __repr__(self):
        return f"Interval({mp.nstr(self.lo, 20)}, {mp.nstr(self.hi, 20)})"


def _bernoulli_table(limit: int) -> tuple[Fraction, ...]:
    b = [Fraction(1)]
    for m in range(1, limit + 1):
        b.append(-sum(math.comb(m + 1, k) * b[k] for k in range(m)) / (m + 1))
    return tuple(b)


_BERNOULLI = _bernoulli_table(MAX_BERNOULLI_INDEX)


def bernoulli(two_j: int) -> Fraction:
    """Exact Bernoulli number B_{2j} (convention B_1 = -1/2 is never exposed)."""
    if two_j < 0 or two_j % 2 or two_j > MAX_BERNOULLI_INDEX:
        raise ValueError(f"index must be even and in [0, {MAX_BERNOULLI_INDEX}], got {two_j}")
    return _BERNOULLI[two_j]


def ln_bigint(n: int, bits: int = BIGLOG_BITS) -> Interval:
    """Certified enclosure of ln(n) for a positive integer of any size.

    n is split as top * 2^s + rest with ``top`` holding the leading ``bits``
    bits, so ln n lies in [ln top, ln(top + 1)] + s ln 2.
    """
    if n < 1:
        raise ValueError("ln_bigint needs a positive integer")
    with _working_precision():
        shift = max(n.bit_length() - bits, 0)
        top = n >> shift
        if shift == 0:
            return _wrap(iv.log(iv.mpf(n)))
        base = shift * iv.log(iv.mpf(2))
        lo = iv.log(iv.mpf(top)) + base
        hi = lo if top << shift == n else iv.log(iv.mpf(top + 1)) + base
        return Interval(mp.make_mpf(lo._mpi_[0]), mp.make_mpf(hi._mpi_[1]))


def ln_fraction(x: Fraction) -> Interval:
    if x <= 0:
        raise ValueError("ln_fraction needs a positive rational")
    return ln_bigint(x.numerator) - ln_bigint(x.denominator)


def stirling_coefficient(j: int) -> Fraction:
    """Coefficient of m^(1-2j) in the expansion of ln C(2m, m)."""
    return bernoulli(2 * j) * (1 - Fraction(1, 4 ** j)) / (j * (2 * j - 1))


def stirling_error_bound(m: int, k: int) -> Fraction:
    return abs(bernoulli(2 * k)) / (k * (2 * k - 1)) * Fraction(1, m ** (2 * k - 1))


def ln_central_binomial(m: int, k: int = DEFAULT_TERMS) -> Interval:
    """Enclosure of ln C(2m, m) from k-1 correction terms plus the error bound."""
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    if not 1 <= k <= MAX_TERMS:
        raise ValueError(f"k must be in [1, {MAX_TERMS}], got {k}")
    series = sum((stirling_coefficient(j) * Fraction(1, m ** (2 * j - 1)) for j in range(1, k)), Fraction(0))
    err = stirling_error_bound(m, k)
    with _working_precision():
        ln4 = iv.log(iv.mpf(4))
        head = m * ln4 - iv.log(iv.pi * m) / 2
        s = head - _iv(series)
        lo, hi = s - _iv(err), s + _iv(err)
        return Interval(mp.make_mpf(lo._mpi_[0]), mp.make_mpf(hi._mpi_[1]))


def mu_interval(h: int, k: int = DEFAULT_TERMS) -> Interval:
    if h < 4 or h % 4:
        raise ValueError(f"h must be a multiple of 4 with h >= 4, got {h}")
    lcb = ln_central_binomial(h // 2, k)
    with _working_precision():
        v = 1 + iv.exp(iv.log(iv.mpf(h)) - h * iv.log(iv.mpf(2)) + _iv(lcb))
        return _wrap(v)


@dataclass(frozen=True)
class ContainmentRow:
    m: int
    k: int
    lo: mpf
    exact: Interval
    hi: mpf
    passed: bool


def containment_rows(m_max: int, k_values: Iterator[int] | range = range(1, 6)) -> list[ContainmentRow]:
    rows = []
    for k in k_values:
        for m in range(1, m_max + 1):
            approx = ln_central_binomial(m, k)
            exact = ln_bigint(math.comb(2 * m, m))
            rows.append(ContainmentRow(m, k, approx.lo, exact, approx.hi, approx.contains(exact)))
    return rows


@dataclass
class InequalityReport:
    h_max: int
    checked: int = 0
    mu_failures: list[int] = field(default_factory=list)
    sigma_failures: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mu_failures and not self.sigma_failures

    @property
    def first_violation(self) -> int | None:
        bad = self.mu_failures + self.sigma_failures
        return min(bad) if bad else None


def check_mu_sigma_inequalities(h_max: int) -> InequalityReport:
    """Check sqrt(2h/pi) + 0.9 < mu(h) < sqrt(2h/pi) + 1 and 0 < sigma2(h) < 1."""
    if h_max < 4:
        raise ValueError("h_max must be at least 4")
    report = InequalityReport(h_max)
    pi = Interval.pi()
    for h in range(4, h_max + 1, 4):
        root = (2 * h / pi).sqrt()
        mu = mu_exact(h)
        if not ((root + Fraction(9, 10)).certainly_lt(mu) and (root + 1).certainly_gt(mu)):
            report.mu_failures.append(h)
        if not 0 < sigma2_exact(h) < 1:
            report.sigma_failures.append(h)
        report.checked += 1
    return report
