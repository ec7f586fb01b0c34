"""Exact first and second moments of the bordered construction.

Everything here is a ``fractions.Fraction``; nothing is converted to floating
point. For a Hadamard order h the diagonal entries g_ii of G = F + I have mean

    mu(h) = 1 + h * C(h, h/2) / 2^h

and variance

    sigma2(h) = 1 + h(h-1)/2^(h+1) * C(h/2, h/4)^2 - h^2/2^(2h) * C(h, h/2)^2,

while off-diagonal entries have mean 0 and variance 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


def binomial(n: int, k: int) -> int:
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _check_order(h: int, allow_small: bool = False) -> None:
    if allow_small and h in (1, 2):
        return
    if h < 4 or h % 4:
        raise ValueError(f"h must be a multiple of 4 with h >= 4, got {h}")


def mu_exact(h: int) -> Fraction:
    """Mean of a diagonal entry of G.

    For h = 1 the binomial C(1, 1/2) is not an integer; we return 2, which is
    what the construction itself produces for the order-1 matrix [1].
    """
    _check_order(h, allow_small=True)
    if h == 1:
        return Fraction(2)
    return 1 + Fraction(h * binomial(h, h // 2), 2 ** h)


def e_fii_sq_exact(h: int) -> Fraction:
    """Second moment E[f_ii^2] of a diagonal entry of F."""
    _check_order(h)
    return 1 + Fraction(h * (h - 1) * binomial(h // 2, h // 4) ** 2, 2 ** (h + 1))


def sigma2_exact(h: int) -> Fraction:
    _check_order(h)
    return (
        1
        + Fraction(h * (h - 1) * binomial(h // 2, h // 4) ** 2, 2 ** (h + 1))
        - Fraction(h * h * binomial(h, h // 2) ** 2, 2 ** (2 * h))
    )


def e_abs_s1s2_bruteforce(k: int) -> Fraction:
    """E|S1 S2| for h = 4k by summing over the counts p, q of each half."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    total = 0
    for p in range(-k, k + 1):
        cp = binomial(2 * k, k + p)
        for q in range(-k, k + 1):
            total += cp * binomial(2 * k, k + q) * abs(p * p - q * q)
    return Fraction(4 * total, 2 ** (4 * k))


def e_abs_s1s2_closed(k: int) -> Fraction:
    h = 4 * k
    return Fraction(h * h * binomial(2 * k, k) ** 2, 2 ** (h + 1))


def e_abs_s1s2(k: int) -> Fraction:
    """E|S1 S2| for h = 4k; the double sum must agree with its closed form."""
    value = e_abs_s1s2_bruteforce(k)
    closed = e_abs_s1s2_closed(k)
    if value != closed:
        raise ArithmeticError(f"double sum {value} != closed form {closed} at k={k}")
    return value


@dataclass(frozen=True)
class MomentSet:
    """Diagonal moments for one order h. Off-diagonal mean 0 and variance 1 are implied."""

    h: int
    mu: Fraction
    sigma2: Fraction
    e_fii_sq: Fraction

    def __post_init__(self):
        _check_order(self.h)
        if self.sigma2 != self.e_fii_sq - (self.mu - 1) ** 2:
            raise ArithmeticError(f"inconsistent moments at h={self.h}")
        if not 0 < self.sigma2 < 1:
            raise ArithmeticError(f"sigma2({self.h}) = {self.sigma2} outside (0, 1)")

    MEAN_OFFDIAG = Fraction(0)
    VAR_OFFDIAG = Fraction(1)


def moments(h: int) -> MomentSet:
    return MomentSet(h=h, mu=mu_exact(h), sigma2=sigma2_exact(h), e_fii_sq=e_fii_sq_exact(h))


def format_fraction(x: Fraction, digits: int = 15) -> str:
    """``p/q`` with a decimal approximation to ``digits`` significant digits."""
    from decimal import Context

    if x.denominator == 1:
        return str(x.numerator)
    ctx = Context(prec=digits + 20)
    dec = ctx.divide(ctx.create_decimal(x.numerator), ctx.create_decimal(x.denominator))
    return f"{x.numerator}/{x.denominator} ~ {dec:.{digits - 1}E}"
