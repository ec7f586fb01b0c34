"""Closed-form lower bounds on the maximal determinant and on R(n).

D(n) denotes the largest |det| of an n x n {+1,-1} matrix and
R(n) = D(n) / n^(n/2). Quantities like h^(h/2) overflow any float long before
n = 1000, so bounds on D(n) are carried as ``LogScalar`` values and only the
ratio R(n) is returned as a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from mpmath import mp, mpf

from .exact_stats import mu_exact
from .hadamard import HadamardError, OrderRegistry, default_registry
from .stirling import Interval, ln_bigint

LOG_DPS = 50
DASH = "–"

TABLE2_NS = (10, 14, 18, 98, 998)


@dataclass(frozen=True)
class LogScalar:
    """sign * exp(ln_mag); ``ln_mag`` is ignored when sign is 0."""

    sign: int
    ln_mag: mpf

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")

    @classmethod
    def zero(cls) -> "LogScalar":
        return cls(0, mpf(0))

    @classmethod
    def from_ln(cls, ln_mag, sign: int = 1) -> "LogScalar":
        with mp.workdps(LOG_DPS):
            return cls(sign, mpf(ln_mag))

    @classmethod
    def from_int(cls, n: int) -> "LogScalar":
        if n == 0:
            return cls.zero()
        with mp.workdps(LOG_DPS):
            return cls(1 if n > 0 else -1, +ln_bigint(abs(n)).mid)

    @classmethod
    def from_fraction(cls, x: Fraction) -> "LogScalar":
        x = Fraction(x)
        if x == 0:
            return cls.zero()
        with mp.workdps(LOG_DPS):
            ln = ln_bigint(abs(x.numerator)).mid - ln_bigint(x.denominator).mid
            return cls(1 if x > 0 else -1, +ln)

    @classmethod
    def from_mpf(cls, x) -> "LogScalar":
        with mp.workdps(LOG_DPS):
            x = mpf(x)
            if x == 0:
                return cls.zero()
            return cls(1 if x > 0 else -1, mp.log(abs(x)))

    @classmethod
    def power(cls, base: int, exponent: Fraction | int) -> "LogScalar":
        """base^exponent for a positive integer base."""
        with mp.workdps(LOG_DPS):
            e = Fraction(exponent)
            return cls(1, ln_bigint(base).mid * e.numerator / e.denominator)

    def __mul__(self, other: "LogScalar") -> "LogScalar":
        if self.sign == 0 or other.sign == 0:
            return LogScalar.zero()
        with mp.workdps(LOG_DPS):
            return LogScalar(self.sign * other.sign, self.ln_mag + other.ln_mag)

    def __truediv__(self, other: "LogScalar") -> "LogScalar":
        if other.sign == 0:
            raise ZeroDivisionError("LogScalar division by zero")
        if self.sign == 0:
            return LogScalar.zero()
        with mp.workdps(LOG_DPS):
            return LogScalar(self.sign * other.sign, self.ln_mag - other.ln_mag)

    def _key(self):
        if self.sign == 0:
            return (0, mpf(0))
        return (self.sign, self.sign * self.ln_mag)

    def __lt__(self, other: "LogScalar") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "LogScalar") -> bool:
        return self._key() <= other._key()

    def __gt__(self, other: "LogScalar") -> bool:
        return self._key() > other._key()

    def __ge__(self, other: "LogScalar") -> bool:
        return self._key() >= other._key()

    @property
    def positive(self) -> bool:
        return self.sign > 0

    def value(self) -> mpf:
        with mp.workdps(LOG_DPS):
            return self.sign * mp.exp(self.ln_mag) if self.sign else mpf(0)

    def log10(self) -> mpf:
        with mp.workdps(LOG_DPS):
            return self.ln_mag / mp.log(10)

    def ratio_to_hadamard(self, n: int) -> float:
        """self / n^(n/2) as a float."""
        if self.sign == 0:
            return 0.0
        with mp.workdps(LOG_DPS):
            return float(self.sign * mp.exp(self.ln_mag - n * mp.log(n) / 2))

    def sci(self, digits: int = 3) -> str:
        """Scientific notation with ``digits`` significant digits."""
        if self.sign == 0:
            return "0"
        with mp.workdps(LOG_DPS):
            l10 = self.ln_mag / mp.log(10)
            exp10 = int(mp.floor(l10))
            mant = mp.power(10, l10 - exp10)
            text = mp.nstr(mant, digits, min_fixed=-1, max_fixed=2)
            if text.startswith("10"):
                exp10 += 1
                text = mp.nstr(mant / 10, digits, min_fixed=-1, max_fixed=2)
            if "." not in text and digits > 1:
                text += "." + "0" * (digits - 1)
            text = text.ljust(digits + 1, "0")
            return f"{'-' if self.sign < 0 else ''}{text}e{exp10:+d}"

    def __repr__(self):
        return f"LogScalar(sign={self.sign}, ln_mag={mp.nstr(self.ln_mag, 20)})"


def hadamard_bound(n: int) -> LogScalar:
    """n^(n/2)."""
    return LogScalar.power(n, Fraction(n, 2))


@dataclass(frozen=True)
class BoundReport:
    n: int
    h: int
    d: int
    method: str
    dbar_bound: LogScalar | None
    r_bound: float
    trivial: bool = False
    error: str | None = None

    def r_text(self, places: int = 4) -> str:
        if self.error:
            return "error"
        if self.trivial:
            return DASH
        return f"{self.r_bound:.{places}f}"

    def dbar_text(self, digits: int = 3) -> str:
        if self.dbar_bound is None:
            return ""
        if self.trivial:
            return DASH
        return self.dbar_bound.sci(digits)


def _report(n: int, h: int, d: int, method: str, dbar: LogScalar) -> BoundReport:
    trivial = dbar.sign <= 0
    return BoundReport(n, h, d, method, dbar, dbar.ratio_to_hadamard(n), trivial)


def _ratio_report(n: int, h: int, d: int, method: str, ln_ratio) -> BoundReport:
    with mp.workdps(LOG_DPS):
        return BoundReport(n, h, d, method, None, float(mp.exp(ln_ratio)))


def _check_thm_args(h: int, d: int) -> None:
    if h < 4 or h % 4:
        raise ValueError(f"h must be a multiple of 4 with h >= 4, got {h}")
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")


def _h_power(h: int) -> int:
    """h^(h/2) as an exact integer for h in {1} or h even."""
    if h == 1:
        return 1
    if h % 2:
        raise ValueError(f"h^(h/2) is irrational for odd h = {h}")
    return h ** (h // 2)


# -- the probabilistic bounds --------------------------------------------------------

def thm1_dbar_exact(h: int, d: int) -> Fraction:
    """h^(h/2) mu^d (1 - d^2/mu), exactly."""
    _check_thm_args(h, d)
    mu = mu_exact(h)
    return _h_power(h) * mu ** (d - 1) * (mu - d * d)


def thm1_dbar(h: int, d: int) -> LogScalar:
    """Lower bound on D(h + d); nonpositive (trivial) when d^2 >= mu."""
    return LogScalar.from_fraction(thm1_dbar_exact(h, d))


def thm1_r_sharp(h: int, d: int) -> float:
    return thm1_dbar(h, d).ratio_to_hadamard(h + d)


def thm1_r_simple(h: int, d: int) -> float:
    """(2/(pi e))^(d/2) (1 - d^2 sqrt(pi/(2h))); positive iff h > pi d^4 / 2."""
    if h < 1 or d < 1:
        raise ValueError("h and d must be positive")
    with mp.workdps(LOG_DPS):
        return float((2 / (mp.pi * mp.e)) ** (mpf(d) / 2) * (1 - d * d * mp.sqrt(mp.pi / (2 * h))))


def thm1_r_simple_positive(h: int, d: int) -> bool | None:
    """Certified sign of the simple Theorem-1 ratio; None if undecided."""
    pi = Interval.pi()
    factor = 1 - d * d * (pi / (2 * h)).sqrt()
    if factor.certainly_gt(0):
        return True
    if factor.certainly_lt(0):
        return False
    return None


def thm2_eta(h: int, d: int):
    if d in (1, 2):
        return mpf(d - 1)
    if d == 3:
        with mp.workdps(LOG_DPS):
            return 5 * mp.sqrt(h) + 3
    raise ValueError(f"Theorem 2 needs 1 <= d <= 3, got {d}")


def thm2_dbar_exact(h: int, d: int) -> Fraction:
    """h^(h/2) (mu^d - (d - 1)) for d in {1, 2}, where the bound is rational."""
    if d not in (1, 2):
        raise ValueError("the Theorem 2 bound is rational only for d <= 2")
    if h not in (1, 2):
        _check_thm_args(h, d)
    return _h_power(h) * (mu_exact(h) ** d - (d - 1))


def thm2_dbar(h: int, d: int) -> LogScalar:
    """h^(h/2) (mu^d - eta) for 1 <= d <= 3."""
    if not 1 <= d <= 3:
        raise ValueError(f"Theorem 2 needs 1 <= d <= 3, got {d}")
    if h not in (1, 2):
        _check_thm_args(h, d)
    mu = mu_exact(h)
    with mp.workdps(LOG_DPS):
        core = mpf(mu.numerator) ** d / mpf(mu.denominator) ** d - thm2_eta(h, d)
        return LogScalar.from_int(_h_power(h)) * LogScalar.from_mpf(core)


def thm2_r(h: int, d: int) -> float:
    return thm2_dbar(h, d).ratio_to_hadamard(h + d)


def thm2_r_const(d: int) -> float:
    if not 1 <= d <= 3:
        raise ValueError(f"d must be in 1..3, got {d}")
    with mp.workdps(LOG_DPS):
        return float((2 / (mp.pi * mp.e)) ** (mpf(d) / 2))


def thm1_report(n: int, h: int, d: int) -> BoundReport:
    return _report(n, h, d, "thm1", thm1_dbar(h, d))


def thm1_simple_report(n: int, h: int, d: int) -> BoundReport:
    r = thm1_r_simple(h, d)
    return BoundReport(n, h, d, "thm1-simple", None, r, trivial=r <= 0)


def thm2_report(n: int, h: int, d: int) -> BoundReport:
    return _report(n, h, d, "thm2", thm2_dbar(h, d))


# -- comparison bounds ----------------------------------------------------------------

def _require(order: int, registry: OrderRegistry | None, what: str) -> None:
    if registry is not None and order not in registry:
        raise HadamardError(f"{what} order {order} is not in the registry")


def kms_bound(n: int, registry: OrderRegistry | None = None) -> BoundReport:
    """Minors-style bound from a Hadamard order just above n, by d = n mod 4.

    d = 2: D(n) >= 2 m^(m/2 - 2) with m = n + 2 (reconstructed form);
    d = 3: D(n) >= (n + 1)^((n - 1)/2);
    d = 1: ratio only, the asymptotic 4 (e/n)^(3/2).
    """
    d = n % 4
    h = n - d
    if d == 2:
        m = n + 2
        _require(m, registry, "KMS neighbour")
        dbar = LogScalar.from_int(2) * LogScalar.power(m, Fraction(m, 2) - 2)
        return _report(n, h, d, "kms-reconstructed", dbar)
    if d == 3:
        _require(n + 1, registry, "KMS neighbour")
        return _report(n, h, d, "kms", LogScalar.power(n + 1, Fraction(n - 1, 2)))
    if d == 1:
        with mp.workdps(LOG_DPS):
            return _ratio_report(n, h, d, "kms-asymptotic", mp.log(4) + mpf(3) / 2 * (1 - mp.log(n)))
    raise ValueError(f"n = {n} is a multiple of 4; no KMS bound applies")


def bo_bound(n: int, h: int, variant: str | None = None) -> BoundReport:
    """Deterministic bordering bound.

    ``variant="bordering"`` gives D(n) >= 2^d h^(h/2). ``variant="asymptotic"``
    gives the large-n ratio: (2/(pi e))^(1/2), (8/(pi e^2 n))^(1/2) and
    (e/n)^(1/2) for d = 1, 2, 3. The default is asymptotic for d <= 3.
    """
    d = n - h
    if d < 0:
        raise ValueError("h must not exceed n")
    if variant is None:
        variant = "asymptotic" if 1 <= d <= 3 else "bordering"
    if variant == "bordering":
        dbar = LogScalar.from_int(2 ** d) * LogScalar.from_int(_h_power(h))
        return _report(n, h, d, "bo-bordering", dbar)
    if variant != "asymptotic":
        raise ValueError(f"unknown variant {variant!r}")
    with mp.workdps(LOG_DPS):
        if d == 1:
            ln = (mp.log(2) - mp.log(mp.pi) - 1) / 2
        elif d == 2:
            ln = (mp.log(8) - mp.log(mp.pi) - 2 - mp.log(n)) / 2
        elif d == 3:
            ln = (1 - mp.log(n)) / 2
        else:
            raise ValueError(f"no asymptotic form for d = {d}")
        return _ratio_report(n, h, d, "bo-asymptotic", ln)


def minors_bound(n: int, h_plus: int, registry: OrderRegistry | None = None) -> BoundReport:
    """D(n) >= 16 h+^(h+/2 - 4) from a Hadamard order h+ >= n."""
    if h_plus < n:
        raise ValueError("h_plus must be at least n")
    _require(h_plus, registry, "minors")
    dbar = LogScalar.from_int(16) * LogScalar.power(h_plus, Fraction(h_plus, 2) - 4)
    h, d = (registry or default_registry()).resolve_gap(n)
    return _report(n, h, d, "minors", dbar)


def classic_bounds(n: int, h: int, d: int) -> list[BoundReport]:
    """Clements-Lindstrom (3/4)^(n/2) and the gap bound (n e / 4)^(-d/2)."""
    with mp.workdps(LOG_DPS):
        cl = mpf(n) / 2 * mp.log(mpf(3) / 4)
        gap = -mpf(d) / 2 * (mp.log(n) + 1 - mp.log(4))
    return [
        _ratio_report(n, h, d, "clements-lindstrom", cl),
        _ratio_report(n, h, d, "gap-power", gap),
    ]


def conjectured_target(d: int) -> float:
    with mp.workdps(LOG_DPS):
        return float((mp.pi * mp.e / 2) ** (-mpf(d) / 2))


# -- supporting inequalities ----------------------------------------------------------------

def hn_inequality_check(h: int, d: int) -> bool:
    """Certified check of (h/n)^n > exp(-d - d^2/h) with n = h + d."""
    if h < 1 or d < 1:
        raise ValueError("h and d must be positive")
    n = h + d
    lhs = n * (ln_bigint(h) - ln_bigint(n))
    return lhs.certainly_gt(Fraction(-d) - Fraction(d * d, h))


def scan_hn_inequality(h_max: int = 2000, d_max: int = 10, h_min: int = 4) -> list[tuple[int, int]]:
    return [(h, d) for h in range(h_min, h_max + 1) for d in range(1, d_max + 1) if not hn_inequality_check(h, d)]


def scan_thm1_positivity(h_max: int = 2000, d_max: int = 10, h_min: int = 4) -> list[tuple[int, int]]:
    """(h, d) pairs where positivity of the simple ratio disagrees with h > pi d^4 / 2."""
    pi = Interval.pi()
    bad = []
    for d in range(1, d_max + 1):
        threshold = pi * d ** 4 / 2
        for h in range(h_min, h_max + 1):
            pos = thm1_r_simple_positive(h, d)
            above = True if threshold.certainly_lt(h) else False if threshold.certainly_gt(h) else None
            if pos is None or above is None or pos != above or (thm1_r_simple(h, d) > 0) != pos:
                bad.append((h, d))
    return bad


def kms_d3_crossover(n: int) -> bool:
    """True iff h^(h/2)(mu^3 - eta) beats (n+1)^((n-1)/2) at d = 3, h = n - 3."""
    if n % 4 != 3:
        raise ValueError("crossover compares orders n = 3 mod 4")
    return thm2_dbar(n - 3, 3) > LogScalar.power(n + 1, Fraction(n - 1, 2))


# -- tables ----------------------------------------------------------------

METHODS = ("kms", "bo", "thm1", "thm2", "thm1-simple", "bo-bordering", "minors", "classic")


def bounds_for(n: int, methods: Sequence[str] = ("kms", "bo", "thm1", "thm2"),
               registry: OrderRegistry | None = None) -> list[BoundReport]:
    """Every requested bound for one n; failures become error reports."""
    registry = registry or default_registry()
    h, d = registry.resolve_gap(n)
    out = []
    for method in methods:
        try:
            if method == "kms":
                out.append(kms_bound(n, registry))
            elif method == "bo":
                out.append(bo_bound(n, h))
            elif method == "bo-bordering":
                out.append(bo_bound(n, h, "bordering"))
            elif method == "thm1":
                out.append(thm1_report(n, h, d))
            elif method == "thm1-simple":
                out.append(thm1_simple_report(n, h, d))
            elif method == "thm2":
                out.append(thm2_report(n, h, d))
            elif method == "minors":
                h_plus = next(o for o in registry.known_orders if o >= n)
                out.append(minors_bound(n, h_plus, registry))
            elif method == "classic":
                out.extend(classic_bounds(n, h, d))
            else:
                raise ValueError(f"unknown method {method!r}")
        except (ValueError, StopIteration) as exc:
            out.append(BoundReport(n, h, d, method, None, math.nan, error=str(exc) or type(exc).__name__))
    return out


def bound_table(n_list: Iterable[int], methods: Sequence[str] = ("kms", "bo", "thm1", "thm2"),
                registry: OrderRegistry | None = None) -> list[BoundReport]:
    registry = registry or default_registry()
    return [r for n in n_list for r in bounds_for(n, methods, registry)]


@dataclass(frozen=True)
class Table2Row:
    n: str
    kms: BoundReport | float
    bo: BoundReport | float
    thm1: BoundReport | float
    thm2: BoundReport | float

    def cells(self, places: int = 4) -> list[str]:
        def fmt(x):
            return x.r_text(places) if isinstance(x, BoundReport) else f"{x:.{places}f}"

        return [self.n, fmt(self.kms), fmt(self.bo), fmt(self.thm1), fmt(self.thm2)]


TABLE2_HEADER = ("n", "KMS", "B&O", "Thm1", "Thm2")


def table2(registry: OrderRegistry | None = None) -> list[Table2Row]:
    """Lower bounds on R(n) for d = 2, plus the n -> infinity row."""
    registry = registry or default_registry()
    rows = []
    for n in TABLE2_NS:
        h, d = registry.resolve_gap(n)
        rows.append(Table2Row(str(n), kms_bound(n, registry), bo_bound(n, h),
                              thm1_report(n, h, d), thm2_report(n, h, d)))
    limit = thm2_r_const(2)
    rows.append(Table2Row("limit", 0.0, 0.0, limit, limit))
    return rows


def table1_constants() -> dict[str, tuple[float, int]]:
    """Asymptotic constants and the number of decimals they are published to."""
    with mp.workdps(LOG_DPS):
        e, pi = mp.e, mp.pi
        return {
            "(2/(pi e))^(1/2)": (float(mp.sqrt(2 / (pi * e))), 4),
            "2/(pi e)": (float(2 / (pi * e)), 4),
            "(2/(pi e))^(3/2)": (float((2 / (pi * e)) ** 1.5), 4),
            "4 e^(3/2)": (float(4 * e ** 1.5), 2),
            "2 e": (float(2 * e), 3),
            "(8/(pi e^2))^(1/2)": (float(mp.sqrt(8 / (pi * e * e))), 4),
            "e^(1/2)": (float(mp.sqrt(e)), 3),
        }


def table1() -> list[tuple[str, str, str, str]]:
    """Rows (d, KMS, B&O, Thm2) of the asymptotic comparison."""
    c = {k: f"{v:.{p}f}" for k, (v, p) in table1_constants().items()}
    return [
        ("1", f"{c['4 e^(3/2)']}/n^(3/2)", c["(2/(pi e))^(1/2)"], c["(2/(pi e))^(1/2)"]),
        ("2", f"{c['2 e']}/n", f"{c['(8/(pi e^2))^(1/2)']}/n^(1/2)", c["2/(pi e)"]),
        ("3", f"{c['e^(1/2)']}/n^(1/2)", f"{c['e^(1/2)']}/n^(1/2)", c["(2/(pi e))^(3/2)"]),
    ]


@dataclass(frozen=True)
class WorkedExample:
    n: int
    h: int
    h_plus: int
    bordering: BoundReport
    minors: BoundReport
    thm1: BoundReport
    target: float

    def values(self) -> dict[str, float]:
        return {
            "bordering": self.bordering.r_bound,
            "minors": self.minors.r_bound,
            "thm1": self.thm1.r_bound,
            "conjectured": self.target,
        }


def example668(registry: OrderRegistry | None = None) -> WorkedExample:
    registry = registry or default_registry()
    n = 668
    h, d = registry.resolve_gap(n)
    h_plus = next(o for o in registry.known_orders if o >= n)
    return WorkedExample(
        n=n, h=h, h_plus=h_plus,
        bordering=bo_bound(n, h, "bordering"),
        minors=minors_bound(n, h_plus, registry),
        thm1=thm1_report(n, h, d),
        target=conjectured_target(d),
    )


def sig3(x: float, digits: int = 3) -> str:
    return f"{x:.{digits - 1}e}"


def truncate_sig(x: float, digits: int = 3) -> float:
    """x truncated (toward zero) to ``digits`` significant digits."""
    if x == 0:
        return 0.0
    e = math.floor(math.log10(abs(x))) - digits + 1
    scaled = Fraction(x) / Fraction(10) ** e
    return float(math.trunc(scaled) * Fraction(10) ** e)
