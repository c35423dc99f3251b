"""Ordering of positive quantities of the form ``w * x**r``.

Stopping rules for antichains compare products such as ``p_σ s_σ^r`` against
powers of a threshold.  For a rational exponent ``r = a/b`` both sides are
raised to the ``b``-th power, which turns the comparison into one between
exact rationals.  Any other exponent is compared in the log domain with
mpmath, and results closer than the guard band are counted as boundary hits.
"""

import logging
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable, Union

import mpmath

Exponent = Union[Fraction, float]

EXACT_DENOMINATOR_LIMIT = 64
DEFAULT_GUARD_BAND = 1e-15
GUARD_PRECISION_DIGITS = 40

logger = logging.getLogger(__name__)


def normalize_exponent(r: Union[Real, Fraction]) -> Exponent:
    """Return ``r`` as a Fraction when it is a small-denominator rational, else as a float"""
    if isinstance(r, bool):
        raise TypeError("Exponent cannot be a boolean")
    if isinstance(r, int):
        r = Fraction(r)
    if isinstance(r, Fraction):
        if r <= 0:
            raise ValueError(f"Exponent must be positive, got {r}")
        if r.denominator <= EXACT_DENOMINATOR_LIMIT:
            return r
        return float(r)

    value = float(r)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"Exponent must be a positive finite number, got {r}")
    exact = Fraction(value)
    small = exact.limit_denominator(EXACT_DENOMINATOR_LIMIT)
    if small == exact:
        return small
    return value


def is_exact_exponent(r: Exponent) -> bool:
    return isinstance(r, Fraction)


def log_fraction(q: Fraction) -> float:
    """Natural log of a positive rational without going through a float"""
    if q <= 0:
        raise ValueError(f"Logarithm of non-positive value {q}")
    return math.log(q.numerator) - math.log(q.denominator)


@dataclass(frozen=True)
class PowerTerm:
    """The quantity ``weight * base**r`` for an exponent supplied at evaluation time"""
    weight: Fraction
    base: Fraction

    def __post_init__(self) -> None:
        if self.weight <= 0 or self.base <= 0:
            raise ValueError(f"PowerTerm needs positive weight and base, got {self.weight}, {self.base}")

    @classmethod
    def unit(cls) -> 'PowerTerm':
        return cls(Fraction(1), Fraction(1))

    def __mul__(self, other: 'PowerTerm') -> 'PowerTerm':
        return PowerTerm(self.weight * other.weight, self.base * other.base)

    def __pow__(self, k: int) -> 'PowerTerm':
        if k < 0:
            raise ValueError("PowerTerm powers must be non-negative")
        return PowerTerm(self.weight ** k, self.base ** k)

    def log_value(self, r: Exponent) -> float:
        return log_fraction(self.weight) + float(r) * log_fraction(self.base)

    def value(self, r: Exponent) -> Union[Fraction, float]:
        """Exact value for integer ``r``, float otherwise"""
        if isinstance(r, Fraction) and r.denominator == 1:
            return self.weight * self.base ** r.numerator
        return math.exp(self.log_value(r))

    def powered(self, r: Exponent, exponent: float) -> float:
        """``(weight * base**r) ** exponent`` evaluated through logs"""
        return math.exp(exponent * self.log_value(r))


class PowerComparator:
    """Compares PowerTerms for one fixed exponent"""

    def __init__(self, r: Union[Real, Fraction], guard_band: float = DEFAULT_GUARD_BAND):
        self.r = normalize_exponent(r)
        self.guard_band = guard_band
        self._lock = threading.Lock()
        self._boundary_hits = 0

    @property
    def exact(self) -> bool:
        return is_exact_exponent(self.r)

    @property
    def boundary_hits(self) -> int:
        with self._lock:
            return self._boundary_hits

    def compare(self, a: PowerTerm, b: PowerTerm) -> int:
        """Return -1, 0 or 1 as ``a`` is below, equal to or above ``b``"""
        if isinstance(self.r, Fraction):
            p, q = self.r.numerator, self.r.denominator
            left = a.weight ** q * a.base ** p
            right = b.weight ** q * b.base ** p
            return (left > right) - (left < right)
        return self._compare_guarded(a, b)

    def _compare_guarded(self, a: PowerTerm, b: PowerTerm) -> int:
        with mpmath.workdps(GUARD_PRECISION_DIGITS):
            r = mpmath.mpf(self.r)
            diff = self._mp_log(a, r) - self._mp_log(b, r)
            if abs(diff) <= self.guard_band:
                with self._lock:
                    self._boundary_hits += 1
                logger.warning(f"Comparison inside guard band: log difference {float(diff):.3e}")
            if diff > 0:
                return 1
            if diff < 0:
                return -1
            return 0

    @staticmethod
    def _mp_log(term: PowerTerm, r: 'mpmath.mpf') -> 'mpmath.mpf':
        weight = mpmath.log(term.weight.numerator) - mpmath.log(term.weight.denominator)
        base = mpmath.log(term.base.numerator) - mpmath.log(term.base.denominator)
        return weight + r * base

    def at_least(self, a: PowerTerm, b: PowerTerm) -> bool:
        return self.compare(a, b) >= 0

    def below(self, a: PowerTerm, b: PowerTerm) -> bool:
        return self.compare(a, b) < 0

    def minimum(self, terms: Iterable[PowerTerm]) -> PowerTerm:
        best = None
        for term in terms:
            if best is None or self.compare(term, best) < 0:
                best = term
        if best is None:
            raise ValueError("minimum of an empty collection")
        return best

    def maximum(self, terms: Iterable[PowerTerm]) -> PowerTerm:
        best = None
        for term in terms:
            if best is None or self.compare(term, best) > 0:
                best = term
        if best is None:
            raise ValueError("maximum of an empty collection")
        return best
