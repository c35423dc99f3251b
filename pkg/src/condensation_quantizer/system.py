"""Exact one-dimensional similitudes, condensation systems and the IOSC check."""

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import BudgetExceededError, DegenerateSystemError, InvalidSystemError
from .words import Word, WeightSystem

logger = logging.getLogger(__name__)

DEFAULT_REFINE_DEPTH = 12
MAX_REFINE_NODES = 1_000_000

RationalLike = Union[int, str, Fraction]

_RATIONAL_PATTERN = re.compile(r'^\s*[+-]?\d+\s*(/\s*\d+\s*)?$')


def parse_rational(value: Any) -> Fraction:
    """Parse an integer or an "a/b" string exactly; decimals are rejected"""
    if isinstance(value, bool):
        raise InvalidSystemError(f"Not a rational number: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str) and _RATIONAL_PATTERN.match(value):
        try:
            return Fraction(value.replace(' ', ''))
        except ZeroDivisionError:
            raise InvalidSystemError(f"Zero denominator in {value!r}")
    raise InvalidSystemError(f"Expected an integer or 'a/b' string, got {value!r} (decimal literals are rejected)")


def format_rational(value: Fraction) -> str:
    return str(value)


@dataclass(frozen=True)
class Interval:
    """Interval with rational endpoints, lo < hi, each end open or closed"""
    lo: Fraction
    hi: Fraction
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, 'lo', Fraction(self.lo))
        object.__setattr__(self, 'hi', Fraction(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"Interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def closed(cls, lo: RationalLike, hi: RationalLike) -> 'Interval':
        return cls(Fraction(lo), Fraction(hi))

    @classmethod
    def open(cls, lo: RationalLike, hi: RationalLike) -> 'Interval':
        return cls(Fraction(lo), Fraction(hi), True, True)

    def __str__(self) -> str:
        left = '(' if self.lo_open else '['
        right = ')' if self.hi_open else ']'
        return f"{left}{self.lo}, {self.hi}{right}"

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def closure(self) -> 'Interval':
        return Interval(self.lo, self.hi)

    def interior(self) -> 'Interval':
        return Interval(self.lo, self.hi, True, True)

    def contains_point(self, x: Fraction) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and self.lo_open:
            return False
        if x == self.hi and self.hi_open:
            return False
        return True

    def contains(self, other: 'Interval') -> bool:
        """other ⊆ self, honouring open ends"""
        if other.lo < self.lo or (other.lo == self.lo and self.lo_open and not other.lo_open):
            return False
        if other.hi > self.hi or (other.hi == self.hi and self.hi_open and not other.hi_open):
            return False
        return True

    def intersection(self, other: 'Interval') -> Optional['Interval']:
        if self.lo > other.lo or (self.lo == other.lo and self.lo_open):
            lo, lo_open = self.lo, self.lo_open
        else:
            lo, lo_open = other.lo, other.lo_open
        if self.hi < other.hi or (self.hi == other.hi and self.hi_open):
            hi, hi_open = self.hi, self.hi_open
        else:
            hi, hi_open = other.hi, other.hi_open
        if lo < hi:
            return Interval(lo, hi, lo_open, hi_open)
        return None

    def intersects(self, other: 'Interval') -> bool:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo < hi:
            return True
        if lo > hi:
            return False
        return self.contains_point(lo) and other.contains_point(lo)

    def distance(self, other: 'Interval') -> Fraction:
        """Gap between the two intervals, zero when they overlap or touch"""
        return max(Fraction(0), other.lo - self.hi, self.lo - other.hi)

    def distance_to_complement(self, inner: 'Interval') -> Fraction:
        """d(inner, ℝ \\ self); zero unless inner sits inside self"""
        if not self.contains(inner):
            return Fraction(0)
        return min(inner.lo - self.lo, self.hi - inner.hi)

    def neighborhood(self, radius: Fraction) -> 'Interval':
        return Interval(self.lo - radius, self.hi + radius, True, True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lo': format_rational(self.lo),
            'hi': format_rational(self.hi),
            'lo_open': self.lo_open,
            'hi_open': self.hi_open
        }


@dataclass(frozen=True)
class Similitude1D:
    """x ↦ scale·x + offset with 0 < |scale| < 1 (the identity is the one exception)"""
    scale: Fraction
    offset: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        scale = Fraction(self.scale)
        offset = Fraction(self.offset)
        object.__setattr__(self, 'scale', scale)
        object.__setattr__(self, 'offset', offset)
        if scale == 0:
            raise ValueError("Similitude scale cannot be zero")
        if abs(scale) >= 1 and not (scale == 1 and offset == 0):
            raise ValueError(f"Similitude is not contractive: scale {scale}")

    @classmethod
    def identity(cls) -> 'Similitude1D':
        return cls(Fraction(1), Fraction(0))

    @property
    def ratio(self) -> Fraction:
        return abs(self.scale)

    def apply(self, x: RationalLike) -> Fraction:
        return self.scale * Fraction(x) + self.offset

    def compose(self, inner: 'Similitude1D') -> 'Similitude1D':
        """self ∘ inner"""
        return Similitude1D(self.scale * inner.scale, self.scale * inner.offset + self.offset)

    def image(self, interval: Interval) -> Interval:
        a = self.apply(interval.lo)
        b = self.apply(interval.hi)
        if self.scale > 0:
            return Interval(a, b, interval.lo_open, interval.hi_open)
        return Interval(b, a, interval.hi_open, interval.lo_open)

    def to_dict(self) -> Dict[str, str]:
        return {'scale': format_rational(self.scale), 'offset': format_rational(self.offset)}


def compose(maps: Sequence[Similitude1D], sigma: Word) -> Similitude1D:
    """f_σ = f_{σ_1} ∘ … ∘ f_{σ_n}; the identity for θ"""
    if sigma.alphabet_size != len(maps):
        raise ValueError(f"Word over {sigma.alphabet_size} letters used with {len(maps)} maps")
    result = Similitude1D.identity()
    for letter in sigma.letters:
        result = result.compose(maps[letter - 1])
    return result


def apply_word(maps: Sequence[Similitude1D], sigma: Word, x: RationalLike) -> Fraction:
    return compose(maps, sigma).apply(x)


#
# Attractor hulls
#

def _hull_step(maps: Sequence[Similitude1D], anchor: Optional[Interval],
               lo: Fraction, hi: Fraction) -> Tuple[Fraction, Fraction]:
    lows: List[Fraction] = []
    highs: List[Fraction] = []
    for f in maps:
        a, b = f.apply(lo), f.apply(hi)
        lows.append(min(a, b))
        highs.append(max(a, b))
    if anchor is not None:
        lows.append(anchor.lo)
        highs.append(anchor.hi)
    return min(lows), max(highs)


def _endpoint_equation(maps: Sequence[Similitude1D], anchor: Optional[Interval],
                       choice: int, upper: bool) -> Tuple[Fraction, Fraction]:
    """Equation endpoint = α·(other endpoint) + β for the map (or anchor) attaining it"""
    if choice == len(maps):
        assert anchor is not None
        return Fraction(0), anchor.hi if upper else anchor.lo
    f = maps[choice]
    if f.scale > 0:
        return Fraction(0), f.offset / (1 - f.scale)
    return f.scale, f.offset


def attractor_hull(maps: Sequence[Similitude1D], anchor: Optional[Interval] = None) -> Interval:
    """Smallest closed interval I with hull(anchor ∪ ⋃ f_i(I)) = I.

    The endpoints of the fixed interval are each attained by one map (or by
    the anchor), so every choice of attaining pair gives a 2×2 linear system.
    The unique solution that reproduces itself under one exact hull step is
    the hull.
    """
    if not maps:
        raise ValueError("attractor_hull needs at least one map")
    for f in maps:
        if f.ratio >= 1:
            raise ValueError(f"Map {f} is not contractive")

    options = len(maps) + (1 if anchor is not None else 0)
    for lo_choice in range(options):
        alpha, beta = _endpoint_equation(maps, anchor, lo_choice, upper=False)
        for hi_choice in range(options):
            gamma, delta = _endpoint_equation(maps, anchor, hi_choice, upper=True)
            lo = (alpha * delta + beta) / (1 - alpha * gamma)
            hi = gamma * lo + delta
            if lo > hi:
                continue
            if _hull_step(maps, anchor, lo, hi) == (lo, hi):
                if lo == hi:
                    raise DegenerateSystemError(f"Attractor is the single point {lo}")
                return Interval(lo, hi)
    raise AssertionError("no self-consistent hull found")


#
# Condensation systems
#

@dataclass(frozen=True)
class CondensationSystem:
    """Outer IFS (f_i, p_i) with p_0, inner IFS (g_j, t_j) and the open set U"""
    outer: Tuple[Similitude1D, ...]
    outer_probs: Tuple[Fraction, ...]
    inner: Tuple[Similitude1D, ...]
    inner_probs: Tuple[Fraction, ...]
    open_set: Interval

    def __post_init__(self) -> None:
        object.__setattr__(self, 'outer', tuple(self.outer))
        object.__setattr__(self, 'inner', tuple(self.inner))
        object.__setattr__(self, 'outer_probs', tuple(Fraction(p) for p in self.outer_probs))
        object.__setattr__(self, 'inner_probs', tuple(Fraction(t) for t in self.inner_probs))

        if not self.outer:
            raise InvalidSystemError("At least one outer map is required")
        if not self.inner:
            raise InvalidSystemError("At least one inner map is required")
        if len(self.outer_probs) != len(self.outer) + 1:
            raise InvalidSystemError(
                f"Expected {len(self.outer) + 1} outer probabilities (p_0 first), got {len(self.outer_probs)}")
        if len(self.inner_probs) != len(self.inner):
            raise InvalidSystemError(
                f"Expected {len(self.inner)} inner probabilities, got {len(self.inner_probs)}")
        if any(p <= 0 for p in self.outer_probs) or sum(self.outer_probs) != 1:
            raise InvalidSystemError(f"Outer probabilities must be positive and sum to 1: {self.outer_probs}")
        if any(t <= 0 for t in self.inner_probs) or sum(self.inner_probs) != 1:
            raise InvalidSystemError(f"Inner probabilities must be positive and sum to 1: {self.inner_probs}")
        if not (self.open_set.lo_open and self.open_set.hi_open):
            raise InvalidSystemError(f"The set U must be open, got {self.open_set}")

    @property
    def p0(self) -> Fraction:
        return self.outer_probs[0]

    @property
    def outer_size(self) -> int:
        """N"""
        return len(self.outer)

    @property
    def inner_size(self) -> int:
        """M"""
        return len(self.inner)

    @cached_property
    def outer_weights(self) -> WeightSystem:
        return WeightSystem(self.outer_probs[1:], tuple(f.ratio for f in self.outer))

    @cached_property
    def inner_weights(self) -> WeightSystem:
        return WeightSystem(self.inner_probs, tuple(g.ratio for g in self.inner))

    @cached_property
    def outer_hull(self) -> Interval:
        """hull(E)"""
        return attractor_hull(self.outer)

    @cached_property
    def inner_hull(self) -> Interval:
        """hull(C)"""
        return attractor_hull(self.inner)

    @cached_property
    def hull(self) -> Interval:
        """hull(K), K = C ∪ ⋃ f_i(K)"""
        return attractor_hull(self.outer, anchor=self.inner_hull)

    @cached_property
    def iosc_report(self) -> 'IoscReport':
        return check_iosc(self)

    def require_valid(self) -> None:
        report = self.iosc_report
        if not report.passed:
            failed = ", ".join(v.name for v in report.failures())
            raise InvalidSystemError(f"System fails the IOSC check ({failed})")

    def outer_word(self, *letters: int) -> Word:
        return Word(self.outer_size, letters)

    def inner_word(self, *letters: int) -> Word:
        return Word(self.inner_size, letters)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'outer_maps': [f.to_dict() for f in self.outer],
            'outer_probs': [format_rational(p) for p in self.outer_probs],
            'inner_maps': [g.to_dict() for g in self.inner],
            'inner_probs': [format_rational(t) for t in self.inner_probs],
            'open_set': {'lo': format_rational(self.open_set.lo), 'hi': format_rational(self.open_set.hi)}
        }


def _parse_maps(entries: Iterable[Any], label: str) -> Tuple[Similitude1D, ...]:
    maps = []
    for entry in entries:
        try:
            maps.append(Similitude1D(parse_rational(entry['scale']), parse_rational(entry['offset'])))
        except (KeyError, TypeError) as e:
            raise InvalidSystemError(f"Malformed {label} entry {entry!r}: {e}")
        except InvalidSystemError:
            raise
        except ValueError as e:
            raise InvalidSystemError(f"Invalid {label} entry {entry!r}: {e}")
    return tuple(maps)


def system_from_dict(data: Dict[str, Any]) -> CondensationSystem:
    missing = [key for key in ('outer_maps', 'outer_probs', 'inner_maps', 'inner_probs', 'open_set')
               if key not in data]
    if missing:
        raise InvalidSystemError(f"System definition lacks fields: {', '.join(missing)}")
    try:
        open_set = Interval.open(parse_rational(data['open_set']['lo']), parse_rational(data['open_set']['hi']))
    except (KeyError, TypeError) as e:
        raise InvalidSystemError(f"Malformed open_set: {e}")
    except InvalidSystemError:
        raise
    except ValueError as e:
        raise InvalidSystemError(f"Invalid open_set: {e}")

    return CondensationSystem(
        outer=_parse_maps(data['outer_maps'], 'outer_maps'),
        outer_probs=tuple(parse_rational(p) for p in data['outer_probs']),
        inner=_parse_maps(data['inner_maps'], 'inner_maps'),
        inner_probs=tuple(parse_rational(t) for t in data['inner_probs']),
        open_set=open_set
    )


def load_system(path: Path) -> CondensationSystem:
    """Read a system definition JSON file"""
    if not path.exists():
        raise FileNotFoundError(f"System file not found: {path}")
    with path.open('r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidSystemError(f"System file {path} is not valid JSON: {e}")
    system = system_from_dict(data)
    logger.debug(f"Loaded system with N={system.outer_size}, M={system.inner_size} from {path}")
    return system


def save_system(system: CondensationSystem, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8') as f:
        json.dump(system.to_dict(), f, indent=2)


#
# IOSC validation
#

class VerdictStatus(Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    name: str
    status: VerdictStatus
    detail: str
    witness: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status is VerdictStatus.PASS

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'status': self.status.value, 'detail': self.detail, 'witness': self.witness}


@dataclass(frozen=True)
class IoscReport:
    verdicts: Tuple[Verdict, ...]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def failures(self) -> List[Verdict]:
        return [v for v in self.verdicts if not v.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {'passed': self.passed, 'verdicts': [v.to_dict() for v in self.verdicts]}


def _check_a1(system: CondensationSystem) -> Verdict:
    u = system.open_set
    for i, f in enumerate(system.outer, 1):
        image = f.image(u)
        if not u.contains(image):
            return Verdict("A1", VerdictStatus.FAIL, "f_i(U) ⊂ U",
                           f"f_{i}(U) = {image} is not inside U = {u}")
    return Verdict("A1", VerdictStatus.PASS, "f_i(U) ⊂ U")


def _check_disjoint_images(maps: Sequence[Similitude1D], domain: Interval, name: str,
                           symbol: str, detail: str) -> Optional[Verdict]:
    images = [f.image(domain) for f in maps]
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            if images[i].intersects(images[j]):
                return Verdict(name, VerdictStatus.FAIL, detail,
                               f"{symbol}_{i + 1}{domain} = {images[i]} meets {symbol}_{j + 1}{domain} = {images[j]}")
    return None


def _check_a2(system: CondensationSystem) -> Verdict:
    detail = "f_i(U) pairwise disjoint"
    failure = _check_disjoint_images(system.outer, system.open_set, "A2", "f", detail)
    return failure or Verdict("A2", VerdictStatus.PASS, detail)


def _check_a3(system: CondensationSystem, refine_depth: int) -> Verdict:
    detail = "E ∩ U ≠ ∅ and C ⊂ U"
    u = system.open_set
    hull_c = system.inner_hull
    if not u.contains(hull_c):
        return Verdict("A3", VerdictStatus.FAIL, detail, f"hull(C) = {hull_c} is not inside U = {u}")
    hull_e = system.outer_hull
    if not hull_e.intersects(u):
        return Verdict("A3", VerdictStatus.FAIL, detail, f"hull(E) = {hull_e} misses U = {u}")

    try:
        certificate = find_contained_cylinder(system.outer, hull_e, u, refine_depth)
    except BudgetExceededError as e:
        logger.warning(f"A3 refinement stopped: {e}")
        certificate = None
    if certificate is None:
        return Verdict("A3", VerdictStatus.INCONCLUSIVE, detail,
                       f"no cylinder f_σ(hull E) ⊂ U with |σ| ≤ {refine_depth}")
    return Verdict("A3", VerdictStatus.PASS, detail, f"f_{certificate}(hull E) ⊂ U")


def _check_a4(system: CondensationSystem) -> Verdict:
    detail = "∂U ∩ hull(C) = ∅ and C ∩ f_i(cl U) = ∅"
    u = system.open_set
    hull_c = system.inner_hull
    for point in (u.lo, u.hi):
        if hull_c.contains_point(point):
            return Verdict("A4", VerdictStatus.FAIL, detail,
                           f"boundary point {point} of U lies in hull(C) = {hull_c}")
    closure = u.closure()
    for i, f in enumerate(system.outer, 1):
        image = f.image(closure)
        if image.intersects(hull_c):
            return Verdict("A4", VerdictStatus.FAIL, detail,
                           f"f_{i}(cl U) = {image} meets hull(C) = {hull_c}")
    return Verdict("A4", VerdictStatus.PASS, detail)


def _check_inner_osc(system: CondensationSystem) -> Verdict:
    detail = "g_j(J) ⊆ J and g_j(int J) pairwise disjoint, J = hull(C)"
    j = system.inner_hull
    for index, g in enumerate(system.inner, 1):
        image = g.image(j)
        if not j.contains(image):
            return Verdict("inner_osc", VerdictStatus.FAIL, detail, f"g_{index}(J) = {image} leaves J = {j}")
    failure = _check_disjoint_images(system.inner, j.interior(), "inner_osc", "g", detail)
    return failure or Verdict("inner_osc", VerdictStatus.PASS, detail)


def find_contained_cylinder(maps: Sequence[Similitude1D], base: Interval, target: Interval,
                            max_depth: int, max_nodes: int = MAX_REFINE_NODES) -> Optional[Word]:
    """Shortest word σ (lexicographic among equals) with f_σ(base) ⊂ target.

    Branches whose image misses the target are pruned since their
    descendants stay inside them.
    """
    level = [Word.empty(len(maps))]
    visited = 0
    for depth in range(max_depth + 1):
        next_level: List[Word] = []
        for sigma in level:
            visited += 1
            if visited > max_nodes:
                raise BudgetExceededError(f"Cylinder search visited more than {max_nodes} words", max_nodes)
            image = compose(maps, sigma).image(base)
            if target.contains(image):
                return sigma
            if image.intersects(target) and depth < max_depth:
                next_level.extend(sigma.children())
        level = next_level
        if not level:
            break
    return None


def check_iosc(system: CondensationSystem, refine_depth: int = DEFAULT_REFINE_DEPTH) -> IoscReport:
    """Evaluate (A1)–(A4) and the inner OSC with exact interval arithmetic"""
    report = IoscReport((
        _check_a1(system),
        _check_a2(system),
        _check_a3(system, refine_depth),
        _check_a4(system),
        _check_inner_osc(system),
    ))
    if report.passed:
        logger.debug("IOSC check passed")
    else:
        for verdict in report.failures():
            logger.info(f"IOSC {verdict.name} {verdict.status.value}: {verdict.witness}")
    return report
