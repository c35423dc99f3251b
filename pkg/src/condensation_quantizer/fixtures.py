"""Built-in condensation systems.

``two_map_example`` is the two-map example with outer maps x/4, x/4 + 3/4, inner
maps x/8 + 1/3, x/8 + 13/24 and U = (0, 1); it satisfies the IOSC for every
choice of probabilities.  The two controls are condensation systems whose
measure coincides with a plain self-similar measure and are meant for
sampling and estimator checks only.
"""

from fractions import Fraction
from typing import Callable, Dict

from .system import CondensationSystem, Interval, RationalLike, Similitude1D

F = Fraction

TWO_MAP_OUTER = (Similitude1D(F(1, 4)), Similitude1D(F(1, 4), F(3, 4)))
TWO_MAP_INNER = (Similitude1D(F(1, 8), F(1, 3)), Similitude1D(F(1, 8), F(13, 24)))
UNIT_OPEN = Interval.open(0, 1)


def two_map_example(p0: RationalLike = F(1, 3), p1: RationalLike = F(1, 3), p2: RationalLike = F(1, 3),
                    t1: RationalLike = F(1, 2), t2: RationalLike = F(1, 2)) -> CondensationSystem:
    return CondensationSystem(
        outer=TWO_MAP_OUTER,
        outer_probs=(F(p0), F(p1), F(p2)),
        inner=TWO_MAP_INNER,
        inner_probs=(F(t1), F(t2)),
        open_set=UNIT_OPEN
    )


def two_map_uniform() -> CondensationSystem:
    """p = (1/3, 1/3, 1/3), t = (1/2, 1/2)"""
    return two_map_example()


def nonuniform_a() -> CondensationSystem:
    return two_map_example(F(1, 2), F(1, 3), F(1, 6), F(1, 3), F(2, 3))


def nonuniform_b() -> CondensationSystem:
    """Unequal ratios and a reflected outer map"""
    return CondensationSystem(
        outer=(Similitude1D(F(1, 3)), Similitude1D(F(-1, 4), F(1))),
        outer_probs=(F(1, 4), F(1, 2), F(1, 4)),
        inner=(Similitude1D(F(1, 10), F(2, 5)), Similitude1D(F(1, 5), F(1, 2))),
        inner_probs=(F(2, 5), F(3, 5)),
        open_set=UNIT_OPEN
    )


def balanced() -> CondensationSystem:
    """s_1 = t_1 = 1/3 exactly: every outer and inner term p_i s_i and t_j c_j is 1/16"""
    return two_map_example(F(1, 2), F(1, 4), F(1, 4))


def dominant_inner() -> CondensationSystem:
    """Outer terms p_i s_i^r stay below the inner ones, so s_r > t_r for all r"""
    return CondensationSystem(
        outer=(Similitude1D(F(1, 8)), Similitude1D(F(1, 8), F(7, 8))),
        outer_probs=(F(1, 2), F(1, 4), F(1, 4)),
        inner=TWO_MAP_INNER,
        inner_probs=(F(1, 2), F(1, 2)),
        open_set=UNIT_OPEN
    )


def uniform_control() -> CondensationSystem:
    """Lebesgue measure on [0, 1] written as a condensation measure"""
    halves = (Similitude1D(F(1, 2)), Similitude1D(F(1, 2), F(1, 2)))
    return CondensationSystem(halves, (F(1, 2), F(1, 4), F(1, 4)), halves, (F(1, 2), F(1, 2)), UNIT_OPEN)


def cantor_control() -> CondensationSystem:
    """The triadic Cantor measure written as a condensation measure"""
    thirds = (Similitude1D(F(1, 3)), Similitude1D(F(1, 3), F(2, 3)))
    return CondensationSystem(thirds, (F(1, 2), F(1, 4), F(1, 4)), thirds, (F(1, 2), F(1, 2)), UNIT_OPEN)


BUILTIN_SYSTEMS: Dict[str, Callable[[], CondensationSystem]] = {
    'ex315': two_map_uniform,
    'nonuniform-a': nonuniform_a,
    'nonuniform-b': nonuniform_b,
    'balanced': balanced,
    'dominant-inner': dominant_inner,
    'uniform': uniform_control,
    'cantor': cantor_control,
}


def builtin_system(name: str) -> CondensationSystem:
    try:
        factory = BUILTIN_SYSTEMS[name]
    except KeyError:
        raise ValueError(f"Unknown built-in system {name!r}; choose from {', '.join(sorted(BUILTIN_SYSTEMS))}")
    return factory()
