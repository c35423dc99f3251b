"""Moran-type equations for the quantization dimension.

The inner system gives s_r from Σ (t_j c_j^r)^{s/(s+r)} = 1, the outer system
gives t_r from Σ (p_i s_i^r)^{t/(t+r)} = 1, and ξ_r = max(s_r, t_r).  For a
plain self-similar measure the same equation yields the Graf–Luschgy k_r.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import optimize

from .errors import DegenerateSystemError
from .system import CondensationSystem

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_R_MAX = 10.0
R0_GRID_POINTS = 64
R0_GRID_SPAN = 1e-4
R0_MIN_SPAN = 1e-12
R0_SHRINK = 1e4
MAX_BRACKET_DOUBLINGS = 1100
BALANCE_SLACK = 100

Number = Union[float, Fraction]


def moran_sum(weights: Sequence[Number], ratios: Sequence[Number], r: Number, s: float) -> float:
    """Σ_i (w_i ρ_i^r)^{s/(s+r)}"""
    if float(r) <= 0:
        raise ValueError(f"r must be positive, got {r}")
    if s < 0:
        raise ValueError(f"s must be non-negative, got {s}")
    w = np.asarray([float(x) for x in weights])
    rho = np.asarray([float(x) for x in ratios])
    if w.size == 0 or w.size != rho.size:
        raise ValueError("weights and ratios must be non-empty and of equal length")
    log_bases = np.log(w) + float(r) * np.log(rho)
    if np.any(log_bases >= 0):
        raise ValueError("Every term w_i·ρ_i^r must be below 1")
    exponent = s / (s + float(r))
    return float(np.sum(np.exp(exponent * log_bases)))


def solve_dim(weights: Sequence[Number], ratios: Sequence[Number], r: Number,
              tol: float = DEFAULT_TOL) -> float:
    """Unique s ≥ 0 with moran_sum(weights, ratios, r, s) = 1, found by bisection.

    ``tol`` bounds the bracket width on s.  A residual |sum − 1| above ``tol``
    is logged as a warning; callers read it back from DimResult.
    """
    if len(weights) < 2:
        raise DegenerateSystemError("A Moran sum with one term starts at 1 and has no crossing")

    def excess(s: float) -> float:
        return moran_sum(weights, ratios, r, s) - 1.0

    upper = 1.0
    doublings = 0
    while excess(upper) > 0:
        upper *= 2.0
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS:
            raise DegenerateSystemError("Moran sum never drops below 1")

    root = optimize.bisect(excess, 0.0, upper, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    residual = abs(excess(root))
    if residual > tol:
        logger.warning(f"Moran residual {residual:.3e} above tolerance {tol:.1e} at s = {root:.12g}")
    return float(root)


@dataclass(frozen=True)
class DimResult:
    r: float
    s_r: float
    t_r: float
    xi_r: float
    branch: str
    balanced: bool
    residual_inner: float
    residual_outer: float

    def to_dict(self) -> dict:
        return {
            'r': self.r,
            's_r': self.s_r,
            't_r': self.t_r,
            'xi_r': self.xi_r,
            'branch': self.branch,
            'balanced': self.balanced,
            'residuals': {'inner': self.residual_inner, 'outer': self.residual_outer}
        }


def inner_moran_sum(system: CondensationSystem, r: Number, s: float) -> float:
    """a(s) = Σ (t_j c_j^r)^{s/(s+r)}"""
    w = system.inner_weights
    return moran_sum(w.weights, w.ratios, r, s)


def outer_moran_sum(system: CondensationSystem, r: Number, s: float) -> float:
    """b(s) = Σ (p_i s_i^r)^{s/(s+r)}"""
    w = system.outer_weights
    return moran_sum(w.weights, w.ratios, r, s)


def xi_r(system: CondensationSystem, r: Number, tol: float = DEFAULT_TOL) -> DimResult:
    """s_r, t_r and ξ_r = max(s_r, t_r), with the branch attaining the max"""
    inner = system.inner_weights
    outer = system.outer_weights
    s_r = solve_dim(inner.weights, inner.ratios, r, tol)
    t_r = solve_dim(outer.weights, outer.ratios, r, tol)
    result = DimResult(
        r=float(r),
        s_r=s_r,
        t_r=t_r,
        xi_r=max(s_r, t_r),
        branch="inner" if s_r >= t_r else "outer",
        balanced=abs(s_r - t_r) <= BALANCE_SLACK * tol,
        residual_inner=abs(inner_moran_sum(system, r, s_r) - 1.0),
        residual_outer=abs(outer_moran_sum(system, r, t_r) - 1.0)
    )
    logger.debug(f"r={float(r):.6g}: s_r={s_r:.12g}, t_r={t_r:.12g}, branch={result.branch}")
    return result


def _first_crossing(gap: Callable[[float], float], grid: np.ndarray, tol: float) -> Optional[float]:
    """First sign change of ``gap`` along ``grid``; gap(grid[0]) must be positive"""
    previous_r = float(grid[0])
    for r in grid[1:]:
        current = gap(float(r))
        if current <= 0:
            if current == 0:
                return float(r)
            return float(optimize.bisect(gap, previous_r, float(r), xtol=min(tol, previous_r * tol), maxiter=500))
        previous_r = float(r)
    return None


def find_r0(system: CondensationSystem, r_max: float = DEFAULT_R_MAX,
            tol: float = DEFAULT_TOL) -> Optional[float]:
    """Smallest r in (0, r_max] where s_r − t_r changes sign, or None.

    The sign is scanned on a geometric grid and the first change refined by
    bisection.  s_r > t_r for small enough r, so when the grid already starts
    at s_r ≤ t_r its left end is pushed down by R0_SHRINK until the gap turns
    positive, bounded by r_max·R0_MIN_SPAN.  Below the returned value
    s_r > t_r, so ξ_r = s_r there.
    """
    if r_max <= 0:
        raise ValueError(f"r_max must be positive, got {r_max}")

    def gap(r: float) -> float:
        dims = xi_r(system, r, tol)
        return dims.s_r - dims.t_r

    lo, hi = r_max * R0_GRID_SPAN, r_max
    while gap(lo) <= 0:
        if lo <= r_max * R0_MIN_SPAN:
            logger.warning(f"s_r ≤ t_r down to r = {lo:.3g}; no crossover found")
            return None
        lo, hi = max(lo / R0_SHRINK, r_max * R0_MIN_SPAN), lo

    r0 = _first_crossing(gap, np.geomspace(lo, hi, R0_GRID_POINTS), tol)
    if r0 is None:
        logger.info(f"No crossover of s_r and t_r in (0, {r_max}]")
    else:
        logger.info(f"Crossover r_0 = {r0:.10g}")
    return r0
