"""Monte-Carlo estimates of the quantization error e_{n,r}(μ).

Codebooks are evaluated by nearest-point assignment on sorted code points and
optimized by Lloyd alternation: nearest-neighbour cells (intervals split at
midpoints) followed by per-cell generalized centroids.  The estimator is
limited to r ≥ 1, where each per-cell objective is convex.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .dims import xi_r
from .measure import sample
from .progress_callback import ProgressCallbackType
from .system import CondensationSystem

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_COUNT = 200_000
DEFAULT_RESTARTS = 5
DEFAULT_MAX_ITER = 200
DEFAULT_LLOYD_TOL = 1e-10
DEFAULT_BOOTSTRAP = 32
DEFAULT_MAX_WORKERS = 4

INIT_METHODS = ("quantile", "random")


@dataclass(frozen=True, eq=False)
class Codebook:
    """Strictly increasing code points α"""
    points: np.ndarray

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=float).ravel()
        if points.size == 0:
            raise ValueError("Codebook must contain at least one point")
        if not np.all(np.isfinite(points)):
            raise ValueError("Codebook points must be finite")
        if np.any(np.diff(points) <= 0):
            raise ValueError("Codebook points must be strictly increasing")
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    @classmethod
    def from_points(cls, values: Iterable[float]) -> 'Codebook':
        return cls(np.unique(np.asarray(list(values), dtype=float)))

    @property
    def n(self) -> int:
        return int(self.points.size)

    def __len__(self) -> int:
        return self.n

    def assign(self, samples: np.ndarray) -> np.ndarray:
        """Index of the nearest code point for every sample"""
        boundaries = (self.points[1:] + self.points[:-1]) / 2
        return np.searchsorted(boundaries, samples, side='left')

    def to_list(self) -> List[float]:
        return [float(a) for a in self.points]


@dataclass(frozen=True)
class ErrorEstimate:
    n: int
    r: float
    value: float
    se: float
    samples: int
    seed: Optional[int]
    iterations: int
    restarts: int = 1
    history: Tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'r': self.r,
            'e_hat': self.value,
            'se': self.se,
            'samples': self.samples,
            'seed': self.seed,
            'iterations': self.iterations,
            'restarts': self.restarts
        }


def _check_order(r: float) -> float:
    r = float(r)
    if r < 1:
        raise ValueError(f"The estimator needs r ≥ 1, got r = {r}")
    return r


def _as_samples(samples: Any) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("No samples given")
    return x


def distortion(samples: np.ndarray, codebook: Codebook, r: float) -> float:
    """Mean of min_a |x − a|^r (the r-th power form)"""
    x = _as_samples(samples)
    nearest = codebook.points[codebook.assign(x)]
    return float(np.mean(np.abs(x - nearest) ** r))


def eval_codebook(samples: Any, codebook: Codebook, r: float) -> float:
    """(1/S Σ_j min_a |x_j − a|^r)^{1/r}"""
    r = _check_order(r)
    return distortion(_as_samples(samples), codebook, r) ** (1.0 / r)


def bootstrap_se(samples: Any, codebook: Codebook, r: float, resamples: int = DEFAULT_BOOTSTRAP,
                 seed: Optional[int] = None, root: bool = True,
                 rng: Optional[np.random.Generator] = None) -> float:
    """Bootstrap standard error of the codebook distortion (root or r-th power form)"""
    r = _check_order(r)
    x = _as_samples(samples)
    if resamples < 2:
        return 0.0
    rng = rng or np.random.default_rng(seed)
    values = []
    for _ in range(resamples):
        value = distortion(x[rng.integers(0, x.size, x.size)], codebook, r)
        values.append(value ** (1.0 / r) if root else value)
    return float(np.std(values, ddof=1))


#
# Lloyd alternation
#

def _centroid(cell: np.ndarray, r: float) -> float:
    """argmin_a Σ |x − a|^r over one cell"""
    if cell[0] == cell[-1]:
        return float(cell[0])
    if r == 2:
        return float(np.mean(cell))
    if r == 1:
        return float(np.median(cell))
    result = optimize.minimize_scalar(
        lambda a: float(np.sum(np.abs(cell - a) ** r)),
        bounds=(float(cell[0]), float(cell[-1])),
        method='bounded',
        options={'xatol': 1e-12 * max(1.0, abs(float(cell[-1])))}
    )
    return float(result.x)


def _update(x_sorted: np.ndarray, points: np.ndarray, r: float) -> np.ndarray:
    boundaries = (points[1:] + points[:-1]) / 2
    edges = np.concatenate(([0], np.searchsorted(x_sorted, boundaries, side='left'), [x_sorted.size]))
    counts = np.diff(edges)
    updated = points.copy()
    filled = np.flatnonzero(counts > 0)
    if r == 2:
        sums = np.add.reduceat(x_sorted, edges[filled])
        updated[filled] = sums / counts[filled]
    else:
        for i in filled:
            updated[i] = _centroid(x_sorted[edges[i]:edges[i + 1]], r)
    return _fill_codebook(x_sorted, np.unique(updated), points.size, r)


def _fill_codebook(x_sorted: np.ndarray, points: np.ndarray, n: int, r: float) -> np.ndarray:
    """Grow ``points`` back to n by adding the sample farthest from its code point in the costliest cell"""
    while points.size < n:
        cells = Codebook(points).assign(x_sorted)
        gaps = np.abs(x_sorted - points[cells])
        costs = np.bincount(cells, weights=gaps ** r, minlength=points.size)
        members = np.flatnonzero(cells == np.argmax(costs))
        if gaps[members].max() == 0:
            break
        points = np.unique(np.append(points, x_sorted[members[np.argmax(gaps[members])]]))
    return points


def _initial_points(x_sorted: np.ndarray, distinct: np.ndarray, n: int,
                    rng: np.random.Generator, method: str) -> np.ndarray:
    if method == "quantile":
        idx = ((np.arange(n) + 0.5) * x_sorted.size / n).astype(int)
        points = np.unique(x_sorted[np.minimum(idx, x_sorted.size - 1)])
        if points.size < n:
            spare = np.setdiff1d(distinct, points)
            points = np.sort(np.concatenate((points, rng.choice(spare, n - points.size, replace=False))))
        return points
    if method == "random":
        return np.sort(rng.choice(distinct, n, replace=False))
    raise ValueError(f"Unknown init method {method!r}, expected one of {INIT_METHODS}")


def _lloyd_run(x_sorted: np.ndarray, points: np.ndarray, r: float, max_iter: int,
               tol: float) -> Tuple[np.ndarray, float, int, List[float]]:
    current = distortion(x_sorted, Codebook(points), r)
    history = [current]
    iterations = 0
    for iterations in range(1, max_iter + 1):
        candidate = _update(x_sorted, points, r)
        value = distortion(x_sorted, Codebook(candidate), r)
        if value > current:
            iterations -= 1
            break
        improvement = (current - value) / current if current > 0 else 0.0
        points, current = candidate, value
        history.append(current)
        if improvement < tol:
            break
    return points, current, iterations, history


def lloyd(samples: Any, n: int, r: float, init: str = "quantile", max_iter: int = DEFAULT_MAX_ITER,
          tol: float = DEFAULT_LLOYD_TOL, restarts: int = DEFAULT_RESTARTS, seed: Optional[int] = None,
          bootstrap: int = DEFAULT_BOOTSTRAP, max_workers: int = DEFAULT_MAX_WORKERS,
          initial: Optional[Codebook] = None) -> Tuple[Codebook, ErrorEstimate]:
    """Best of ``restarts`` Lloyd runs; the first uses ``init`` (or ``initial``), the others random starts.

    The reported value is the smallest distortion found, an upper estimate of
    e_{n,r} for the sampled measure.
    """
    r = _check_order(r)
    x_sorted = np.sort(_as_samples(samples))
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > x_sorted.size:
        raise ValueError(f"n = {n} exceeds the {x_sorted.size} samples")
    if restarts < 1:
        raise ValueError(f"restarts must be positive, got {restarts}")
    if initial is not None and initial.n != n:
        raise ValueError(f"Initial codebook has {initial.n} points, expected {n}")

    distinct = np.unique(x_sorted)
    if n >= distinct.size:
        codebook = Codebook(distinct)
        estimate = ErrorEstimate(n, r, 0.0, 0.0, int(x_sorted.size), seed, 0, restarts, (0.0,))
        return codebook, estimate

    streams = np.random.SeedSequence(seed).spawn(restarts + 1)
    results: Dict[int, Tuple[np.ndarray, float, int, List[float]]] = {}

    def run(index: int) -> Tuple[np.ndarray, float, int, List[float]]:
        rng = np.random.default_rng(streams[index])
        if index == 0 and initial is not None:
            start = np.array(initial.points)
        else:
            start = _initial_points(x_sorted, distinct, n, rng, init if index == 0 else "random")
        return _lloyd_run(x_sorted, start, r, max_iter, tol)

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_restart = {executor.submit(run, index): index for index in range(restarts)}
        for future in as_completed(future_to_restart):
            index = future_to_restart[future]
            try:
                results[index] = future.result()
            except Exception as e:
                logger.error(f"Lloyd restart {index} failed: {e}")
                raise

    best = min(results, key=lambda index: (results[index][1], index))
    points, value, iterations, history = results[best]
    codebook = Codebook(points)
    se = bootstrap_se(x_sorted, codebook, r, bootstrap, rng=np.random.default_rng(streams[restarts]))
    estimate = ErrorEstimate(
        n=n,
        r=r,
        value=value ** (1.0 / r),
        se=se,
        samples=int(x_sorted.size),
        seed=seed,
        iterations=iterations,
        restarts=restarts,
        history=tuple(history)
    )
    logger.debug(f"Lloyd n={n}, r={r}: e_hat={estimate.value:.6g} after {iterations} iterations (restart {best})")
    return codebook, estimate


#
# Dimension fit
#

@dataclass(frozen=True)
class FitRow:
    n: int
    e_hat: float
    se: float
    coefficient_proxy: float


@dataclass(frozen=True)
class DimensionFit:
    r: float
    slope: float
    intercept: float
    xi_r: float
    rows: Tuple[FitRow, ...]

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.xi_r) / self.xi_r

    def to_dict(self) -> Dict[str, Any]:
        return {
            'r': self.r,
            'slope': self.slope,
            'intercept': self.intercept,
            'xi_r': self.xi_r,
            'relative_error': self.relative_error,
            'rows': [row.__dict__ for row in self.rows]
        }


def geometric_grid(start: int, stop: int, factor: int) -> List[int]:
    """start, start·factor, … up to stop"""
    if start < 1 or stop < start or factor < 2:
        raise ValueError(f"Invalid geometric grid {start}:{stop}:{factor}")
    grid = []
    n = start
    while n <= stop:
        grid.append(n)
        n *= factor
    return grid


def dimension_fit(system: CondensationSystem, r: float, n_grid: Sequence[int],
                  sample_count: int = DEFAULT_SAMPLE_COUNT, seed: int = 0,
                  restarts: int = DEFAULT_RESTARTS, max_iter: int = DEFAULT_MAX_ITER,
                  tol: float = DEFAULT_LLOYD_TOL, bootstrap: int = DEFAULT_BOOTSTRAP,
                  samples: Optional[np.ndarray] = None,
                  progress_callback: Optional[ProgressCallbackType] = None) -> DimensionFit:
    """Least-squares slope of log n against −log ê_{n,r}, with n^{1/ξ_r}·ê_{n,r} per n"""
    r = _check_order(r)
    if len(n_grid) < 3:
        raise ValueError(f"A dimension fit needs at least 3 grid points, got {len(n_grid)}")
    xi = xi_r(system, r).xi_r
    x = sample(system, seed, sample_count) if samples is None else _as_samples(samples)

    rows = []
    for position, n in enumerate(n_grid, 1):
        _, estimate = lloyd(x, n, r, restarts=restarts, max_iter=max_iter, tol=tol, seed=seed,
                            bootstrap=bootstrap)
        if estimate.value <= 0:
            raise ValueError(f"Zero distortion at n = {n}; too few distinct samples for the grid")
        rows.append(FitRow(n, estimate.value, estimate.se, n ** (1.0 / xi) * estimate.value))
        if progress_callback:
            progress_callback(f"n = {n}", position / len(n_grid))

    log_n = np.log([row.n for row in rows])
    neg_log_e = -np.log([row.e_hat for row in rows])
    slope, intercept = np.polyfit(neg_log_e, log_n, 1)
    logger.info(f"Dimension fit slope {slope:.4f} against ξ_r = {xi:.4f}")
    return DimensionFit(r, float(slope), float(intercept), xi, tuple(rows))
