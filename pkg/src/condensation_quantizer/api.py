import logging
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bounds import BoundsReport, SeparationData, bounds_report, coefficient_table, find_markers, sum_growth_report
from .cache import BundleCache
from .config import AnalysisConfig
from .dims import DimResult, find_r0, xi_r
from .fixtures import builtin_system
from .measure import sample
from .partition import PartitionBundle, growth_report, phi
from .powers import normalize_exponent
from .quantizer import Codebook, DimensionFit, ErrorEstimate, dimension_fit, lloyd
from .system import CondensationSystem, IoscReport, check_iosc, load_system


class CondensationAPI:
    """Entry point for analyses of condensation systems, with bundle caching"""

    def __init__(self, config: Optional[AnalysisConfig] = None):
        self._logger = logging.getLogger(__name__)
        self.config = config or AnalysisConfig()
        self._lock = threading.Lock()
        self._caches: Dict[CondensationSystem, BundleCache] = {}
        self._markers: Dict[CondensationSystem, SeparationData] = {}

    def _cache_for(self, system: CondensationSystem) -> BundleCache:
        with self._lock:
            if system not in self._caches:
                self._caches[system] = BundleCache(system=system)
            return self._caches[system]

    def _report_progress(self, message: str, progress: float) -> None:
        if self.config.progress_callback:
            self.config.progress_callback(message, progress)

    def load(self, source: str | Path) -> CondensationSystem:
        """A built-in system name or a path to a system JSON file"""
        try:
            path = Path(source)
            if path.suffix == '.json' or path.exists():
                return load_system(path)
            return builtin_system(str(source))
        except Exception as e:
            self._handle_error(e, f"loading system {source}")
            raise

    def validate(self, system: CondensationSystem) -> IoscReport:
        try:
            return check_iosc(system, self.config.marker_depth)
        except Exception as e:
            self._handle_error(e, "IOSC validation")
            raise

    def dims(self, system: CondensationSystem, r: Any) -> DimResult:
        try:
            return xi_r(system, normalize_exponent(r), self.config.tol)
        except Exception as e:
            self._handle_error(e, f"dimension solve at r={r}")
            raise

    def crossover(self, system: CondensationSystem, r_max: Optional[float] = None) -> Optional[float]:
        try:
            return find_r0(system, r_max or self.config.r_max, self.config.tol)
        except Exception as e:
            self._handle_error(e, "crossover scan")
            raise

    def partition(self, system: CondensationSystem, r: Any, k: int) -> PartitionBundle:
        """Bundle for (k, r), built once per system"""
        try:
            cache = self._cache_for(system)
            r = normalize_exponent(r)
            bundle = cache.get(k, r)
            if bundle is None:
                bundle = phi(system, r, k, self.config.node_budget, self.config.max_workers,
                             self.config.guard_band)
                cache.add(bundle)
            return bundle
        except Exception as e:
            self._handle_error(e, f"partition k={k}, r={r}")
            raise

    def bundles(self, system: CondensationSystem, r: Any, k_max: Optional[int] = None) -> List[PartitionBundle]:
        k_max = k_max or self.config.k_max
        result = []
        for k in range(1, k_max + 1):
            result.append(self.partition(system, r, k))
            self._report_progress(f"k = {k}", k / k_max)
        return result

    def growth(self, system: CondensationSystem, r: Any, k_max: Optional[int] = None) -> List[Dict[str, Any]]:
        return growth_report(system, self.bundles(system, r, k_max))

    def markers(self, system: CondensationSystem) -> SeparationData:
        try:
            with self._lock:
                cached = self._markers.get(system)
            if cached is None:
                cached = find_markers(system, self.config.marker_depth)
                with self._lock:
                    self._markers[system] = cached
            return cached
        except Exception as e:
            self._handle_error(e, "marker search")
            raise

    def bounds(self, system: CondensationSystem, r: Any, k: int, exhaustive: bool = False) -> BoundsReport:
        try:
            return bounds_report(system, r, k, self.markers(system), self.partition(system, r, k), exhaustive)
        except Exception as e:
            self._handle_error(e, f"bounds k={k}, r={r}")
            raise

    def coefficients(self, system: CondensationSystem, r: Any,
                     k_max: Optional[int] = None) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
        """(coefficient table, sum growth report) over k = 1..k_max"""
        try:
            bundles = self.bundles(system, r, k_max)
            return coefficient_table(system, bundles, self.config.tol), sum_growth_report(system, bundles,
                                                                                          self.config.tol)
        except Exception as e:
            self._handle_error(e, "coefficient table")
            raise

    def sample(self, system: CondensationSystem, seed: int, count: Optional[int] = None) -> np.ndarray:
        try:
            return sample(system, seed, count or self.config.sample_count, self.config.resolution)
        except Exception as e:
            self._handle_error(e, "sampling")
            raise

    def estimate(self, system: CondensationSystem, r: Any, n_grid: Sequence[int], seed: int,
                 samples: Optional[np.ndarray] = None) -> List[Tuple[Codebook, ErrorEstimate]]:
        """Lloyd estimates of e_{n,r} on one common sample"""
        try:
            points = self.sample(system, seed) if samples is None else samples
            results = []
            for position, n in enumerate(n_grid, 1):
                results.append(lloyd(points, n, float(r), max_iter=self.config.max_iter, tol=self.config.lloyd_tol,
                                     restarts=self.config.restarts, seed=seed, bootstrap=self.config.bootstrap,
                                     max_workers=self.config.max_workers))
                self._report_progress(f"n = {n}", position / len(n_grid))
            return results
        except Exception as e:
            self._handle_error(e, f"estimate at r={r}")
            raise

    def fit(self, system: CondensationSystem, r: Any, n_grid: Sequence[int], seed: int,
            samples: Optional[np.ndarray] = None) -> DimensionFit:
        try:
            points = self.sample(system, seed) if samples is None else samples
            return dimension_fit(system, float(r), n_grid, seed=seed, restarts=self.config.restarts,
                                 max_iter=self.config.max_iter, tol=self.config.lloyd_tol,
                                 bootstrap=self.config.bootstrap, samples=points,
                                 progress_callback=self.config.progress_callback)
        except Exception as e:
            self._handle_error(e, f"dimension fit at r={r}")
            raise

    def save_cache(self, system: CondensationSystem, path: Optional[Path] = None) -> None:
        """Write the cached bundles of ``system`` to disk"""
        save_path = path or self.config.cache_file
        if not save_path:
            self._logger.warning("No cache file configured for save operation")
            return
        try:
            self._cache_for(system).save_to_disk(save_path)
        except Exception as e:
            self._handle_error(e, "bundle cache save")
            raise

    def load_cache(self, system: CondensationSystem, path: Optional[Path] = None) -> bool:
        """Replace the bundle cache of ``system`` with one read from disk"""
        load_path = path or self.config.cache_file
        if not load_path or not load_path.exists():
            return False
        cache = BundleCache.load_from_disk(load_path, system)
        with self._lock:
            self._caches[system] = cache
        return len(cache) > 0

    def clear_cache(self) -> None:
        with self._lock:
            self._caches.clear()
            self._markers.clear()

    def _handle_error(self, error: Exception, context: str = "") -> None:
        if self.config and self.config.error_handler:
            try:
                self.config.error_handler(error)
            except Exception as e:
                self._logger.error(f"Error handler failed: {e}")
                return

        self._logger.error(f"Error in {context}: {error}")
