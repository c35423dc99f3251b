from typing import Optional, Callable
from pathlib import Path

from condensation_quantizer.progress_callback import ProgressCallbackType


class AnalysisConfig:
    def __init__(
        self,
        tol: float = 1e-12,
        node_budget: int = 10_000_000,
        marker_depth: int = 12,
        k_max: int = 6,
        max_workers: int = 4,
        sample_count: int = 200_000,
        resolution: Optional[float] = None,
        restarts: int = 5,
        max_iter: int = 200,
        lloyd_tol: float = 1e-10,
        bootstrap: int = 32,
        guard_band: float = 1e-15,
        r_max: float = 10.0,
        progress_callback: Optional[ProgressCallbackType] = None,
        error_handler: Optional[Callable[[Exception], None]] = None,
        cache_file: Optional[Path] = None
    ):
        self.tol = tol
        self.node_budget = node_budget
        self.marker_depth = marker_depth
        self.k_max = k_max
        self.max_workers = max_workers
        self.sample_count = sample_count
        self.resolution = resolution
        self.restarts = restarts
        self.max_iter = max_iter
        self.lloyd_tol = lloyd_tol
        self.bootstrap = bootstrap
        self.guard_band = guard_band
        self.r_max = r_max
        self.progress_callback = progress_callback
        self.error_handler = error_handler
        self.cache_file = cache_file

    def to_dict(self) -> dict:
        """Numeric settings, as recorded in run manifests"""
        return {
            'tol': self.tol,
            'node_budget': self.node_budget,
            'marker_depth': self.marker_depth,
            'k_max': self.k_max,
            'max_workers': self.max_workers,
            'sample_count': self.sample_count,
            'resolution': self.resolution,
            'restarts': self.restarts,
            'max_iter': self.max_iter,
            'lloyd_tol': self.lloyd_tol,
            'bootstrap': self.bootstrap,
            'guard_band': self.guard_band,
            'r_max': self.r_max
        }
