import json
import logging
import threading
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .partition import PartitionBundle, format_exponent, growth_constants
from .powers import Exponent, normalize_exponent
from .system import CondensationSystem
from .words import Antichain, Word

BundleKey = Tuple[int, str]


def _key(k: int, r: Exponent) -> BundleKey:
    return k, str(format_exponent(r))


def _parse_exponent(value: Any) -> Exponent:
    if isinstance(value, str):
        return normalize_exponent(Fraction(value))
    return normalize_exponent(value)


class BundleCache:
    """In-memory store of PartitionBundles for one system, keyed by (k, r).

    Saved files carry the system definition; loading refuses bundles saved for
    any other system.
    """

    def __init__(self, max_cache_size: int = 64, system: Optional[CondensationSystem] = None):
        self.system = system
        self._bundles: Dict[BundleKey, PartitionBundle] = {}
        self._lock = threading.Lock()
        self.max_cache_size = max_cache_size
        self._logger = logging.getLogger(__name__)

    def __len__(self) -> int:
        return len(self._bundles)

    def get(self, k: int, r: Exponent) -> Optional[PartitionBundle]:
        with self._lock:
            return self._bundles.get(_key(k, r))

    def add(self, bundle: PartitionBundle) -> None:
        with self._lock:
            key = _key(bundle.k, bundle.r)
            if key not in self._bundles and len(self._bundles) >= self.max_cache_size:
                raise ValueError(f"Cache size exceeded: {len(self._bundles) + 1} > {self.max_cache_size}")
            self._bundles[key] = bundle
        self._logger.debug(f"Cached bundle k={bundle.k}, r={format_exponent(bundle.r)} (φ={bundle.phi})")

    def get_all_bundles(self) -> List[PartitionBundle]:
        with self._lock:
            return sorted(self._bundles.values(), key=lambda b: (str(format_exponent(b.r)), b.k))

    def clear(self) -> None:
        with self._lock:
            self._bundles.clear()

    def to_serializable(self) -> dict:
        return {
            'system': self.system.to_dict() if self.system is not None else None,
            'bundles': [bundle.to_dict() for bundle in self.get_all_bundles()],
            'max_cache_size': self.max_cache_size
        }

    def save_to_disk(self, path: Path) -> None:
        """Save every cached bundle to one JSON file"""
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open('w', encoding='utf-8') as f:
                json.dump(self.to_serializable(), f, indent=2)
            self._logger.info(f"Bundle cache saved to {path}")
        except Exception as e:
            self._logger.error(f"Failed to save bundle cache to {path}: {e}")
            raise

    @classmethod
    def load_from_disk(cls, path: Path, system: CondensationSystem) -> 'BundleCache':
        """Rebuild bundles saved for ``system``; an unreadable file gives an empty cache"""
        try:
            with path.open('r', encoding='utf-8') as f:
                data = json.load(f)
            if data.get('system') != system.to_dict():
                cache = cls(system=system)
                cache._logger.error(f"Bundle cache {path} was saved for a different system; ignoring it")
                return cache
            cache = cls(max_cache_size=data.get('max_cache_size', 64), system=system)
            for entry in data['bundles']:
                cache.add(bundle_from_dict(entry, system))
            cache._logger.info(f"Bundle cache loaded from {path}")
            return cache
        except Exception as e:
            cache = cls(system=system)
            cache._logger.error(f"Failed to load bundle cache from {path}: {e}")
            return cache


def export_bundle(bundle: PartitionBundle, path: Path) -> Path:
    """Write one bundle as JSON, letters as integer arrays"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8') as f:
        json.dump(bundle.to_dict(), f, indent=2)
    return path


def bundle_from_dict(data: Dict[str, Any], system: CondensationSystem) -> PartitionBundle:
    n, m = system.outer_size, system.inner_size
    r = _parse_exponent(data['r'])
    k = int(data['k'])

    def outer_words(entries: List[List[int]]) -> Tuple[Word, ...]:
        return tuple(Word(n, tuple(letters)) for letters in entries)

    gamma = Antichain(n, outer_words(data['gamma']))
    psi = outer_words(data['psi'])
    inner = {
        Word(n, tuple(entry['sigma'])): Antichain(m, tuple(Word(m, tuple(rho)) for rho in entry['members']))
        for entry in data['inner']
    }
    return PartitionBundle(
        k=k,
        r=r,
        threshold=growth_constants(system, r).eta_lo ** k,
        gamma=gamma,
        psi=psi,
        lambda_star=outer_words(data['lambda_star']),
        inner={sigma: inner[sigma] for sigma in psi},
        phi=int(data['counts']['phi']),
        boundary_comparisons=int(data.get('boundary_comparisons', 0))
    )
