import pytest
from fractions import Fraction
from pathlib import Path
from typing import List, Tuple

from condensation_quantizer import AnalysisConfig, CondensationAPI, InvalidSystemError
from condensation_quantizer.system import CondensationSystem

from tests.conftest import SYSTEM_FILES


def test_load_builtin_and_file(api: CondensationAPI, ex315: CondensationSystem) -> None:
    """Test loading by built-in name and by path"""
    assert api.load("ex315") == ex315
    assert api.load(SYSTEM_FILES['ex315']) == ex315
    assert api.load(str(SYSTEM_FILES['ex315'])) == ex315


def test_load_unknown_name(api: CondensationAPI) -> None:
    """Test unknown built-in names list the choices"""
    with pytest.raises(ValueError, match="choose from"):
        api.load("sierpinski")


def test_validate(api: CondensationAPI) -> None:
    """Test validation of a passing and a failing system"""
    assert api.validate(api.load("ex315")).passed
    assert not api.validate(api.load(SYSTEM_FILES['bad'])).passed


def test_dims_and_crossover(api: CondensationAPI, ex315: CondensationSystem) -> None:
    """Test dimension solve and r_0 through the API"""
    assert api.dims(ex315, "2").s_r == pytest.approx(1 / 3, abs=1e-10)
    assert api.crossover(ex315) == pytest.approx(0.5849625007, abs=1e-6)


def test_partition_is_cached(api: CondensationAPI, ex315: CondensationSystem) -> None:
    """Test repeated requests return the cached bundle"""
    first = api.partition(ex315, 2, 2)
    assert api.partition(ex315, Fraction(2), 2) is first
    api.clear_cache()
    assert api.partition(ex315, 2, 2) is not first


def test_bundles_report_progress(ex315: CondensationSystem) -> None:
    """Test progress is reported once per k"""
    progress: List[Tuple[str, float]] = []
    api = CondensationAPI(AnalysisConfig(progress_callback=lambda message, value: progress.append((message, value))))
    bundles = api.bundles(ex315, 2, 3)
    assert [b.k for b in bundles] == [1, 2, 3]
    assert progress == [("k = 1", 1 / 3), ("k = 2", 2 / 3), ("k = 3", 1.0)]


def test_growth(api: CondensationAPI, nonuniform_b: CondensationSystem) -> None:
    """Test the growth report covers consecutive k"""
    rows = api.growth(nonuniform_b, 1, 4)
    assert [row['k'] for row in rows] == [1, 2, 3]
    assert all(row['within'] for row in rows)


def test_markers_are_cached(api: CondensationAPI, ex315: CondensationSystem) -> None:
    """Test marker search runs once per system"""
    assert api.markers(ex315) is api.markers(ex315)


def test_bounds(api: CondensationAPI, ex315: CondensationSystem) -> None:
    """Test the bounds report through the API"""
    report = api.bounds(ex315, 2, 2)
    assert report.separation.passed
    assert report.energies.passed
    assert report.phi == api.partition(ex315, 2, 2).phi


def test_coefficients(api: CondensationAPI, ex315: CondensationSystem) -> None:
    """Test the coefficient table and sum growth rows"""
    table, sums = api.coefficients(ex315, Fraction(1, 2), 3)
    assert [row['k'] for row in table] == [1, 2, 3]
    assert all(row['holds'] for row in sums)


def test_estimate(api: CondensationAPI, ex315: CondensationSystem) -> None:
    """Test estimates decrease along the grid on one common sample"""
    results = api.estimate(ex315, 2, [2, 4, 8], seed=0)
    values = [estimate.value for _, estimate in results]
    assert values == sorted(values, reverse=True)
    assert all(codebook.n <= n for (codebook, _), n in zip(results, [2, 4, 8]))
    assert all(estimate.samples == 20_000 for _, estimate in results)


def test_sample_reproducible(api: CondensationAPI, ex315: CondensationSystem) -> None:
    """Test the API sampler honours the seed and configured count"""
    first = api.sample(ex315, 11)
    assert first.size == 20_000
    assert (first == api.sample(ex315, 11)).all()


def test_invalid_system_rejected_for_bounds(api: CondensationAPI) -> None:
    """Test bounds refuse systems failing the IOSC"""
    system = api.load(SYSTEM_FILES['bad'])
    with pytest.raises(InvalidSystemError):
        api.bounds(system, 2, 1)


def test_api_cache_persistence(tmp_path: Path, ex315: CondensationSystem) -> None:
    """Test bundles saved by one API instance load into another"""
    cache_file = tmp_path / "bundles.json"
    config = AnalysisConfig(cache_file=cache_file)

    api1 = CondensationAPI(config=config)
    saved = [api1.partition(ex315, 2, k) for k in (1, 2)]
    api1.save_cache(ex315)

    api2 = CondensationAPI(config=config)
    assert api2.load_cache(ex315), "Cache should load successfully"
    assert api2.partition(ex315, 2, 1) == saved[0]
    assert api2.partition(ex315, 2, 2) == saved[1]


def test_api_cache_missing_file(tmp_path: Path, ex315: CondensationSystem) -> None:
    """Test loading reports False without a cache file"""
    api = CondensationAPI(AnalysisConfig(cache_file=tmp_path / "missing.json"))
    assert not api.load_cache(ex315)
    assert not CondensationAPI().load_cache(ex315)
