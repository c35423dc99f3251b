import pytest
import logging
from pathlib import Path
from typing import Callable, Dict

from condensation_quantizer.api import CondensationAPI
from condensation_quantizer.config import AnalysisConfig
from condensation_quantizer.system import CondensationSystem
from condensation_quantizer import fixtures

# Test Data Constants
SAMPLE_DATA_ROOT = Path(__file__).parent / "test_data"
SYSTEM_FILES: Dict[str, Path] = {
    'ex315': SAMPLE_DATA_ROOT / "ex315.json",
    'bad': SAMPLE_DATA_ROOT / "bad.json",
    'decimal': SAMPLE_DATA_ROOT / "decimal.json",
}

# Systems that pass the IOSC check
VALID_SYSTEMS: Dict[str, Callable[[], CondensationSystem]] = {
    'ex315': fixtures.two_map_uniform,
    'nonuniform-a': fixtures.nonuniform_a,
    'nonuniform-b': fixtures.nonuniform_b,
    'balanced': fixtures.balanced,
    'dominant-inner': fixtures.dominant_inner,
}


# Basic Test Configuration
@pytest.fixture(autouse=True)
def setup_logging() -> None:
    """Configure logging for tests"""
    logging.basicConfig(
        level=logging.DEBUG,
        format='%(asctime)s [%(levelname)s] %(message)s'
    )


@pytest.fixture
def test_data_dir() -> Path:
    """Return the test data directory."""
    return SAMPLE_DATA_ROOT


# System Fixtures
@pytest.fixture
def ex315() -> CondensationSystem:
    """Two-map example with uniform probabilities"""
    return fixtures.two_map_uniform()


@pytest.fixture
def nonuniform_a() -> CondensationSystem:
    return fixtures.nonuniform_a()


@pytest.fixture
def nonuniform_b() -> CondensationSystem:
    return fixtures.nonuniform_b()


@pytest.fixture
def balanced() -> CondensationSystem:
    return fixtures.balanced()


@pytest.fixture
def dominant_inner() -> CondensationSystem:
    return fixtures.dominant_inner()


@pytest.fixture
def uniform_control() -> CondensationSystem:
    return fixtures.uniform_control()


@pytest.fixture
def cantor_control() -> CondensationSystem:
    return fixtures.cantor_control()


@pytest.fixture(params=sorted(VALID_SYSTEMS))
def valid_system(request: pytest.FixtureRequest) -> CondensationSystem:
    """Each system that passes the IOSC check"""
    return VALID_SYSTEMS[request.param]()


@pytest.fixture
def api() -> CondensationAPI:
    """API with small Monte-Carlo settings"""
    return CondensationAPI(AnalysisConfig(sample_count=20_000, restarts=2, bootstrap=8))
