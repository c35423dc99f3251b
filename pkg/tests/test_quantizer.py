"""Codebook evaluation, Lloyd alternation and the dimension fit"""
import math
from typing import List, Tuple

import numpy as np
import pytest

from condensation_quantizer.bounds import upper_bound
from condensation_quantizer import quantizer
from condensation_quantizer.fixtures import builtin_system
from condensation_quantizer.measure import sample
from condensation_quantizer.quantizer import (
    Codebook,
    bootstrap_se,
    dimension_fit,
    distortion,
    eval_codebook,
    geometric_grid,
    lloyd,
)
from condensation_quantizer.system import CondensationSystem


def test_codebook_validation() -> None:
    """Test ordering and finiteness checks"""
    with pytest.raises(ValueError, match="at least one point"):
        Codebook(np.array([]))
    with pytest.raises(ValueError, match="strictly increasing"):
        Codebook(np.array([0.5, 0.25]))
    with pytest.raises(ValueError, match="finite"):
        Codebook(np.array([0.0, np.inf]))
    codebook = Codebook.from_points([0.75, 0.25, 0.75])
    assert codebook.to_list() == [0.25, 0.75]
    assert len(codebook) == 2


def test_codebook_assign() -> None:
    """Test nearest-point assignment with ties going to the lower point"""
    codebook = Codebook(np.array([0.0, 1.0, 3.0]))
    assert codebook.assign(np.array([-1.0, 0.4, 0.5, 0.6, 2.0, 2.1, 9.0])).tolist() == [0, 0, 0, 1, 1, 2, 2]


def test_eval_codebook() -> None:
    """Test the root-form error on small examples"""
    assert eval_codebook([0.0, 1.0], Codebook(np.array([0.0])), 2) == pytest.approx(math.sqrt(0.5))
    assert eval_codebook([0.0, 1.0], Codebook(np.array([0.5])), 2) == pytest.approx(0.5)
    assert eval_codebook([0.0, 1.0, 4.0], Codebook(np.array([0.0, 4.0])), 1) == pytest.approx(1 / 3)
    assert distortion(np.array([0.0, 1.0]), Codebook(np.array([0.0])), 3.0) == pytest.approx(0.5)


def test_eval_codebook_rejects_small_r() -> None:
    """Test r < 1 is refused by the estimator"""
    with pytest.raises(ValueError, match="r ≥ 1"):
        eval_codebook([0.0, 1.0], Codebook(np.array([0.5])), 0.5)
    with pytest.raises(ValueError, match="r ≥ 1"):
        lloyd(np.linspace(0, 1, 100), 2, 0.9)


@pytest.mark.parametrize("r, expected", [(2.0, 4.0), (1.0, 2.5)])
def test_single_point_centroid(r: float, expected: float) -> None:
    """Test n = 1 gives the mean for r = 2 and the median for r = 1"""
    samples = np.array([1.0, 2.0, 3.0, 10.0])
    codebook, _ = lloyd(samples, 1, r, restarts=1, seed=0, bootstrap=0)
    assert codebook.points[0] == pytest.approx(expected)


def test_single_point_general_order() -> None:
    """Test n = 1 at r = 3 solves the first-order condition"""
    samples = np.array([0.0, 0.1, 0.2, 1.0])
    codebook, _ = lloyd(samples, 1, 3.0, restarts=1, seed=0, bootstrap=0)
    a = codebook.points[0]
    gradient = np.sum(np.sign(samples - a) * np.abs(samples - a) ** 2)
    assert abs(gradient) < 1e-6


@pytest.mark.slow
def test_uniform_control_error(uniform_control: CondensationSystem) -> None:
    """Test e_{n,2}² ≈ 1/(12 n²) for Lebesgue measure"""
    samples = sample(uniform_control, seed=1, count=200_000)
    for n in (16, 64, 256):
        _, estimate = lloyd(samples, n, 2.0, restarts=2, seed=1, bootstrap=0)
        assert estimate.value ** 2 == pytest.approx(1 / (12 * n ** 2), rel=0.15)


def test_history_is_monotone(ex315: CondensationSystem) -> None:
    """Test the accepted distortions never increase"""
    samples = sample(ex315, seed=2, count=20_000)
    for r in (1.0, 2.0, 2.5):
        _, estimate = lloyd(samples, 6, r, restarts=2, seed=2, bootstrap=0)
        history = np.array(estimate.history)
        assert np.all(np.diff(history) <= 0)
        assert estimate.value == pytest.approx(history[-1] ** (1 / r))


def test_lloyd_improves_explicit_codebook(ex315: CondensationSystem) -> None:
    """Test Lloyd started from the partition codebook never does worse"""
    samples = sample(ex315, seed=4, count=20_000)
    explicit = upper_bound(ex315, 2, 1).codebook
    baseline = eval_codebook(samples, explicit, 2.0)
    _, estimate = lloyd(samples, explicit.n, 2.0, restarts=2, seed=4, bootstrap=0, initial=explicit)
    assert estimate.value <= baseline * (1 + 1e-12)


def test_lloyd_arguments() -> None:
    """Test n, restarts, init and initial codebook validation"""
    samples = np.linspace(0, 1, 50)
    with pytest.raises(ValueError, match="n must be positive"):
        lloyd(samples, 0, 2.0)
    with pytest.raises(ValueError, match="exceeds"):
        lloyd(samples, 51, 2.0)
    with pytest.raises(ValueError, match="restarts"):
        lloyd(samples, 2, 2.0, restarts=0)
    with pytest.raises(ValueError, match="Unknown init"):
        lloyd(samples, 2, 2.0, init="kmeans++", restarts=1)
    with pytest.raises(ValueError, match="expected 3"):
        lloyd(samples, 3, 2.0, initial=Codebook(np.array([0.2, 0.8])))


def test_lloyd_exact_when_points_suffice() -> None:
    """Test n ≥ distinct samples places a point on each sample"""
    samples = np.array([0.2, 0.2, 0.7, 0.9, 0.9])
    codebook, estimate = lloyd(samples, 3, 2.0)
    assert codebook.to_list() == [0.2, 0.7, 0.9]
    assert estimate.value == 0.0


def test_lloyd_reproducible(ex315: CondensationSystem) -> None:
    """Test a fixed seed fixes codebook and estimate"""
    samples = sample(ex315, seed=6, count=10_000)
    first = lloyd(samples, 5, 2.0, restarts=3, seed=6, bootstrap=4)
    second = lloyd(samples, 5, 2.0, restarts=3, seed=6, bootstrap=4)
    assert np.array_equal(first[0].points, second[0].points)
    assert first[1] == second[1]


def test_bootstrap_se(ex315: CondensationSystem) -> None:
    """Test bootstrap errors are small and non-negative"""
    samples = sample(ex315, seed=8, count=10_000)
    codebook, estimate = lloyd(samples, 4, 2.0, restarts=1, seed=8, bootstrap=16)
    assert 0 < estimate.se < 0.1 * estimate.value
    assert bootstrap_se(samples, codebook, 2.0, resamples=1) == 0.0
    assert bootstrap_se(samples, codebook, 2.0, resamples=8, seed=1, root=False) > 0


def test_geometric_grid() -> None:
    """Test grid construction and validation"""
    assert geometric_grid(4, 64, 2) == [4, 8, 16, 32, 64]
    assert geometric_grid(3, 50, 3) == [3, 9, 27]
    with pytest.raises(ValueError, match="Invalid geometric grid"):
        geometric_grid(4, 2, 2)


def test_dimension_fit_uniform(uniform_control: CondensationSystem) -> None:
    """Test the fitted slope for Lebesgue measure is close to one"""
    samples = sample(uniform_control, seed=3, count=40_000)
    progress: List[Tuple[str, float]] = []
    fit = dimension_fit(uniform_control, 2.0, [4, 8, 16], seed=3, restarts=1, bootstrap=0, samples=samples,
                        progress_callback=lambda message, value: progress.append((message, value)))
    assert fit.slope == pytest.approx(1.0, rel=0.1)
    assert [row.n for row in fit.rows] == [4, 8, 16]
    assert progress[-1] == ("n = 16", 1.0)
    assert fit.to_dict()['rows'][0]['n'] == 4


@pytest.mark.slow
@pytest.mark.parametrize("name, expected", [
    ("ex315", 2 * math.log(2) / math.log(24)),
    ("cantor", math.log(2) / math.log(3)),
])
def test_dimension_fit_matches_xi(name: str, expected: float) -> None:
    """Test the fitted slope over n = 2^4..2^12 lies within 10% of ξ_2 and the coefficient proxy stays bounded"""
    system = builtin_system(name)
    fit = dimension_fit(system, 2.0, geometric_grid(16, 4096, 2), sample_count=200_000, seed=0,
                        restarts=5, bootstrap=0)
    assert fit.xi_r == pytest.approx(expected, abs=1e-10)
    assert fit.slope == pytest.approx(expected, rel=0.1)
    proxies = [row.coefficient_proxy for row in fit.rows]
    assert max(proxies) <= 10 * min(proxies)


def test_dimension_fit_needs_three_points(ex315: CondensationSystem) -> None:
    """Test short grids are refused"""
    with pytest.raises(ValueError, match="at least 3 grid points"):
        dimension_fit(ex315, 2.0, [4, 8], samples=np.linspace(0, 1, 100))


def test_fill_codebook_restores_size() -> None:
    """Test a collapsed codebook regains its points in the costliest cells"""
    samples = np.array([0.0, 0.0, 1.0, 2.0, 10.0])
    assert quantizer._fill_codebook(samples, np.array([1.0]), 3, 2.0).tolist() == [0.0, 1.0, 10.0]
    assert quantizer._fill_codebook(samples, np.array([0.0, 1.0]), 2, 2.0).tolist() == [0.0, 1.0]
    assert quantizer._fill_codebook(np.array([0.5, 0.5]), np.array([0.5]), 2, 2.0).tolist() == [0.5]


def test_lloyd_keeps_codebook_size(ex315: CondensationSystem) -> None:
    """Test every returned codebook has exactly n points"""
    samples = sample(ex315, seed=7, count=5_000)
    for n in (3, 17, 40):
        for r in (1.0, 2.0, 3.0):
            codebook, _ = lloyd(samples, n, r, restarts=2, seed=7, bootstrap=0)
            assert codebook.n == n
