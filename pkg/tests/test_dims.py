"""Moran equations, ξ_r and the crossover r_0"""
import itertools
import logging
import math
from fractions import Fraction

import pytest
import numpy as np

from condensation_quantizer.dims import find_r0, inner_moran_sum, moran_sum, outer_moran_sum, solve_dim, xi_r
from condensation_quantizer.errors import DegenerateSystemError
from condensation_quantizer.fixtures import two_map_example
from condensation_quantizer.system import CondensationSystem

F = Fraction


def test_example_dims_at_r2(ex315: CondensationSystem) -> None:
    """Test s_2 = 1/3 and t_2 = 2 ln 2 / ln 24"""
    dims = xi_r(ex315, F(2))
    assert dims.s_r == pytest.approx(1 / 3, abs=1e-10)
    assert dims.t_r == pytest.approx(2 * math.log(2) / math.log(24), abs=1e-10)
    assert dims.xi_r == dims.t_r
    assert dims.branch == "outer"
    assert not dims.balanced
    assert dims.residual_inner < 1e-10
    assert dims.residual_outer < 1e-10


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.7, 5.0])
def test_cantor_dimension_is_constant(r: float) -> None:
    """Test equal weights on the Cantor maps give ln 2 / ln 3 for every r"""
    half = F(1, 2)
    third = F(1, 3)
    assert solve_dim([half, half], [third, third], r) == pytest.approx(math.log(2) / math.log(3), abs=1e-10)


def test_cantor_control_inner_branch(cantor_control: CondensationSystem) -> None:
    """Test s_r of the control matches the plain Cantor measure"""
    assert xi_r(cantor_control, 2).s_r == pytest.approx(math.log(2) / math.log(3), abs=1e-10)


def test_solve_dim_satisfies_equation() -> None:
    """Test the root returns a Moran sum of one with unequal terms"""
    weights = [F(1, 5), F(1, 2), F(3, 10)]
    ratios = [F(1, 3), F(1, 4), F(1, 5)]
    for r in (0.3, 1, 2.5):
        s = solve_dim(weights, ratios, r)
        assert moran_sum(weights, ratios, r, s) == pytest.approx(1.0, abs=1e-10)


def test_solve_dim_ignores_map_order() -> None:
    """Test permuting the maps leaves the root unchanged"""
    weights = [F(1, 5), F(1, 2), F(3, 10)]
    ratios = [F(1, 3), F(1, 4), F(1, 5)]
    for r in (0.5, 2):
        reference = solve_dim(weights, ratios, r)
        for order in itertools.permutations(range(3)):
            permuted = solve_dim([weights[i] for i in order], [ratios[i] for i in order], r)
            assert permuted == pytest.approx(reference, abs=1e-12)


def test_solve_dim_tolerance_is_bracket_width(caplog: pytest.LogCaptureFixture) -> None:
    """Test a coarse tol bounds the error in s and warns when the residual exceeds it"""
    half, third = F(1, 2), F(1, 3)
    with caplog.at_level(logging.WARNING, logger="condensation_quantizer.dims"):
        s = solve_dim([half, half], [third, third], 2, tol=1e-3)
    assert abs(s - math.log(2) / math.log(3)) <= 1e-3
    residual = abs(moran_sum([half, half], [third, third], 2, s) - 1.0)
    warned = any("Moran residual" in record.getMessage() for record in caplog.records)
    assert warned == (residual > 1e-3)


def test_solve_dim_single_term() -> None:
    """Test one term has no crossing"""
    with pytest.raises(DegenerateSystemError):
        solve_dim([F(1)], [F(1, 2)], 1)


def test_moran_sum_arguments() -> None:
    """Test argument validation"""
    with pytest.raises(ValueError, match="r must be positive"):
        moran_sum([F(1, 2)], [F(1, 2)], 0, 1.0)
    with pytest.raises(ValueError, match="equal length"):
        moran_sum([F(1, 2)], [F(1, 2), F(1, 3)], 1, 1.0)
    assert moran_sum([F(1, 2), F(1, 2)], [F(1, 3), F(1, 3)], 1, 0.0) == pytest.approx(2.0)


def test_moran_sums_decrease(nonuniform_b: CondensationSystem) -> None:
    """Test a(s) and b(s) are strictly decreasing in s"""
    values = [0.0, 0.1, 0.4, 1.0, 3.0]
    inner = [inner_moran_sum(nonuniform_b, 1, s) for s in values]
    outer = [outer_moran_sum(nonuniform_b, 1, s) for s in values]
    assert all(a > b for a, b in zip(inner, inner[1:]))
    assert all(a > b for a, b in zip(outer, outer[1:]))


def test_example_crossover(ex315: CondensationSystem) -> None:
    """Test r_0 = log2(3/2) and the branch on each side"""
    r0 = find_r0(ex315)
    assert r0 is not None
    assert r0 == pytest.approx(math.log2(1.5), abs=1e-6)
    assert xi_r(ex315, r0 / 2).branch == "inner"
    assert xi_r(ex315, 2 * r0).branch == "outer"
    at_r0 = xi_r(ex315, r0)
    assert abs(at_r0.s_r - at_r0.t_r) < 1e-6


def test_inner_branch_below_crossover(ex315: CondensationSystem) -> None:
    """Test s_r > t_r at ten orders below r_0"""
    r0 = find_r0(ex315)
    assert r0 is not None
    for r in np.linspace(0.05, 0.95, 10) * r0:
        dims = xi_r(ex315, float(r))
        assert dims.s_r > dims.t_r
        assert dims.branch == "inner"


def test_crossover_below_scan_grid() -> None:
    """Test a crossover far below the default grid is still found"""
    p0 = F(1, 10 ** 6)
    system = two_map_example(p0, (1 - p0) / 2, (1 - p0) / 2)
    system.require_valid()
    assert xi_r(system, 1e-3).branch == "outer"

    r0 = find_r0(system)
    assert r0 is not None
    # t_r = r ln2 / (ln(1/(1 − p_0)) + 2r ln2) meets s_r = 1/3 at r = ln(1/(1 − p_0)) / ln 2
    assert r0 == pytest.approx(-math.log1p(-1e-6) / math.log(2), rel=1e-6)
    assert xi_r(system, r0 / 2).branch == "inner"
    assert xi_r(system, 2 * r0).branch == "outer"


def test_crossover_absent(dominant_inner: CondensationSystem, ex315: CondensationSystem) -> None:
    """Test None when the scan window holds no sign change"""
    assert find_r0(dominant_inner) is None
    assert find_r0(ex315, r_max=0.5) is None


def test_crossover_arguments(ex315: CondensationSystem) -> None:
    """Test r_max validation"""
    with pytest.raises(ValueError, match="r_max"):
        find_r0(ex315, r_max=0)


def test_balanced_fixture(balanced: CondensationSystem) -> None:
    """Test s_1 = t_1 = 1/3 on the balanced system"""
    dims = xi_r(balanced, 1)
    assert dims.s_r == pytest.approx(1 / 3, abs=1e-10)
    assert dims.t_r == pytest.approx(1 / 3, abs=1e-10)
    assert dims.balanced
