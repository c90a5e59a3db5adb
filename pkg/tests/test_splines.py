import numpy as np
import pytest
from numpy.testing import assert_allclose

from casereg.errors import ConfigurationError
from casereg.splines import SplineBasis, basis_from_quantiles, natural_spline_design


def second_differences(values, step):
    return (values[2:] - 2.0 * values[1:-1] + values[:-2]) / step**2


def test_dimension_counts():
    basis = SplineBasis((0.3, 0.5, 0.7), (0.0, 1.0))
    assert basis.dimension == 4
    assert basis.all_knots == (0.0, 0.3, 0.5, 0.7, 1.0)
    six = basis_from_quantiles(np.linspace(0, 1, 500), n_knots=6)
    assert six.dimension == 5


def test_quantile_knot_placement():
    x = np.linspace(0.0, 1.0, 100001)
    basis = basis_from_quantiles(x, n_knots=3)
    assert_allclose(basis.all_knots, [0.25, 0.5, 0.75], atol=1e-4)


def test_knot_validation():
    with pytest.raises(ConfigurationError, match="increasing"):
        SplineBasis((0.5, 0.5), (0.0, 1.0))
    with pytest.raises(ConfigurationError, match="increasing"):
        SplineBasis((1.5,), (0.0, 1.0))
    with pytest.raises(ConfigurationError, match="at least 2"):
        basis_from_quantiles(np.linspace(0, 1, 50), n_knots=1)
    with pytest.raises(ConfigurationError, match="not distinct"):
        basis_from_quantiles(np.repeat([0.0, 1.0], 50), n_knots=6)


def test_linear_beyond_boundary():
    # natural basis: every column has zero curvature outside the boundary
    basis = basis_from_quantiles(np.random.default_rng(0).uniform(0, 1, 400), 6)
    step = 1e-3
    lo, hi = basis.boundary
    for edge in (np.arange(lo - 0.5, lo, step), np.arange(hi, hi + 0.5, step)):
        design = natural_spline_design(edge, basis)
        for col in design.T:
            assert np.max(np.abs(second_differences(col, step))) < 1e-6


def test_curvature_present_inside():
    basis = SplineBasis((0.4, 0.6), (0.1, 0.9))
    step = 1e-3
    inner = np.arange(0.15, 0.85, step)
    design = natural_spline_design(inner, basis)
    curvatures = [np.max(np.abs(second_differences(col, step))) for col in design.T]
    # the identity column is flat, the rest must bend somewhere
    assert curvatures[0] < 1e-8
    assert all(c > 1e-2 for c in curvatures[1:])


def test_second_derivative_continuity():
    basis = SplineBasis((0.3, 0.7), (0.0, 1.0))
    step = 1e-4
    for knot in basis.all_knots:
        left = np.array([knot - 2 * step, knot - step, knot])
        right = np.array([knot, knot + step, knot + 2 * step])
        dl = natural_spline_design(left, basis)
        dr = natural_spline_design(right, basis)
        for cl, cr in zip(dl.T, dr.T):
            a = second_differences(cl, step)[0]
            b = second_differences(cr, step)[0]
            assert abs(a - b) < 1e-2


def test_reproduces_linear_functions():
    rng = np.random.default_rng(3)
    x = rng.uniform(-2, 5, 300)
    basis = basis_from_quantiles(x, n_knots=5)
    design = natural_spline_design(x, basis)
    target = 1.7 - 0.4 * x
    aug = np.column_stack([np.ones_like(x), design])
    coef, *_ = np.linalg.lstsq(aug, target, rcond=None)
    assert np.max(np.abs(aug @ coef - target)) < 1e-8


def test_rows_follow_points():
    basis = SplineBasis((0.4, 0.5), (0.0, 1.0))
    x = np.random.default_rng(9).uniform(0, 1, 50)
    perm = np.random.default_rng(10).permutation(50)
    direct = natural_spline_design(x[perm], basis)
    reordered = natural_spline_design(x, basis)[perm]
    assert_allclose(direct, reordered, rtol=0, atol=0)


def test_design_shape():
    basis = basis_from_quantiles(np.linspace(0, 1, 200), n_knots=4)
    design = natural_spline_design(np.linspace(0, 1, 37), basis)
    assert design.shape == (37, basis.dimension)
