import math

import numpy as np
import pytest

from casereg.errors import ConfigurationError, DegenerateScaleError
from casereg.tuning import (
    c_q,
    lambda_from_bending,
    lambda_gamma_quantile,
    lambda_gamma_regression,
    robust_scale,
)


def test_quantile_constant_values():
    assert abs(c_q(0.5) - 0.5 * math.exp(-2.118 - 1.097 * 0.5)) < 1e-15
    assert abs(c_q(0.5) - 0.0347475) < 1e-6
    assert abs(c_q(0.1) - 0.0538880) < 1e-6
    assert c_q(0.25) == c_q(0.75)
    assert c_q(0.05) > c_q(0.5)


def test_quantile_rule_value():
    got = lambda_gamma_quantile(0.5, 100, 1.0)
    assert abs(got - 0.0347475 * 100**0.3) < 1e-6
    assert abs(got - 0.138332) < 1e-5


def test_quantile_rule_scaling():
    base = lambda_gamma_quantile(0.3, 500, 2.0)
    # doubling sigma halves lambda; the band k/lambda then scales with sigma
    assert abs(lambda_gamma_quantile(0.3, 500, 4.0) - base / 2.0) < 1e-12
    # band grows sublinearly toward zero width: n**alpha in lambda
    assert lambda_gamma_quantile(0.3, 5000, 2.0) > base


def test_quantile_rule_validation():
    with pytest.raises(ConfigurationError, match="q must be"):
        c_q(0.0)
    with pytest.raises(ConfigurationError, match="q must be"):
        c_q(1.2)
    with pytest.raises(ConfigurationError, match="at least 1"):
        lambda_gamma_quantile(0.5, 0, 1.0)
    with pytest.raises(ConfigurationError, match="positive"):
        lambda_gamma_quantile(0.5, 10, -1.0)


def test_mad_scale_consistency():
    rng = np.random.default_rng(0)
    r = rng.standard_normal(100_000) * 3.0
    sigma = robust_scale(r)
    assert 2.97 < sigma < 3.03
    assert abs(robust_scale(2.0 * r) - 2.0 * sigma) < 1e-12


def test_mad_scale_shift_invariant():
    rng = np.random.default_rng(1)
    r = rng.standard_normal(5000)
    assert abs(robust_scale(r + 17.0) - robust_scale(r)) < 1e-12


def test_mad_scale_degenerate():
    with pytest.raises(DegenerateScaleError, match="zero"):
        robust_scale(np.full(20, 3.0))
    with pytest.raises(ConfigurationError, match="no residuals"):
        robust_scale([])


def test_regression_rule():
    assert lambda_gamma_regression(2.0, 1.5) == 3.0
    with pytest.raises(ConfigurationError, match="positive"):
        lambda_gamma_regression(-1.0, 1.0)
    with pytest.warns(UserWarning, match="outside"):
        lambda_gamma_regression(3.0, 1.0)
    with pytest.warns(UserWarning, match="outside"):
        lambda_gamma_regression(0.5, 1.0)


def test_bending_map_hinge():
    assert lambda_from_bending(-1.0, "svm") == 0.5
    assert lambda_from_bending(0.5, "hinge") == 2.0
    assert lambda_from_bending(0.0, "svm") == 1.0
    with pytest.raises(ConfigurationError, match="k < 1"):
        lambda_from_bending(1.0, "svm")


def test_bending_map_logistic():
    assert lambda_from_bending(0.0, "logistic") == 0.5
    lam = lambda_from_bending(2.0, "logistic")
    assert abs(lam - 1.0 / (1.0 + math.exp(2.0))) < 1e-15
    assert 0.0 < lam < 1.0
    # recovers the knee: bend_location(logistic) at this lambda equals k
    assert abs(math.log((1.0 - lam) / lam) - 2.0) < 1e-12


def test_bending_map_unknown_family():
    with pytest.raises(ConfigurationError, match="unknown family"):
        lambda_from_bending(0.0, "probit")
