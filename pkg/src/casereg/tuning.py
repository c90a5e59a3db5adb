"""Data-driven rules for choosing the shift-penalty level.

All rules are scale aware: regression-type rules express the penalty
through a robust residual scale so the adjustment band sits at a fixed
multiple of the noise, and classification rules express it through the
bending location of the loss.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateScaleError

MAD_FACTOR = 1.4826  # normal-consistency constant


@dataclass(frozen=True)
class RegressionBend:
    """lambda_gamma = k * sigma_hat; winsorize at k robust SDs."""

    k: float = 2.0


@dataclass(frozen=True)
class QuantileRule:
    """lambda_gamma = c_q(q) * n**alpha / sigma_hat."""

    alpha: float = 0.3
    c_scale: float = 0.5


@dataclass(frozen=True)
class ClassificationBend:
    """Bending constant k of the margin loss; family sets the mapping."""

    k: float
    family: str = "svm"


def robust_scale(residuals):
    """Normalized median absolute deviation of residuals."""
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise ConfigurationError("cannot estimate scale from no residuals")
    mad = float(np.median(np.abs(r - np.median(r))))
    if mad == 0.0:
        raise DegenerateScaleError(
            "median absolute deviation is zero; scale-based rules are undefined"
        )
    return MAD_FACTOR * mad


def lambda_gamma_regression(k, sigma_hat):
    """Penalty level putting the winsorization bend at k robust SDs.

    Values of k in [1, 2] are the standard range; anything outside draws a
    warning but is allowed.
    """
    if k <= 0 or sigma_hat <= 0:
        raise ConfigurationError("k and sigma_hat must be positive")
    if not 1.0 <= k <= 2.0:
        warnings.warn(
            f"bend multiplier k={k} is outside the usual [1, 2] range",
            stacklevel=2,
        )
    return float(k) * float(sigma_hat)


def c_q(q, c_scale=0.5):
    """Quantile-dependent constant of the penalty rule, symmetric about 0.5."""
    if not 0.0 < q < 1.0:
        raise ConfigurationError(f"q must be in (0, 1), got {q!r}")
    qq = 1.0 - q if q >= 0.5 else q
    return c_scale * math.exp(-2.118 - 1.097 * qq)


def lambda_gamma_quantile(q, n, sigma_hat, alpha=0.3, c_scale=0.5):
    """Penalty level c_q * n**alpha / sigma_hat for the quadratic band.

    The band then shrinks like n**(-alpha); alpha defaults to the value
    that performed well across sample sizes and error shapes.
    """
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    if sigma_hat <= 0:
        raise ConfigurationError("sigma_hat must be positive")
    return c_q(q, c_scale) * float(n) ** alpha / float(sigma_hat)


def lambda_from_bending(k, family="svm"):
    """Map a bending constant to the penalty level for margin losses.

    For hinge-type losses the quadratic knee starts at k < 1, giving
    lambda = 1/(1 - k).  For the logistic deviance the linearized region
    starts at margin k, giving lambda = 1/(1 + e^k), always in (0, 1).
    """
    if family in ("svm", "hinge"):
        if k >= 1.0:
            raise ConfigurationError("hinge bending constant must satisfy k < 1")
        return 1.0 / (1.0 - k)
    if family == "logistic":
        return 1.0 / (1.0 + math.exp(k))
    raise ConfigurationError(f"unknown family {family!r} for bending rule")
