"""Loss families and their case-adjusted (effective) forms.

A loss is evaluated on a residual u = y - f for regression families or on a
margin u = y * f for classification families.  Attaching a penalized
per-case shift to the model and minimizing it out replaces the loss with an
"effective" loss in u alone; for every supported (family, penalty norm)
pair that profiled loss has a closed form, collected here together with its
derivative (the psi function driving IRLS weights) and the loss evaluated
at the adjusted argument.

Supported pairs and their effective losses:

==============  =========  =======================================
family          norm       effective loss
==============  =========  =======================================
squared         l1         Huber, bend at lambda_gamma
squared         l2         squared error scaled by lam/(1+lam)
absolute        l2         Huber-type, quadratic on [-1/lam, 1/lam]
check           asym_l2    check with quadratic band (-q/lam, (1-q)/lam)
logistic        l1         deviance, linear below log((1-lam)/lam)
exponential     l1         exp loss, linear below -log(lam)
squared_hinge   l1         squared hinge, linear below 1 - lam/2
hinge           l2         hinge with quadratic knee on (1 - 1/lam, 1)
==============  =========  =======================================

The l1 norm with the absolute or hinge loss is rejected: shifting a
piecewise-linear loss against an l1 penalty only rescales it, so the
adjustment is void.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from . import case_adjust
from .errors import ConfigurationError


class Family(str, Enum):
    SQUARED = "squared"
    ABSOLUTE = "absolute"
    CHECK = "check"
    LOGISTIC = "logistic"
    EXPONENTIAL = "exponential"
    HINGE = "hinge"
    SQUARED_HINGE = "squared_hinge"


class GammaNorm(str, Enum):
    L1 = "l1"
    L2 = "l2"
    ASYMMETRIC_L2 = "asym_l2"


RESIDUAL_FAMILIES = frozenset({Family.SQUARED, Family.ABSOLUTE, Family.CHECK})
MARGIN_FAMILIES = frozenset(
    {Family.LOGISTIC, Family.EXPONENTIAL, Family.HINGE, Family.SQUARED_HINGE}
)

_SUPPORTED = frozenset(
    {
        (Family.SQUARED, GammaNorm.L1),
        (Family.SQUARED, GammaNorm.L2),
        (Family.ABSOLUTE, GammaNorm.L2),
        (Family.CHECK, GammaNorm.ASYMMETRIC_L2),
        (Family.LOGISTIC, GammaNorm.L1),
        (Family.EXPONENTIAL, GammaNorm.L1),
        (Family.SQUARED_HINGE, GammaNorm.L1),
        (Family.HINGE, GammaNorm.L2),
    }
)


def supported_pairs():
    """Admissible (family, norm) pairs, sorted for stable display."""
    return sorted((f.value, g.value) for f, g in _SUPPORTED)


@dataclass(frozen=True)
class LossSpec:
    """A loss family plus its quantile level when the family needs one."""

    family: Family
    q: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.CHECK:
            if self.q is None or not 0.0 < self.q < 1.0:
                raise ConfigurationError(
                    f"check loss requires q in (0, 1), got {self.q!r}"
                )
        elif self.q is not None:
            raise ConfigurationError("q is only meaningful for the check loss")

    @property
    def is_margin(self):
        return self.family in MARGIN_FAMILIES


@dataclass(frozen=True)
class EffectiveLossSpec:
    """A base loss with a penalty norm and level for the per-case shift."""

    base: LossSpec
    lambda_gamma: float
    gamma_norm: GammaNorm

    def __post_init__(self):
        object.__setattr__(self, "gamma_norm", GammaNorm(self.gamma_norm))
        lam = self.lambda_gamma
        if not np.isfinite(lam) or lam <= 0:
            raise ConfigurationError(f"lambda_gamma must be positive, got {lam!r}")
        fam = self.base.family
        if (fam, self.gamma_norm) in {
            (Family.ABSOLUTE, GammaNorm.L1),
            (Family.HINGE, GammaNorm.L1),
        }:
            raise ConfigurationError(
                f"l1 adjustment of the {fam.value} loss is void (it only rescales "
                "a piecewise-linear loss); use an l2-type norm instead"
            )
        if (fam, self.gamma_norm) not in _SUPPORTED:
            raise ConfigurationError(
                f"unsupported pair ({fam.value}, {self.gamma_norm.value}); "
                f"supported pairs: {supported_pairs()}"
            )
        if fam is Family.LOGISTIC and lam >= 1.0:
            raise ConfigurationError(
                "logistic adjustment requires lambda_gamma in (0, 1); larger values "
                "exceed the slope of the deviance and leave nothing to adjust"
            )

    @property
    def is_margin(self):
        return self.base.is_margin


def loss_value(spec, u):
    """Evaluate the base loss at residuals or margins ``u``."""
    u = np.asarray(u, dtype=float)
    fam = spec.family
    if fam is Family.SQUARED:
        return 0.5 * u * u
    if fam is Family.ABSOLUTE:
        return np.abs(u)
    if fam is Family.CHECK:
        return np.where(u >= 0, spec.q * u, (spec.q - 1.0) * u)
    if fam is Family.LOGISTIC:
        return np.logaddexp(0.0, -u)
    if fam is Family.EXPONENTIAL:
        return np.exp(-u)
    if fam is Family.HINGE:
        return np.maximum(1.0 - u, 0.0)
    if fam is Family.SQUARED_HINGE:
        return np.maximum(1.0 - u, 0.0) ** 2
    raise ConfigurationError(f"unknown family {fam!r}")


def loss_deriv(spec, u):
    """Derivative of the base loss; right-hand derivative at kinks."""
    u = np.asarray(u, dtype=float)
    fam = spec.family
    if fam is Family.SQUARED:
        return u
    if fam is Family.ABSOLUTE:
        return np.where(u >= 0, 1.0, -1.0)
    if fam is Family.CHECK:
        return np.where(u >= 0, spec.q, spec.q - 1.0)
    if fam is Family.LOGISTIC:
        return -special.expit(-u)
    if fam is Family.EXPONENTIAL:
        return -np.exp(-u)
    if fam is Family.HINGE:
        return np.where(u < 1.0, -1.0, 0.0)
    if fam is Family.SQUARED_HINGE:
        return -2.0 * np.maximum(1.0 - u, 0.0)
    raise ConfigurationError(f"unknown family {fam!r}")


def bend_location(spec):
    """Where the effective loss stops tracking the base loss.

    For margin pairs this is the single linearization point t; margins at or
    below t get adjusted.  For residual pairs it is the positive edge of the
    no-adjustment band (the band itself may be asymmetric; see ``knots``).
    """
    lam = spec.lambda_gamma
    fam = spec.base.family
    if fam is Family.SQUARED and spec.gamma_norm is GammaNorm.L1:
        return lam
    if fam is Family.ABSOLUTE:
        return 1.0 / lam
    if fam is Family.CHECK:
        return (1.0 - spec.base.q) / lam
    if fam is Family.LOGISTIC:
        return math.log((1.0 - lam) / lam)
    if fam is Family.EXPONENTIAL:
        return -math.log(lam)
    if fam is Family.SQUARED_HINGE:
        return 1.0 - lam / 2.0
    if fam is Family.HINGE:
        return 1.0 - 1.0 / lam
    # squared + l2 shrinks everywhere; there is no bend
    return math.inf


def knots(spec):
    """Breakpoints of the effective loss, in increasing order."""
    lam = spec.lambda_gamma
    fam = spec.base.family
    if fam is Family.SQUARED and spec.gamma_norm is GammaNorm.L1:
        return [-lam, lam]
    if fam is Family.SQUARED:
        return []
    if fam is Family.ABSOLUTE:
        return [-1.0 / lam, 1.0 / lam]
    if fam is Family.CHECK:
        q = spec.base.q
        return [-q / lam, 0.0, (1.0 - q) / lam]
    if fam is Family.HINGE:
        return [1.0 - 1.0 / lam, 1.0]
    return [bend_location(spec)]


def gamma_hat(spec, u):
    """Minimizing per-case shift as a function of u alone.

    For margin families the returned value is the magnitude; the sign is
    carried by the class label, which is not visible at this level.
    """
    lam = spec.lambda_gamma
    fam = spec.base.family
    norm = spec.gamma_norm
    if fam is Family.SQUARED and norm is GammaNorm.L1:
        return case_adjust.gamma_l1_squared(u, lam).values
    if fam is Family.SQUARED and norm is GammaNorm.L2:
        return case_adjust.gamma_l2_squared(u, lam).values
    if fam is Family.ABSOLUTE:
        return case_adjust.gamma_l2_absolute(u, lam).values
    if fam is Family.CHECK:
        return case_adjust.gamma_l2_check(u, spec.base.q, lam).values
    u = np.asarray(u, dtype=float)
    if fam is Family.HINGE:
        return np.clip(1.0 - u, 0.0, 1.0 / lam)
    # remaining margin pairs lift low margins exactly to the bend
    return np.maximum(bend_location(spec) - u, 0.0)


def effective_loss_value(spec, u):
    """Closed-form profiled loss min_g { loss(u -+ g) + penalty(g) }."""
    u = np.asarray(u, dtype=float)
    lam = spec.lambda_gamma
    fam = spec.base.family
    if fam is Family.SQUARED and spec.gamma_norm is GammaNorm.L1:
        a = np.abs(u)
        return np.where(a <= lam, 0.5 * u * u, lam * a - 0.5 * lam * lam)
    if fam is Family.SQUARED:
        return (lam / (1.0 + lam)) * 0.5 * u * u
    if fam is Family.ABSOLUTE:
        a = np.abs(u)
        return np.where(a <= 1.0 / lam, 0.5 * lam * u * u, a - 0.5 / lam)
    if fam is Family.CHECK:
        q = spec.base.q
        shave = q * (1.0 - q) / (2.0 * lam)
        quad = 0.5 * lam * np.where(u < 0.0, (1.0 - q) / q, q / (1.0 - q)) * u * u
        linear = np.where(u < 0.0, (q - 1.0) * u, q * u) - shave
        return np.where((-q / lam <= u) & (u < (1.0 - q) / lam), quad, linear)
    if fam is Family.LOGISTIC:
        t = bend_location(spec)
        return np.where(
            u > t, np.logaddexp(0.0, -u), -math.log1p(-lam) + lam * (t - u)
        )
    if fam is Family.EXPONENTIAL:
        t = bend_location(spec)
        # clamp the exp argument so the discarded branch cannot overflow
        return np.where(u > t, np.exp(-np.maximum(u, t)), lam * (1.0 + t - u))
    if fam is Family.SQUARED_HINGE:
        t = bend_location(spec)
        return np.where(
            u > t, np.maximum(1.0 - u, 0.0) ** 2, lam * (1.0 - u) - lam * lam / 4.0
        )
    # hinge + l2
    return np.select(
        [u >= 1.0, u > 1.0 - 1.0 / lam],
        [np.zeros_like(u), 0.5 * lam * (1.0 - u) ** 2],
        (1.0 - u) - 0.5 / lam,
    )


def effective_loss_deriv(spec, u):
    """Derivative (psi function) of the effective loss; continuous in u."""
    u = np.asarray(u, dtype=float)
    lam = spec.lambda_gamma
    fam = spec.base.family
    if fam is Family.SQUARED and spec.gamma_norm is GammaNorm.L1:
        return np.clip(u, -lam, lam)
    if fam is Family.SQUARED:
        return (lam / (1.0 + lam)) * u
    if fam is Family.ABSOLUTE:
        return np.clip(lam * u, -1.0, 1.0)
    if fam is Family.CHECK:
        q = spec.base.q
        slope = lam * np.where(u < 0.0, (1.0 - q) / q, q / (1.0 - q)) * u
        return np.clip(slope, q - 1.0, q)
    if fam is Family.LOGISTIC:
        return np.where(u > bend_location(spec), -special.expit(-u), -lam)
    if fam is Family.EXPONENTIAL:
        t = bend_location(spec)
        return np.where(u > t, -np.exp(-np.maximum(u, t)), -lam)
    if fam is Family.SQUARED_HINGE:
        return np.where(
            u > bend_location(spec), -2.0 * np.maximum(1.0 - u, 0.0), -lam
        )
    # hinge + l2
    return np.select(
        [u >= 1.0, u > 1.0 - 1.0 / lam], [np.zeros_like(u), -lam * (1.0 - u)], -1.0
    )


def effective_loss_curvature(spec, u):
    """Second derivative of the effective loss where it exists (right limit at knots)."""
    u = np.asarray(u, dtype=float)
    lam = spec.lambda_gamma
    fam = spec.base.family
    if fam is Family.SQUARED and spec.gamma_norm is GammaNorm.L1:
        return np.where(np.abs(u) <= lam, 1.0, 0.0)
    if fam is Family.SQUARED:
        return np.full_like(u, lam / (1.0 + lam))
    if fam is Family.ABSOLUTE:
        return np.where(np.abs(u) <= 1.0 / lam, lam, 0.0)
    if fam is Family.CHECK:
        q = spec.base.q
        return np.select(
            [u < -q / lam, u < 0.0, u < (1.0 - q) / lam],
            [np.zeros_like(u), lam * (1.0 - q) / q, lam * q / (1.0 - q)],
            0.0,
        )
    if fam is Family.LOGISTIC:
        p = special.expit(-u)
        return np.where(u > bend_location(spec), p * (1.0 - p), 0.0)
    if fam is Family.EXPONENTIAL:
        t = bend_location(spec)
        return np.where(u > t, np.exp(-np.maximum(u, t)), 0.0)
    if fam is Family.SQUARED_HINGE:
        return np.where(
            (u > bend_location(spec)) & (u < 1.0), 2.0, 0.0
        )
    # hinge + l2
    return np.where((u > 1.0 - 1.0 / lam) & (u < 1.0), lam, 0.0)


def gamma_adjusted_loss(spec, u):
    """Base loss at the shifted argument: the truncated form of the loss."""
    g = gamma_hat(spec, u)
    u = np.asarray(u, dtype=float)
    arg = u + g if spec.is_margin else u - g
    return loss_value(spec.base, arg)


def gamma_penalty_value(spec, gamma):
    """Penalty term lam*J(g) so that effective = adjusted + penalty exactly."""
    g = np.asarray(gamma, dtype=float)
    lam = spec.lambda_gamma
    if spec.gamma_norm is GammaNorm.L1:
        return lam * np.abs(g)
    if spec.gamma_norm is GammaNorm.L2:
        return 0.5 * lam * g * g
    q = spec.base.q
    pos = np.maximum(g, 0.0)
    neg = np.maximum(-g, 0.0)
    return 0.5 * lam * ((q / (1.0 - q)) * pos * pos + ((1.0 - q) / q) * neg * neg)
