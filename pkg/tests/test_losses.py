import numpy as np
import pytest
from numpy.testing import assert_allclose

from casereg.errors import ConfigurationError
from casereg.losses import (
    EffectiveLossSpec,
    Family,
    GammaNorm,
    LossSpec,
    bend_location,
    effective_loss_curvature,
    effective_loss_deriv,
    effective_loss_value,
    gamma_adjusted_loss,
    gamma_hat,
    gamma_penalty_value,
    knots,
    loss_deriv,
    loss_value,
    supported_pairs,
)

# one spec per supported pair, lambda chosen off the trivial value 1
SPECS = [
    EffectiveLossSpec(LossSpec(Family.SQUARED), 1.3, GammaNorm.L1),
    EffectiveLossSpec(LossSpec(Family.SQUARED), 0.7, GammaNorm.L2),
    EffectiveLossSpec(LossSpec(Family.ABSOLUTE), 1.6, GammaNorm.L2),
    EffectiveLossSpec(LossSpec(Family.CHECK, q=0.3), 1.1, GammaNorm.ASYMMETRIC_L2),
    EffectiveLossSpec(LossSpec(Family.CHECK, q=0.8), 2.4, GammaNorm.ASYMMETRIC_L2),
    EffectiveLossSpec(LossSpec(Family.LOGISTIC), 0.35, GammaNorm.L1),
    EffectiveLossSpec(LossSpec(Family.EXPONENTIAL), 0.8, GammaNorm.L1),
    EffectiveLossSpec(LossSpec(Family.SQUARED_HINGE), 0.9, GammaNorm.L1),
    EffectiveLossSpec(LossSpec(Family.HINGE), 2.2, GammaNorm.L2),
]

SPEC_IDS = [f"{s.base.family.value}+{s.gamma_norm.value}@{s.lambda_gamma}" for s in SPECS]


def grid_minimum(spec, u, width=30.0, step=1e-3):
    """Brute-force profile over gamma, kinks included in the grid."""
    gammas = np.arange(-width, width, step)
    # exact kink locations of the inner objective
    extra = [0.0]
    if not spec.is_margin:
        extra.append(u)
    else:
        extra.extend([1.0 - u, bend_location(spec) - u])
    gammas = np.concatenate([gammas, [g for g in extra if np.isfinite(g)]])
    arg = u + gammas if spec.is_margin else u - gammas
    vals = loss_value(spec.base, arg) + gamma_penalty_value(spec, gammas)
    return float(np.min(vals))


# --- point values ---------------------------------------------------------


def test_check_loss_value():
    assert_allclose(loss_value(LossSpec(Family.CHECK, q=0.2), -1.0), 0.8)


def test_huber_point_value():
    spec = EffectiveLossSpec(LossSpec(Family.SQUARED), 1.0, GammaNorm.L1)
    assert_allclose(effective_loss_value(spec, 3.0), 2.5)


def test_check_effective_point_value():
    spec = EffectiveLossSpec(LossSpec(Family.CHECK, q=0.3), 1.0, GammaNorm.ASYMMETRIC_L2)
    assert_allclose(effective_loss_value(spec, 0.7), 0.105)


def test_effective_deriv_points():
    spec = EffectiveLossSpec(LossSpec(Family.CHECK, q=0.2), 1.0, GammaNorm.ASYMMETRIC_L2)
    assert_allclose(effective_loss_deriv(spec, 5.0), 0.2)
    spec = EffectiveLossSpec(LossSpec(Family.SQUARED), 1.5, GammaNorm.L1)
    assert_allclose(effective_loss_deriv(spec, -4.0), -1.5)


def test_adjusted_loss_points():
    spec = EffectiveLossSpec(LossSpec(Family.SQUARED), 1.0, GammaNorm.L1)
    assert_allclose(gamma_adjusted_loss(spec, 3.0), 0.5)
    spec = EffectiveLossSpec(LossSpec(Family.HINGE), 2.0, GammaNorm.L2)
    assert_allclose(gamma_adjusted_loss(spec, 0.8), 0.0)
    spec = EffectiveLossSpec(LossSpec(Family.ABSOLUTE), 1.0, GammaNorm.L2)
    assert_allclose(gamma_adjusted_loss(spec, 3.0), 2.0)


def test_bend_locations():
    assert_allclose(
        bend_location(EffectiveLossSpec(LossSpec(Family.LOGISTIC), 0.5, GammaNorm.L1)),
        0.0,
    )
    assert_allclose(
        bend_location(EffectiveLossSpec(LossSpec(Family.HINGE), 2.0, GammaNorm.L2)),
        0.5,
    )
    assert bend_location(
        EffectiveLossSpec(LossSpec(Family.SQUARED), 1.0, GammaNorm.L2)
    ) == np.inf


def test_knots_check():
    spec = EffectiveLossSpec(LossSpec(Family.CHECK, q=0.2), 1.0, GammaNorm.ASYMMETRIC_L2)
    assert_allclose(knots(spec), [-0.2, 0.0, 0.8])


# --- structural identities ------------------------------------------------


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_profiling_identity(spec):
    rng = np.random.default_rng(42)
    us = rng.uniform(-8.0, 8.0, 40)
    for u in us:
        closed = float(effective_loss_value(spec, u))
        brute = grid_minimum(spec, float(u))
        # grid minimum can only overshoot by curvature * step^2
        assert closed <= brute + 1e-12 * (1 + abs(brute))
        assert brute - closed <= 1e-5


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_decomposition_exact(spec):
    rng = np.random.default_rng(3)
    u = rng.uniform(-10.0, 10.0, 500)
    g = gamma_hat(spec, u)
    total = gamma_adjusted_loss(spec, u) + gamma_penalty_value(spec, g)
    eff = effective_loss_value(spec, u)
    assert_allclose(total, eff, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_deriv_matches_value(spec):
    # central differences away from knots
    rng = np.random.default_rng(7)
    u = rng.uniform(-6.0, 6.0, 300)
    ks = np.asarray(knots(spec))
    if ks.size:
        dist = np.min(np.abs(u[:, None] - ks[None, :]), axis=1)
        u = u[dist > 1e-3]
    h = 1e-6
    fd = (effective_loss_value(spec, u + h) - effective_loss_value(spec, u - h)) / (2 * h)
    assert_allclose(effective_loss_deriv(spec, u), fd, rtol=1e-5, atol=1e-5)


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_psi_continuous_at_knots(spec):
    for k in knots(spec):
        lo = effective_loss_deriv(spec, k - 1e-9)
        hi = effective_loss_deriv(spec, k + 1e-9)
        assert abs(float(hi) - float(lo)) < 1e-7


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_convexity(spec):
    u = np.linspace(-12.0, 12.0, 4001)
    v = effective_loss_value(spec, u)
    second = np.diff(v, 2)
    assert np.all(second >= -1e-9)


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_curvature_matches_deriv(spec):
    rng = np.random.default_rng(11)
    u = rng.uniform(-6.0, 6.0, 200)
    ks = np.asarray(knots(spec))
    if ks.size:
        dist = np.min(np.abs(u[:, None] - ks[None, :]), axis=1)
        u = u[dist > 1e-3]
    h = 1e-5
    fd = (effective_loss_deriv(spec, u + h) - effective_loss_deriv(spec, u - h)) / (2 * h)
    assert_allclose(effective_loss_curvature(spec, u), fd, rtol=1e-4, atol=1e-4)


def test_huber_equivalence():
    lam = 1.7
    spec = EffectiveLossSpec(LossSpec(Family.SQUARED), lam, GammaNorm.L1)
    u = np.linspace(-20.0, 20.0, 10_001)
    huber = np.where(np.abs(u) <= lam, 0.5 * u * u, lam * np.abs(u) - 0.5 * lam * lam)
    assert np.max(np.abs(effective_loss_value(spec, u) - huber)) <= 1e-12


def test_check_psi_vanishes_only_at_zero():
    for q, lam in ((0.3, 1.1), (0.5, 2.0), (0.9, 0.4)):
        spec = EffectiveLossSpec(LossSpec(Family.CHECK, q=q), lam, GammaNorm.ASYMMETRIC_L2)
        assert effective_loss_deriv(spec, 0.0) == 0.0
        u = np.concatenate([-np.geomspace(1e-12, 10, 50), np.geomspace(1e-12, 10, 50)])
        psi = effective_loss_deriv(spec, u)
        assert np.all(np.sign(psi) == np.sign(u))


# --- admissibility --------------------------------------------------------


def test_supported_pairs_table():
    pairs = supported_pairs()
    assert len(pairs) == 8
    assert ("squared", "l1") in pairs
    assert ("absolute", "l1") not in pairs
    assert ("hinge", "l1") not in pairs


@pytest.mark.parametrize(
    "family,norm",
    [(Family.ABSOLUTE, GammaNorm.L1), (Family.HINGE, GammaNorm.L1)],
)
def test_void_pairs_rejected(family, norm):
    with pytest.raises(ConfigurationError, match="void"):
        EffectiveLossSpec(LossSpec(family), 1.0, norm)


def test_logistic_lambda_cap():
    with pytest.raises(ConfigurationError, match="logistic"):
        EffectiveLossSpec(LossSpec(Family.LOGISTIC), 1.0, GammaNorm.L1)
    EffectiveLossSpec(LossSpec(Family.LOGISTIC), 0.999, GammaNorm.L1)


def test_lambda_must_be_positive():
    with pytest.raises(ConfigurationError):
        EffectiveLossSpec(LossSpec(Family.SQUARED), 0.0, GammaNorm.L1)
    with pytest.raises(ConfigurationError):
        EffectiveLossSpec(LossSpec(Family.SQUARED), -2.0, GammaNorm.L1)


def test_check_needs_q():
    with pytest.raises(ConfigurationError):
        LossSpec(Family.CHECK)
    with pytest.raises(ConfigurationError):
        LossSpec(Family.CHECK, q=1.0)
    with pytest.raises(ConfigurationError):
        LossSpec(Family.SQUARED, q=0.5)


def test_unsupported_pairing():
    with pytest.raises(ConfigurationError, match="unsupported"):
        EffectiveLossSpec(LossSpec(Family.EXPONENTIAL), 1.0, GammaNorm.L2)


def test_base_loss_derivatives():
    rng = np.random.default_rng(0)
    u = rng.uniform(-4.0, 4.0, 100)
    h = 1e-7
    for spec in (
        LossSpec(Family.SQUARED),
        LossSpec(Family.LOGISTIC),
        LossSpec(Family.EXPONENTIAL),
        LossSpec(Family.SQUARED_HINGE),
    ):
        fd = (loss_value(spec, u + h) - loss_value(spec, u - h)) / (2 * h)
        assert_allclose(loss_deriv(spec, u), fd, rtol=1e-5, atol=1e-5)
