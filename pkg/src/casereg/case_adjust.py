"""Closed-form minimizers of per-case shift parameters.

Each observation gets its own shift: a residual offset for regression-type
losses, or a signed margin boost for classification-type losses.  Penalizing
the shifts and minimizing over them case by case gives the closed forms
below.  Cases with a nonzero shift are exactly the ones the corresponding
modified procedure treats as outlying.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import ConfigurationError

# Norm tags stored on GammaVector; the loss layer uses the same strings.
L1 = "l1"
L2 = "l2"
ASYMMETRIC_L2 = "asym_l2"


@dataclass
class GammaVector:
    """Fitted per-case shifts and the penalty norm that produced them."""

    values: np.ndarray
    norm_used: str

    @property
    def adjusted(self):
        """Boolean mask of cases with a nonzero shift."""
        return self.values != 0.0

    @property
    def n_adjusted(self):
        return int(np.count_nonzero(self.values))


def _positive(lambda_gamma):
    if not np.isfinite(lambda_gamma) or lambda_gamma <= 0:
        raise ConfigurationError(f"lambda_gamma must be positive, got {lambda_gamma!r}")
    return float(lambda_gamma)


def gamma_l1_squared(residuals, lambda_gamma):
    """Soft-threshold residuals: minimize (r - g)^2/2 + lam*|g| per case.

    The minimizer is sign(r) * (|r| - lam)_+, so the adjusted residual
    r - g is r winsorized to [-lam, lam].
    """
    lam = _positive(lambda_gamma)
    r = np.asarray(residuals, dtype=float)
    values = np.sign(r) * np.maximum(np.abs(r) - lam, 0.0)
    return GammaVector(values, L1)


def gamma_l2_squared(residuals, lambda_gamma):
    """Ridge-shrunk residuals: minimize (r - g)^2/2 + lam*g^2/2 per case."""
    lam = _positive(lambda_gamma)
    r = np.asarray(residuals, dtype=float)
    return GammaVector(r / (1.0 + lam), L2)


def gamma_l2_absolute(residuals, lambda_gamma):
    """Minimize |r - g| + lam*g^2/2 per case.

    The shift equals the residual inside [-1/lam, 1/lam] and saturates at
    +-1/lam outside, which is the l2-adjusted median-regression form.
    """
    lam = _positive(lambda_gamma)
    r = np.asarray(residuals, dtype=float)
    return GammaVector(np.clip(r, -1.0 / lam, 1.0 / lam), L2)


def gamma_l2_check(residuals, q, lambda_gamma):
    """Per-case minimizer for the check loss with the asymmetric l2 penalty.

    The penalty (lam/2) * (q/(1-q) g_+^2 + (1-q)/q g_-^2) makes the
    no-adjustment band [-q/lam, (1-q)/lam) asymmetric around zero, mirroring
    the asymmetry of the check loss itself.

    Arguments
    ---------
    residuals : array
        Working residuals y - f.
    q : scalar in (0, 1)
        Quantile level.
    lambda_gamma : positive scalar
        Penalty level; larger means narrower band, less adjustment.
    """
    lam = _positive(lambda_gamma)
    if not 0.0 < q < 1.0:
        raise ConfigurationError(f"q must be in (0, 1), got {q!r}")
    r = np.asarray(residuals, dtype=float)
    return GammaVector(np.clip(r, -q / lam, (1.0 - q) / lam), ASYMMETRIC_L2)


def invert_monotone(gprime, tol=1e-12, max_expand=200):
    """Build a numerical inverse of an increasing scalar derivative.

    Brackets the root of gprime(u) = v by geometric expansion from [-1, 1]
    and then bisects to ``tol``.  Raises if no sign change appears, which
    covers derivatives that are bounded (so the requested value is outside
    the range) or not monotone.
    """

    def inverse(v):
        def f(u):
            return gprime(u) - v

        lo, hi = -1.0, 1.0
        flo, fhi = f(lo), f(hi)
        n = 0
        while flo > 0.0 or fhi < 0.0:
            n += 1
            if n > max_expand or not (np.isfinite(flo) and np.isfinite(fhi)):
                raise ConfigurationError(
                    f"could not bracket gprime inverse at {v!r}; "
                    "derivative may be bounded or non-monotone"
                )
            if flo > 0.0:
                lo *= 2.0
                flo = f(lo)
            if fhi < 0.0:
                hi *= 2.0
                fhi = f(hi)
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        return optimize.bisect(f, lo, hi, xtol=tol)

    return inverse


def gamma_l1_location(gprime_inverse, residuals, lambda_gamma):
    """l1-penalized shift for a smooth symmetric-role location loss g(r - g).

    For strictly convex g with unbounded derivative the minimizer winsorizes
    the residual to [ginv(-lam), ginv(lam)]:

        gamma = r - ginv(lam)   if r >  ginv(lam)
              = 0               if ginv(-lam) <= r <= ginv(lam)
              = r - ginv(-lam)  if r <  ginv(-lam)

    ``gprime_inverse`` is probed at -lam, 0 and lam; an ordering violation
    means it is not a monotone inverse and is rejected.
    """
    lam = _positive(lambda_gamma)
    lo = float(gprime_inverse(-lam))
    mid = float(gprime_inverse(0.0))
    hi = float(gprime_inverse(lam))
    if not (lo <= mid <= hi):
        raise ConfigurationError(
            f"gprime_inverse not increasing on probe points: "
            f"({lo!r}, {mid!r}, {hi!r}) at lambda_gamma={lam!r}"
        )
    r = np.asarray(residuals, dtype=float)
    values = np.where(r > hi, r - hi, np.where(r < lo, r - lo, 0.0))
    return GammaVector(values, L1)


def _apply_labels(magnitudes, labels):
    # Margin shifts carry the sign of the class label; with no labels the
    # caller gets magnitudes (the label-folded form).
    if labels is None:
        return magnitudes
    y = np.asarray(labels, dtype=float)
    if not np.all(np.abs(y) == 1.0):
        raise ConfigurationError("labels must be +-1")
    return y * magnitudes


def gamma_l1_margin(gprime_inverse, margins, lambda_gamma, labels=None):
    """l1-penalized margin boost for a decreasing margin loss g(tau + g).

    With t = ginv(-lam), the boost magnitude is (t - tau)_+: cases at or
    below the bend get lifted exactly to it, all others are untouched.
    Pass ``labels`` to get shifts signed like the class labels.
    """
    lam = _positive(lambda_gamma)
    t = float(gprime_inverse(-lam))
    tau = np.asarray(margins, dtype=float)
    mags = np.maximum(t - tau, 0.0)
    return GammaVector(_apply_labels(mags, labels), L1)


def gamma_l2_hinge(margins, lambda_gamma, labels=None):
    """l2-penalized margin boost for the hinge loss.

    In terms of the slack xi = 1 - tau the magnitude is xi clipped to
    [0, 1/lam]: interior cases move onto the margin, cases deeper than
    1/lam get the maximal boost.
    """
    lam = _positive(lambda_gamma)
    tau = np.asarray(margins, dtype=float)
    mags = np.clip(1.0 - tau, 0.0, 1.0 / lam)
    return GammaVector(_apply_labels(mags, labels), L2)
