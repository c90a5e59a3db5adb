"""Model-selection scores: Cp, GCV, repeated k-fold CV, quantile crossing."""

from dataclasses import dataclass

import numpy as np

from . import losses
from .errors import ConfigurationError
from .rng import substream


def cp_score(rss, df, sigma2, n):
    """Mallows' Cp: rss/sigma2 - n + 2*df."""
    if sigma2 <= 0:
        raise ConfigurationError("sigma2 must be positive")
    return float(rss) / float(sigma2) - float(n) + 2.0 * float(df)


def gcv_score(rss, df, n):
    """Generalized cross-validation: (rss/n) / (1 - df/n)^2."""
    if df >= n:
        raise ConfigurationError(f"df={df} must be below n={n}")
    return (float(rss) / n) / (1.0 - float(df) / n) ** 2


@dataclass
class CVReport:
    """Scores from repeated k-fold cross-validation.

    ``fold_scores`` has shape (repeats, folds); each entry is the summed
    hold-out loss of that fold divided by the total case count, so a
    repeat's score is the plain sum of its row.
    """

    folds: int
    repeats: int
    fold_scores: np.ndarray
    loss_used: str

    @property
    def repeat_scores(self):
        return self.fold_scores.sum(axis=1)

    @property
    def mean(self):
        return float(self.repeat_scores.mean())

    @property
    def sd(self):
        return float(self.repeat_scores.std(ddof=1)) if self.repeats > 1 else 0.0

    def rows(self):
        """Flat (repeat, fold, score) records for CSV output."""
        return [
            {"repeat": i, "fold": j, "score": float(self.fold_scores[i, j])}
            for i in range(self.repeats)
            for j in range(self.folds)
        ]

    def summary(self):
        return {
            "folds": self.folds,
            "repeats": self.repeats,
            "loss": self.loss_used,
            "repeat_scores": [float(v) for v in self.repeat_scores],
            "mean": self.mean,
            "sd": self.sd,
        }


def _stable_order(data):
    # canonical case order before shuffling makes CV invariant to row order
    keys = np.column_stack([data.raw_X, data.y])
    return np.lexsort(keys.T[::-1])


def kfold_cv(data, fitter, score_loss, folds=10, repeats=1, seed=0):
    """Repeated k-fold CV score of a fitting procedure.

    Arguments
    ---------
    data : Dataset
    fitter : callable
        Called with a training Dataset; must return a FitResult-like object
        with a ``predict(X_raw)`` method producing fitted values on the
        raw predictor scale.
    score_loss : LossSpec
        Hold-out scoring loss.  Residual losses score y - fit; margin
        losses score y * fit.
    folds, repeats : int
    seed : int
        Fold assignment uses a dedicated stream per repeat.
    """
    if not 2 <= folds <= data.n:
        raise ConfigurationError(f"folds must be in [2, n], got {folds}")
    if repeats < 1:
        raise ConfigurationError("repeats must be at least 1")
    base_order = _stable_order(data)
    fold_scores = np.empty((repeats, folds))
    for rep in range(repeats):
        rng = substream(seed, rep)
        order = base_order[rng.permutation(data.n)]
        parts = np.array_split(order, folds)
        for j, hold in enumerate(parts):
            train = np.setdiff1d(np.arange(data.n), hold)
            fit = fitter(data.subset(train))
            pred = fit.predict(data.raw_X[hold])
            if score_loss.is_margin:
                arg = data.y[hold] * pred
            else:
                arg = data.y[hold] - pred
            fold_scores[rep, j] = float(
                np.sum(losses.loss_value(score_loss, arg))
            ) / data.n
    return CVReport(folds, repeats, fold_scores, score_loss.family.value)


def crossing_count(fitted_by_level, q_levels):
    """Count grid points where fitted quantile curves cross.

    ``fitted_by_level`` holds one fitted-value array per quantile level, all
    evaluated on the same grid.  A grid point counts once if any pair of
    levels is inverted there (a higher level strictly below a lower one).
    """
    q_levels = list(q_levels)
    if sorted(q_levels) != q_levels:
        raise ConfigurationError("q_levels must be increasing")
    curves = np.asarray(fitted_by_level, dtype=float)
    if curves.shape[0] != len(q_levels):
        raise ConfigurationError("one fitted curve per quantile level required")
    bad = np.zeros(curves.shape[1], dtype=bool)
    for i in range(len(q_levels)):
        for j in range(i + 1, len(q_levels)):
            bad |= curves[j] < curves[i]
    return int(np.count_nonzero(bad))
