"""Monte Carlo studies for the penalized case-adjustment methods.

Three study families, each deterministic given a seed:

* regression: lasso with C_p selection versus its winsorizing robust
  variant, on correlated Gaussian designs with optional contamination
  of the noise or of the first covariate;
* classification: margin classifiers (hinge and logistic families plus
  LDA) scored by the exact error rate of the fitted linear rule under
  the generating Gaussian mixture;
* quantile: standard versus quadratically adjusted quantile regression
  compared by integrated squared error of the fitted quantile line.

Replicate ``i`` always draws from ``rng.substream(seed, i)`` so that
methods within a replicate are paired and replicates can be computed
in any order, including in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import solvers, tuning
from .data import BINARY, make_dataset
from .errors import ConfigurationError
from .losses import Family, GammaNorm, LossSpec, EffectiveLossSpec
from .rng import substream
from .selection import cp_score

REGRESSION_PRESETS = {
    "sparse": (5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    "intermediate": (3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0),
    "dense": (0.85,) * 8,
}

CONTAMINATIONS = ("none", "epsilon", "leverage")

SEPARATIONS = {"easy": 4.0, "intermediate": 2.7, "hard": 2.0}

CLASSIFIER_IDS = (
    "svm",
    "hsvm_k-0.5",
    "hsvm_k-1",
    "ssvm",
    "linlr_k-0.5",
    "linlr_k-1",
    "lr",
    "lda",
)

ERROR_DISTRIBUTIONS = ("normal", "t", "skewed")


@dataclass(frozen=True)
class RegressionScenario:
    """Correlated Gaussian design with a preset coefficient vector.

    ``contamination`` selects what happens to the first 5% of cases:
    ``"epsilon"`` triples their noise terms, ``"leverage"`` triples
    their first covariate after the response has been generated, and
    ``"none"`` leaves the data alone.  The same base draws are used
    for all three settings of a replicate, so contrasts are paired.
    """

    beta_preset: str = "sparse"
    contamination: str = "none"
    n: int = 100
    rho: float = 0.5
    sigma: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.beta_preset not in REGRESSION_PRESETS:
            raise ConfigurationError(
                f"unknown coefficient preset {self.beta_preset!r}; "
                f"choose from {sorted(REGRESSION_PRESETS)}"
            )
        if self.contamination not in CONTAMINATIONS:
            raise ConfigurationError(
                f"unknown contamination {self.contamination!r}; "
                f"choose from {CONTAMINATIONS}"
            )
        if self.n < 20:
            raise ConfigurationError("regression scenario needs n >= 20")

    @property
    def beta_true(self):
        return np.asarray(REGRESSION_PRESETS[self.beta_preset])

    @property
    def p(self):
        return self.beta_true.size

    @property
    def covariance(self):
        idx = np.arange(self.p)
        return self.rho ** np.abs(idx[:, None] - idx[None, :])

    @property
    def n_contaminated(self):
        return math.ceil(0.05 * self.n)


@dataclass(frozen=True)
class ClassificationScenario:
    """Two spherical Gaussian classes separated along the first axis.

    Class means sit at +/- delta/2 on the first coordinate, so the
    Bayes rule is the first coordinate alone and its error rate is
    Phi(-delta/2).  Training samples have exactly n/2 cases per class;
    ``flip_fraction`` of them (rounded) get their labels negated.
    """

    separation: str = "intermediate"
    flip_fraction: float = 0.0
    n: int = 100
    dim: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.separation not in SEPARATIONS:
            raise ConfigurationError(
                f"unknown separation {self.separation!r}; "
                f"choose from {sorted(SEPARATIONS)}"
            )
        if not 0.0 <= self.flip_fraction < 0.5:
            raise ConfigurationError("flip_fraction must lie in [0, 0.5)")
        if self.n % 2:
            raise ConfigurationError("n must be even for a 50/50 split")

    @property
    def delta(self):
        return SEPARATIONS[self.separation]

    @property
    def mean(self):
        mu = np.zeros(self.dim)
        mu[0] = 0.5 * self.delta
        return mu

    @property
    def bayes_error(self):
        return float(stats.norm.cdf(-0.5 * self.delta))

    @property
    def n_flips(self):
        return round(self.flip_fraction * self.n)


@dataclass
class StudyReport:
    """Tabular study output: one row per replicate and method.

    ``scenario`` is a plain-JSON descriptor (including the seed), so a
    report can be reproduced exactly from its own metadata.  ``rows``
    are ordered by replicate then method.
    """

    kind: str
    scenario: dict
    columns: tuple
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _map_replicates(worker, replicates, threads=None):
    indices = range(replicates)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, indices))
    return [worker(i) for i in indices]


# ---------------------------------------------------------------------------
# regression study


def _draw_regression(scenario, rep):
    rng = substream(scenario.seed, rep)
    chol = np.linalg.cholesky(scenario.covariance)
    X = rng.standard_normal((scenario.n, scenario.p)) @ chol.T
    eps = rng.standard_normal(scenario.n)
    return X, eps


def _regression_datasets(scenario, rep):
    """All three contamination settings built from one set of base draws."""
    X, eps = _draw_regression(scenario, rep)
    m = scenario.n_contaminated
    clean_y = X @ scenario.beta_true + scenario.sigma * eps

    eps_c = eps.copy()
    eps_c[:m] *= 3.0
    eps_y = X @ scenario.beta_true + scenario.sigma * eps_c

    X_c = X.copy()
    X_c[:m, 0] *= 3.0

    return {
        "none": make_dataset(X, clean_y),
        "epsilon": make_dataset(X, eps_y),
        "leverage": make_dataset(X_c, clean_y),
    }


def _cp_select(path, sigma2, n):
    scores = [
        cp_score(path.rss[j], int(path.df[j]), sigma2, n)
        for j in range(len(path.lambdas))
    ]
    return int(np.argmin(scores))


def _lasso_cp_fit(data):
    """Lasso path with C_p selection; noise variance from the full OLS fit."""
    full = solvers.fit_least_squares(data)
    resid = data.y - full.predict(data.raw_X)
    dof = data.n - data.p - 1
    sigma2 = float(resid @ resid) / dof
    path = solvers.fit_lasso_path(data)
    j = _cp_select(path, sigma2, data.n)
    beta_raw = path.betas[j] / data.scales
    return beta_raw, int(path.df[j])


def _robust_lasso_cp_fit(data, k, max_rounds=30, tol=1e-8):
    """Alternate lasso-with-C_p fits and residual winsorization.

    The bending constant is k times a robust scale taken from the
    initial full-model residuals and held fixed; C_p uses the squared
    normalized MAD of those residuals, which stays calm under
    contamination where the classical estimate inflates.
    """
    full = solvers.fit_least_squares(data)
    resid = data.y - full.predict(data.raw_X)
    sigma_hat = tuning.robust_scale(resid)
    lam_gamma = k * sigma_hat
    sigma2 = sigma_hat**2

    # one penalty grid for all rounds, so solutions warm-start cleanly
    grid = solvers.default_lambda_grid(data)
    ystar = data.y
    warm = None
    beta_raw = np.zeros(data.p)
    size = 0
    for _ in range(max_rounds):
        work = data.with_response(ystar)
        path = solvers.fit_lasso_path(work, lambda_grid=grid, warm=warm)
        warm = path.betas
        j = _cp_select(path, sigma2, data.n)
        beta_std = path.betas[j]
        beta_raw = beta_std / data.scales
        size = int(path.df[j])
        fitted = path.intercepts[j] + work.X @ beta_std
        r = data.y - fitted
        nxt = fitted + np.clip(r, -lam_gamma, lam_gamma)
        if np.max(np.abs(nxt - ystar)) <= tol * (1.0 + np.max(np.abs(data.y))):
            ystar = nxt
            break
        ystar = nxt
    return beta_raw, size


def run_regression_study(scenario, replicates, k=2.0, threads=None):
    """Paired lasso / robust-lasso comparison over blocked replicates.

    Every replicate is fit under all three contamination settings from
    shared base draws, regardless of ``scenario.contamination``; that
    field only marks which setting the caller considers primary.  Rows
    carry the scenario-relative model-size delta needed for the
    selection-stability table.
    """
    if replicates < 1:
        raise ConfigurationError("replicates must be positive")
    beta_true = scenario.beta_true
    cov = scenario.covariance

    def mse(beta_raw):
        d = beta_raw - beta_true
        return float(d @ cov @ d)

    def one(rep):
        datasets = _regression_datasets(scenario, rep)
        out = []
        sizes = {}
        for setting in CONTAMINATIONS:
            ds = datasets[setting]
            for method, fitfun in (
                ("lasso_cp", _lasso_cp_fit),
                ("robust_lasso_cp", lambda d: _robust_lasso_cp_fit(d, k)),
            ):
                beta_raw, size = fitfun(ds)
                sizes[(setting, method)] = size
                out.append((rep, setting, method, mse(beta_raw), size))
        rows = []
        for rep_, setting, method, m, size in out:
            delta = size - sizes[("none", method)]
            rows.append((rep_, setting, method, m, size, delta))
        return rows

    all_rows = [r for chunk in _map_replicates(one, replicates, threads) for r in chunk]

    summary = {"k": k, "replicates": replicates}
    for setting in CONTAMINATIONS:
        for method in ("lasso_cp", "robust_lasso_cp"):
            vals = [r[3] for r in all_rows if r[1] == setting and r[2] == method]
            summary[f"mse_{setting}_{method}"] = float(np.mean(vals))
    base = summary["mse_none_lasso_cp"]
    summary["base_ratio"] = summary["mse_none_robust_lasso_cp"] / base
    for setting in ("epsilon", "leverage"):
        for method in ("lasso_cp", "robust_lasso_cp"):
            summary[f"factor_{setting}_{method}"] = (
                summary[f"mse_{setting}_{method}"] / base
            )

    return StudyReport(
        kind="regression",
        scenario={
            "beta_preset": scenario.beta_preset,
            "n": scenario.n,
            "rho": scenario.rho,
            "sigma": scenario.sigma,
            "seed": scenario.seed,
            "k": k,
            "replicates": replicates,
        },
        columns=("replicate", "setting", "method", "mse_beta", "model_size", "size_delta"),
        rows=all_rows,
        summary=summary,
    )


def size_delta_table(report, setting, method, span=3):
    """Histogram of model-size deltas, tails accumulated at +/-span."""
    deltas = [
        r[5] for r in report.rows if r[1] == setting and r[2] == method
    ]
    cells = {d: 0 for d in range(-span, span + 1)}
    for d in deltas:
        cells[int(np.clip(d, -span, span))] += 1
    return cells


# ---------------------------------------------------------------------------
# classification study


def fit_lda(data):
    """Pooled-covariance linear discriminant direction for +/-1 labels.

    Returns (w, b) on the raw covariate scale with equal priors.
    """
    X = data.raw_X
    y = data.y
    pos = X[y > 0]
    neg = X[y < 0]
    if len(pos) < 2 or len(neg) < 2:
        raise ConfigurationError("LDA needs at least two cases per class")
    mu_p = pos.mean(axis=0)
    mu_n = neg.mean(axis=0)
    Sp = np.cov(pos, rowvar=False, ddof=1)
    Sn = np.cov(neg, rowvar=False, ddof=1)
    S = ((len(pos) - 1) * Sp + (len(neg) - 1) * Sn) / (len(pos) + len(neg) - 2)
    w = np.linalg.solve(S, mu_p - mu_n)
    b = -0.5 * float(w @ (mu_p + mu_n))
    return w, b


def analytic_error_rate(w, b, mean):
    """Exact error of sign(w.x + b) under the symmetric Gaussian mixture.

    Classes are N(mean, I) and N(-mean, I) with equal priors.  A zero
    direction has no defined rule; the caller must screen it out.
    """
    w = np.asarray(w, dtype=float)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ConfigurationError("degenerate direction: w = 0")
    proj = float(w @ mean)
    return float(
        0.5 * stats.norm.cdf(-(b + proj) / norm)
        + 0.5 * stats.norm.cdf((b - proj) / norm)
    )


def _draw_classification(scenario, rep):
    rng = substream(scenario.seed, rep)
    half = scenario.n // 2
    mu = scenario.mean
    X = np.vstack(
        [
            mu + rng.standard_normal((half, scenario.dim)),
            -mu + rng.standard_normal((half, scenario.dim)),
        ]
    )
    y = np.r_[np.ones(half), -np.ones(half)]
    if scenario.n_flips:
        idx = rng.choice(scenario.n, size=scenario.n_flips, replace=False)
        y[idx] = -y[idx]
    return X, y


def _fit_classifier(method, data, lambda_beta):
    if method == "svm":
        fit = solvers.fit_svm(data, variant="hinge", lambda_beta=lambda_beta)
    elif method.startswith("hsvm_k"):
        k = float(method.split("k", 1)[1])
        fit = solvers.fit_svm(data, variant="huberized", k=k, lambda_beta=lambda_beta)
    elif method == "ssvm":
        fit = solvers.fit_svm(data, variant="squared_hinge", lambda_beta=lambda_beta)
    elif method == "lr":
        fit = solvers.fit_logistic(data, lambda_beta=lambda_beta)
    elif method.startswith("linlr_k"):
        k = float(method.split("k", 1)[1])
        fit = solvers.fit_logistic(data, linearized=k, lambda_beta=lambda_beta)
    elif method == "lda":
        return fit_lda(data)
    else:
        raise ConfigurationError(f"unknown classifier {method!r}")
    return fit.beta_raw, fit.intercept_raw


def run_classification_study(
    scenario, replicates, methods=CLASSIFIER_IDS, lambda_beta=1e-4, threads=None
):
    """Mean analytic error rates of linear classifiers over replicates.

    The coefficient ridge is kept tiny so the margin methods behave as
    nearly unpenalized fits while staying well posed under separation.
    Replicates whose fitted direction vanishes are excluded from the
    means and counted in the summary.
    """
    if replicates < 1:
        raise ConfigurationError("replicates must be positive")
    mu = scenario.mean
    bayes = scenario.bayes_error

    def one(rep):
        X, y = _draw_classification(scenario, rep)
        data = make_dataset(X, y, response_kind=BINARY)
        rows = []
        for method in methods:
            w, b = _fit_classifier(method, data, lambda_beta)
            if np.linalg.norm(w) == 0.0:
                rows.append((rep, method, float("nan"), float("nan"), 1))
                continue
            err = analytic_error_rate(w, b, mu)
            rows.append((rep, method, err, err - bayes, 0))
        return rows

    all_rows = [r for chunk in _map_replicates(one, replicates, threads) for r in chunk]

    summary = {"bayes_error": bayes, "replicates": replicates}
    for method in methods:
        errs = [r[2] for r in all_rows if r[1] == method and not r[4]]
        dropped = sum(r[4] for r in all_rows if r[1] == method)
        summary[f"mean_error_{method}"] = float(np.mean(errs)) if errs else float("nan")
        summary[f"sd_error_{method}"] = (
            float(np.std(errs, ddof=1)) if len(errs) > 1 else float("nan")
        )
        summary[f"degenerate_{method}"] = int(dropped)

    return StudyReport(
        kind="classification",
        scenario={
            "separation": scenario.separation,
            "flip_fraction": scenario.flip_fraction,
            "n": scenario.n,
            "dim": scenario.dim,
            "seed": scenario.seed,
            "replicates": replicates,
            "lambda_beta": lambda_beta,
        },
        columns=("replicate", "method", "error_rate", "excess_error", "degenerate"),
        rows=all_rows,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# quantile study


def error_quantile(error_dist, q, df=3):
    """Population q-quantile of the named error distribution."""
    if error_dist == "normal":
        return float(stats.norm.ppf(q))
    if error_dist == "t":
        return float(stats.t.ppf(q, df))
    if error_dist == "skewed":
        return float(stats.chi2.ppf(q, df) - stats.chi2.ppf(0.5, df))
    raise ConfigurationError(
        f"unknown error distribution {error_dist!r}; choose from {ERROR_DISTRIBUTIONS}"
    )


def _draw_errors(rng, n, error_dist, df):
    if error_dist == "normal":
        return rng.standard_normal(n)
    if error_dist == "t":
        return rng.standard_t(df, size=n)
    # shifted to median zero so the intercept stays comparable across dists
    return rng.chisquare(df, size=n) - stats.chi2.ppf(0.5, df)


def fit_quantile_pair(data, q, alpha=0.3, c_scale=0.5):
    """Standard fit and its rule-tuned quadratic adjustment.

    The robust scale feeding the rule comes from the standard fit's
    residuals.  Returns (plain, modified, lambda_gamma).
    """
    plain = solvers.fit_quantile(data, q)
    resid = data.y - plain.predict(data.raw_X)
    sigma_hat = tuning.robust_scale(resid)
    lam = tuning.lambda_gamma_quantile(
        q, data.n, sigma_hat, alpha=alpha, c_scale=c_scale
    )
    spec = EffectiveLossSpec(LossSpec(Family.CHECK, q=q), lam, GammaNorm.ASYMMETRIC_L2)
    modified = solvers.fit_quantile(data, q, effective=spec)
    return plain, modified, lam


def run_quantile_study(
    q_levels=(0.5,),
    n_grid=(100,),
    error_dist="normal",
    replicates=100,
    seed=0,
    alpha=0.3,
    df=3,
    mc_points=10_000,
    intercept_true=1.0,
    beta_true=None,
    rho=0.5,
    threads=None,
):
    """Integrated squared error of fitted quantile surfaces, both methods.

    Data follow a linear model on the same correlated Gaussian design
    the regression study uses; ``beta_true`` defaults to the
    intermediate coefficient preset.  The true q-th quantile surface is
    the regression surface shifted by the error distribution's
    population quantile, and each fit's error is averaged over a Monte
    Carlo draw of new design points shared by every replicate.
    """
    if replicates < 1:
        raise ConfigurationError("replicates must be positive")
    for q in q_levels:
        if not 0.0 < q < 1.0:
            raise ConfigurationError("quantile levels must lie in (0, 1)")
    if not -1.0 < rho < 1.0:
        raise ConfigurationError("rho must lie in (-1, 1)")
    beta_arr = np.asarray(
        REGRESSION_PRESETS["intermediate"] if beta_true is None else beta_true,
        dtype=float,
    )
    if beta_arr.ndim != 1 or beta_arr.size == 0:
        raise ConfigurationError("beta_true must be a nonempty vector")
    p = beta_arr.size
    idx = np.arange(p)
    chol = np.linalg.cholesky(rho ** np.abs(idx[:, None] - idx[None, :]))
    x_new = substream(seed, 10**6).standard_normal((mc_points, p)) @ chol.T
    surface = intercept_true + x_new @ beta_arr

    rows = []
    for q in q_levels:
        shift = error_quantile(error_dist, q, df)
        for n in n_grid:

            def one(rep, q=q, n=n, shift=shift):
                rng = substream(seed, rep)
                X = rng.standard_normal((n, p)) @ chol.T
                eps = _draw_errors(rng, n, error_dist, df)
                y = intercept_true + X @ beta_arr + eps
                data = make_dataset(X, y)
                plain, modified, lam = fit_quantile_pair(data, q, alpha=alpha)
                truth = surface + shift
                out = []
                for label, fit in (("qr", plain), ("qr_m", modified)):
                    pred = fit.intercept_raw + x_new @ fit.beta_raw
                    out.append(
                        (q, n, rep, label, float(np.mean((pred - truth) ** 2)), lam)
                    )
                return out

            rows.extend(
                r for chunk in _map_replicates(one, replicates, threads) for r in chunk
            )

    summary = {"error_dist": error_dist, "alpha": alpha, "replicates": replicates}
    for q in q_levels:
        for n in n_grid:
            key = f"q{q}_n{n}"
            mses = {
                label: [
                    r[4] for r in rows if r[0] == q and r[1] == n and r[3] == label
                ]
                for label in ("qr", "qr_m")
            }
            summary[f"mse_qr_{key}"] = float(np.mean(mses["qr"]))
            summary[f"mse_qr_m_{key}"] = float(np.mean(mses["qr_m"]))
            wins = sum(
                m <= p for m, p in zip(mses["qr_m"], mses["qr"], strict=True)
            )
            summary[f"wins_qr_m_{key}"] = int(wins)

    return StudyReport(
        kind="quantile",
        scenario={
            "q_levels": list(q_levels),
            "n_grid": list(n_grid),
            "error_dist": error_dist,
            "df": df,
            "seed": seed,
            "alpha": alpha,
            "replicates": replicates,
            "mc_points": mc_points,
            "intercept_true": intercept_true,
            "beta_true": beta_arr.tolist(),
            "rho": rho,
        },
        columns=("q", "n", "replicate", "method", "mse", "lambda_gamma"),
        rows=rows,
        summary=summary,
    )
