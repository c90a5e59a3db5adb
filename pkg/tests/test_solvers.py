import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import linprog, minimize
from scipy.special import expit

from casereg.data import BINARY, make_dataset
from casereg.errors import ConfigurationError, ConvergenceError, RankDeficiencyError
from casereg.losses import EffectiveLossSpec, Family, GammaNorm, LossSpec
from casereg.solvers import (
    default_lambda_grid,
    fit_exponential,
    fit_lasso,
    fit_lasso_path,
    fit_least_squares,
    fit_logistic,
    fit_quantile,
    fit_svm,
    lasso_lambda_max,
)

cvxpy = pytest.importorskip("cvxpy")


def regression_data(seed=0, n=80, p=4, noise="normal"):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    X[:, -1] += 0.5 * X[:, 0]
    beta = np.linspace(1.0, -1.0, p)
    if noise == "normal":
        eps = rng.standard_normal(n)
    else:
        eps = rng.standard_t(3, n)
    return make_dataset(X, 0.7 + X @ beta + eps)


def classification_data(seed=0, n=120, p=3, sep=1.2):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    w = np.linspace(1.0, 0.4, p)
    y = np.where(rng.uniform(size=n) < expit(sep * (X @ w)), 1.0, -1.0)
    y[:2] = [1.0, -1.0]  # guarantee both classes
    return make_dataset(X, y, response_kind=BINARY)


def augmented(data):
    return np.column_stack([np.ones(data.n), data.X])


# --- least squares --------------------------------------------------------


def test_least_squares_matches_lstsq():
    data = regression_data(1)
    fit = fit_least_squares(data)
    A = np.column_stack([np.ones(data.n), data.raw_X])
    ref, *_ = np.linalg.lstsq(A, data.y, rcond=None)
    assert abs(fit.intercept_raw - ref[0]) < 1e-9
    assert_allclose(fit.beta_raw, ref[1:], atol=1e-9)
    assert fit.converged


def test_ridge_closed_form():
    data = regression_data(2)
    lam = 3.5
    fit = fit_least_squares(data, lambda_beta=lam)
    Xt = augmented(data)
    mask = np.ones(data.p + 1)
    mask[0] = 0.0
    theta = np.linalg.solve(Xt.T @ Xt + lam * np.diag(mask), Xt.T @ data.y)
    assert abs(fit.intercept - theta[0]) < 1e-10
    assert_allclose(fit.beta, theta[1:], atol=1e-10)
    plain = fit_least_squares(data)
    assert np.linalg.norm(fit.beta) < np.linalg.norm(plain.beta)


def test_rank_deficiency_raises():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((40, 3))
    X = np.column_stack([X, X[:, 0]])
    data = make_dataset(X, rng.standard_normal(40))
    with pytest.raises(RankDeficiencyError, match="rank deficient"):
        fit_least_squares(data)
    fit_least_squares(data, lambda_beta=1.0)  # ridge rescues it


def test_least_squares_validation():
    with pytest.raises(ConfigurationError, match="nonnegative"):
        fit_least_squares(regression_data(0), lambda_beta=-1.0)


# --- lasso ----------------------------------------------------------------


def orthogonal_design_data(seed=4, n=60, p=5):
    # columns orthonormal and orthogonal to the intercept, so after
    # standardization X'X = n*I and the lasso has a closed form
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(np.column_stack([np.ones(n), rng.standard_normal((n, p))]))
    X = Q[:, 1:]
    y = rng.standard_normal(n) + X @ np.linspace(3.0, -3.0, p)
    return make_dataset(X, y)


def test_lasso_orthogonal_oracle():
    data = orthogonal_design_data()
    n = data.n
    yc = data.y - data.y.mean()
    z = data.X.T @ yc
    for lam in (0.5 * np.abs(z).max(), 0.1 * np.abs(z).max()):
        fit = fit_lasso(data, lam)
        expect = np.sign(z) * np.maximum(np.abs(z) - lam, 0.0) / n
        assert_allclose(fit.beta, expect, atol=1e-8)


def test_lasso_kkt():
    data = regression_data(5, n=100, p=6)
    lam = 0.5 * lasso_lambda_max(data)
    fit = fit_lasso(data, lam)
    Xc = data.X - data.X.mean(axis=0)
    yc = data.y - data.y.mean()
    grad = Xc.T @ (yc - Xc @ fit.beta)
    active = fit.beta != 0.0
    assert np.all(np.abs(grad[active] - lam * np.sign(fit.beta[active])) < 1e-6)
    assert np.all(np.abs(grad[~active]) < lam + 1e-6)
    assert 0 < np.count_nonzero(active) < data.p


def test_lasso_lambda_max_boundary():
    data = regression_data(6)
    lam_max = lasso_lambda_max(data)
    assert np.all(fit_lasso(data, lam_max).beta == 0.0)
    assert np.count_nonzero(fit_lasso(data, 0.95 * lam_max).beta) >= 1
    grid = default_lambda_grid(data, n_lambdas=20)
    assert abs(grid[0] - lam_max) < 1e-12
    assert grid.size == 20 and np.all(np.diff(grid) < 0)


def test_lasso_path_matches_single_fits():
    data = regression_data(7, n=90, p=5)
    path = fit_lasso_path(data, n_lambdas=12)
    assert len(path) == 12
    for i, lam in enumerate(path.lambdas):
        single = fit_lasso(data, lam)
        assert_allclose(path.betas[i], single.beta, atol=1e-7)
        assert abs(path.intercepts[i] - single.intercept) < 1e-7
        assert path.df[i] == np.count_nonzero(single.beta)
        Xc = data.X - data.X.mean(axis=0)
        yc = data.y - data.y.mean()
        r = yc - Xc @ path.betas[i]
        assert abs(path.rss[i] - r @ r) < 1e-8


def test_lasso_validation():
    data = regression_data(0)
    with pytest.raises(ConfigurationError, match="positive"):
        fit_lasso(data, 0.0)
    with pytest.raises(ConfigurationError, match="positive"):
        fit_lasso_path(data, lambda_grid=[1.0, -2.0])
    with pytest.raises(ConfigurationError, match="warm start"):
        fit_lasso_path(data, lambda_grid=[1.0, 0.5], warm=np.zeros((3, data.p)))


# --- quantile regression --------------------------------------------------


def quantile_lp_optimum(data, q):
    Xt = augmented(data)
    n, k = Xt.shape
    # min q*1'u + (1-q)*1'v  s.t.  Xt@theta + u - v = y,  u, v >= 0
    c = np.concatenate([np.zeros(k), np.full(n, q), np.full(n, 1.0 - q)])
    A_eq = np.hstack([Xt, np.eye(n), -np.eye(n)])
    bounds = [(None, None)] * k + [(0.0, None)] * (2 * n)
    res = linprog(c, A_eq=A_eq, b_eq=data.y, bounds=bounds, method="highs")
    assert res.status == 0
    return res.fun, res.x[:k]


@pytest.mark.parametrize("q", [0.25, 0.5, 0.9])
def test_quantile_matches_lp(q):
    data = regression_data(8, n=80, p=4, noise="t")
    fit = fit_quantile(data, q)
    f_lp, _ = quantile_lp_optimum(data, q)
    assert abs(fit.objective - f_lp) < 1e-9 * (1.0 + abs(f_lp))
    assert fit.converged


def test_quantile_residual_sign_counts():
    data = regression_data(9, n=101, p=3)
    for q in (0.3, 0.5, 0.8):
        fit = fit_quantile(data, q)
        r = data.y - fit.predict(data.raw_X)
        below = np.sum(r < -1e-9) / data.n
        at_or_below = np.sum(r < 1e-9) / data.n
        assert below <= q + 1e-9 <= at_or_below + 1e-9


def test_quantile_interpolates_points():
    data = regression_data(10, n=70, p=4)
    fit = fit_quantile(data, 0.5)
    r = data.y - fit.predict(data.raw_X)
    assert np.sum(np.abs(r) < 1e-8) >= data.p + 1


def test_quantile_permutation_invariance():
    data = regression_data(11, n=60, p=3)
    perm = np.random.default_rng(12).permutation(data.n)
    shuffled = make_dataset(data.raw_X[perm], data.y[perm])
    a = fit_quantile(data, 0.5)
    b = fit_quantile(shuffled, 0.5)
    assert abs(a.objective - b.objective) < 1e-9
    assert_allclose(a.beta_raw, b.beta_raw, atol=1e-7)


def effective_check_optimum_cvxpy(data, q, lam):
    b = cvxpy.Variable(data.p)
    a = cvxpy.Variable()
    g = cvxpy.Variable(data.n)
    r = data.y - a - data.X @ b - g
    check = q * cvxpy.sum(cvxpy.pos(r)) + (1 - q) * cvxpy.sum(cvxpy.pos(-r))
    pen = 0.5 * lam * (
        (q / (1 - q)) * cvxpy.sum_squares(cvxpy.pos(g))
        + ((1 - q) / q) * cvxpy.sum_squares(cvxpy.pos(-g))
    )
    prob = cvxpy.Problem(cvxpy.Minimize(check + pen))
    prob.solve()
    return prob.value


@pytest.mark.parametrize("q,lam", [(0.5, 0.4), (0.25, 0.8)])
def test_quantile_effective_matches_cvxpy(q, lam):
    data = regression_data(13, n=60, p=3, noise="t")
    spec = EffectiveLossSpec(LossSpec(Family.CHECK, q=q), lam, GammaNorm.ASYMMETRIC_L2)
    fit = fit_quantile(data, q, effective=spec)
    ref = effective_check_optimum_cvxpy(data, q, lam)
    assert abs(fit.objective - ref) < 1e-5 * (1.0 + abs(ref))
    assert fit.lambda_gamma == lam
    trace = fit.objective_trace
    assert np.all(np.diff(trace) <= 1e-12)


def test_quantile_validation():
    data = regression_data(0)
    with pytest.raises(ConfigurationError, match="q must be"):
        fit_quantile(data, 1.5)
    wrong_q = EffectiveLossSpec(
        LossSpec(Family.CHECK, q=0.3), 1.0, GammaNorm.ASYMMETRIC_L2
    )
    with pytest.raises(ConfigurationError, match="same quantile"):
        fit_quantile(data, 0.5, effective=wrong_q)


# --- logistic and exponential margins -------------------------------------


def logistic_objective_factory(data, lam):
    Xt = augmented(data)
    mask = np.ones(Xt.shape[1])
    mask[0] = 0.0

    def value(theta):
        tau = data.y * (Xt @ theta)
        return float(np.sum(np.logaddexp(0.0, -tau))) + 0.5 * lam * float(
            np.sum(mask * theta**2)
        )

    def grad(theta):
        tau = data.y * (Xt @ theta)
        return -Xt.T @ (data.y * expit(-tau)) + lam * mask * theta

    return value, grad


def test_logistic_matches_reference_optimizer():
    data = classification_data(14)
    lam = 1e-3
    fit = fit_logistic(data, lambda_beta=lam)
    value, grad = logistic_objective_factory(data, lam)
    theta = np.concatenate([[fit.intercept], fit.beta])
    assert np.max(np.abs(grad(theta))) < 1e-7
    ref = minimize(
        value, np.zeros(data.p + 1), jac=grad, method="BFGS",
        options={"gtol": 1e-10, "maxiter": 2000},
    )
    assert_allclose(theta, ref.x, atol=1e-5)
    assert abs(fit.objective - value(theta)) < 1e-9


def test_linearized_logistic_far_bend_matches_plain():
    data = classification_data(15)
    plain = fit_logistic(data, lambda_beta=1e-2)
    # a bend at margin -20 leaves every observed margin on the smooth side
    bent = fit_logistic(data, linearized=-20.0, lambda_beta=1e-2)
    assert_allclose(bent.beta, plain.beta, atol=1e-6)
    assert bent.lambda_gamma == pytest.approx(1.0 / (1.0 + np.exp(-20.0)))


def test_logistic_separation_guard():
    # separable, with two points so close to the boundary that driving the
    # empirical gradient to zero needs coefficients past the norm guard
    x = np.array([-1.0, -1e-7, 1e-7, 1.0, -0.9, 0.9, -1.1, 1.1])
    data = make_dataset(x.reshape(-1, 1), np.sign(x), response_kind=BINARY)
    with pytest.raises(ConvergenceError, match="separated"):
        fit_logistic(data)
    fit = fit_logistic(data, lambda_beta=1e-2)  # ridge restores a finite fit
    assert fit.converged


def test_logistic_sample_weights_replicate_rows():
    data = classification_data(16, n=40)
    doubled = make_dataset(
        np.vstack([data.raw_X, data.raw_X]),
        np.concatenate([data.y, data.y]),
        response_kind=BINARY,
    )
    lam = 1e-2
    weighted = fit_logistic(data, lambda_beta=lam, sample_weight=np.full(data.n, 2.0))
    stacked = fit_logistic(doubled, lambda_beta=lam)
    assert_allclose(weighted.beta_raw, stacked.beta_raw, atol=1e-6)


def test_logistic_margin_offset():
    data = classification_data(17, n=60)
    rng = np.random.default_rng(18)
    off = rng.normal(scale=0.3, size=data.n)
    lam = 1e-2
    fit = fit_logistic(data, lambda_beta=lam, margin_offset=off)
    Xt = augmented(data)
    mask = np.ones(data.p + 1)
    mask[0] = 0.0
    theta = np.concatenate([[fit.intercept], fit.beta])
    tau = data.y * (Xt @ theta) + off
    g = -Xt.T @ (data.y * expit(-tau)) + lam * mask * theta
    assert np.max(np.abs(g)) < 1e-7


def test_exponential_gradient_zero():
    data = classification_data(19)
    lam = 1e-2
    fit = fit_exponential(data, lambda_beta=lam)
    Xt = augmented(data)
    mask = np.ones(data.p + 1)
    mask[0] = 0.0
    theta = np.concatenate([[fit.intercept], fit.beta])
    tau = data.y * (Xt @ theta)
    g = -Xt.T @ (data.y * np.exp(-tau)) + lam * mask * theta
    assert np.max(np.abs(g)) < 1e-7
    assert np.all(np.diff(fit.objective_trace) <= 1e-12)


def test_labels_required():
    data = regression_data(0)
    for fitter in (fit_logistic, fit_exponential, fit_svm):
        with pytest.raises(ConfigurationError, match="labels"):
            fitter(data)


# --- svm variants ---------------------------------------------------------


def hinge_optimum_cvxpy(data, lam):
    b = cvxpy.Variable(data.p)
    a = cvxpy.Variable()
    tau = cvxpy.multiply(data.y, data.X @ b + a)
    obj = cvxpy.sum(cvxpy.pos(1.0 - tau)) + 0.5 * lam * cvxpy.sum_squares(b)
    prob = cvxpy.Problem(cvxpy.Minimize(obj))
    prob.solve()
    return prob.value


def test_hinge_matches_cvxpy():
    data = classification_data(20, n=80)
    lam = 1e-2
    fit = fit_svm(data, variant="hinge", lambda_beta=lam)
    ref = hinge_optimum_cvxpy(data, lam)
    assert abs(fit.objective - ref) < 1e-4 * (1.0 + abs(ref))


def test_squared_hinge_matches_reference_optimizer():
    data = classification_data(21, n=80)
    lam = 1e-2
    fit = fit_svm(data, variant="squared_hinge", lambda_beta=lam)
    Xt = augmented(data)
    mask = np.ones(data.p + 1)
    mask[0] = 0.0

    def value(theta):
        u = np.maximum(1.0 - data.y * (Xt @ theta), 0.0)
        return float(np.sum(u**2)) + 0.5 * lam * float(np.sum(mask * theta**2))

    def grad(theta):
        u = np.maximum(1.0 - data.y * (Xt @ theta), 0.0)
        return -2.0 * Xt.T @ (data.y * u) + lam * mask * theta

    ref = minimize(
        value, np.zeros(data.p + 1), jac=grad, method="BFGS",
        options={"gtol": 1e-10, "maxiter": 2000},
    )
    theta = np.concatenate([[fit.intercept], fit.beta])
    assert abs(fit.objective - ref.fun) < 1e-8 * (1.0 + abs(ref.fun))
    assert_allclose(theta, ref.x, atol=1e-5)


def test_huberized_matches_reference_optimizer():
    data = classification_data(22, n=80)
    lam_beta = 1e-2
    k = 0.2
    lam = 1.0 / (1.0 - k)
    fit = fit_svm(data, variant="huberized", k=k, lambda_beta=lam_beta)
    Xt = augmented(data)
    mask = np.ones(data.p + 1)
    mask[0] = 0.0

    def value(theta):
        u = np.maximum(1.0 - data.y * (Xt @ theta), 0.0)
        per = np.where(u <= 1.0 - k, 0.5 * lam * u**2, u - 0.5 * (1.0 - k))
        return float(np.sum(per)) + 0.5 * lam_beta * float(np.sum(mask * theta**2))

    def grad(theta):
        u = np.maximum(1.0 - data.y * (Xt @ theta), 0.0)
        slope = np.where(u <= 1.0 - k, lam * u, 1.0)
        return -Xt.T @ (data.y * slope) + lam_beta * mask * theta

    ref = minimize(
        value, np.zeros(data.p + 1), jac=grad, method="L-BFGS-B",
        options={"gtol": 1e-11, "ftol": 1e-15, "maxiter": 5000},
    )
    assert abs(fit.objective - ref.fun) < 1e-6 * (1.0 + abs(ref.fun))
    assert fit.lambda_gamma == pytest.approx(lam)


def test_huberized_approaches_hinge():
    data = classification_data(23, n=60)
    k = 0.998
    hub = fit_svm(data, variant="huberized", k=k, lambda_beta=1e-2)
    hinge = fit_svm(data, variant="hinge", lambda_beta=1e-2)
    # the rounded corner sits below the hinge by at most (1-k)/2 per case
    assert abs(hub.objective - hinge.objective) < 0.5 * (1.0 - k) * data.n + 1e-4


def test_svm_validation():
    data = classification_data(0)
    with pytest.raises(ConfigurationError, match="unknown svm variant"):
        fit_svm(data, variant="perceptron")
    with pytest.raises(ConfigurationError, match="huberized"):
        fit_svm(data, variant="squared_hinge", k=0.5)
    with pytest.raises(ConfigurationError, match="k < 1"):
        fit_svm(data, variant="huberized", k=1.2)
    with pytest.raises(ConfigurationError, match="nonnegative"):
        fit_svm(data, lambda_beta=-0.5)


# --- solver failure reporting ---------------------------------------------


def test_convergence_error_carries_trace():
    data = classification_data(24)
    with pytest.raises(ConvergenceError) as err:
        fit_logistic(data, lambda_beta=1e-3, max_iter=1, gtol=1e-16)
    assert err.value.trace is not None
    assert len(err.value.trace) >= 1
