"""Model fitters on standardized designs.

Objective conventions, with r = y - f and tau = y * f:

- least squares:  0.5*sum r^2 + (lambda_beta/2)*||beta||^2
- lasso:          0.5*sum r^2 + lambda_beta*||beta||_1
- quantile:       sum of check losses (no coefficient penalty)
- margin losses:  sum of losses + (lambda_beta/2)*||beta||^2

The intercept is never penalized.  Every iterative fitter carries its
objective trace; hitting the iteration cap raises ConvergenceError with the
trace attached rather than returning silently.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import expit

from . import losses
from .case_adjust import GammaVector
from .data import raw_coefficients
from .errors import ConfigurationError, ConvergenceError, RankDeficiencyError
from .losses import EffectiveLossSpec, Family, GammaNorm, LossSpec

MAX_ITER = 10_000


@dataclass
class FitResult:
    """Fitted coefficients on both scales plus solver diagnostics."""

    beta: np.ndarray
    intercept: float
    beta_raw: np.ndarray
    intercept_raw: float
    objective: float
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    lambda_beta: float = 0.0
    lambda_gamma: float | None = None
    gamma: GammaVector | None = None

    def predict_standardized(self, X_std):
        return self.intercept + np.asarray(X_std) @ self.beta

    def predict(self, X_raw):
        return self.intercept_raw + np.asarray(X_raw) @ self.beta_raw


def design(data):
    """Augmented design matrix and the penalty mask (intercept unpenalized)."""
    if data.intercept:
        Xt = np.column_stack([np.ones(data.n), data.X])
        mask = np.ones(data.p + 1)
        mask[0] = 0.0
    else:
        Xt = data.X
        mask = np.ones(data.p)
    return Xt, mask


def _split(data, theta):
    if data.intercept:
        return float(theta[0]), np.asarray(theta[1:], dtype=float)
    return 0.0, np.asarray(theta, dtype=float)


def _result(data, theta, objective, trace, iterations, converged, **kw):
    intercept, beta = _split(data, theta)
    beta_raw, intercept_raw = raw_coefficients(data, beta, intercept)
    return FitResult(
        beta=beta,
        intercept=intercept,
        beta_raw=beta_raw,
        intercept_raw=intercept_raw,
        objective=float(objective),
        objective_trace=np.asarray(trace, dtype=float),
        iterations=int(iterations),
        converged=bool(converged),
        **kw,
    )


# === direct linear solves ===


def fit_least_squares(data, lambda_beta=0.0):
    """Ordinary or ridge least squares via the normal equations."""
    if lambda_beta < 0:
        raise ConfigurationError("lambda_beta must be nonnegative")
    Xt, mask = design(data)
    A = Xt.T @ Xt + lambda_beta * np.diag(mask)
    ev = linalg.eigvalsh(A)
    if ev[0] <= 1e-12 * max(ev[-1], 1.0):
        raise RankDeficiencyError(
            "design is rank deficient; add a ridge penalty or drop columns"
        )
    theta = linalg.solve(A, Xt.T @ data.y, assume_a="pos")
    r = data.y - Xt @ theta
    _, beta = _split(data, theta)
    obj = 0.5 * float(r @ r) + 0.5 * lambda_beta * float(beta @ beta)
    return _result(data, theta, obj, [obj], 1, True, lambda_beta=float(lambda_beta))


# === lasso by cyclic coordinate descent ===


@dataclass
class LassoPath:
    """Solution path on a descending penalty grid."""

    lambdas: np.ndarray
    intercepts: np.ndarray
    betas: np.ndarray
    df: np.ndarray
    rss: np.ndarray

    def __len__(self):
        return self.lambdas.size


def _soft(z, t):
    return math.copysign(max(abs(z) - t, 0.0), z)


def _lasso_cd(G, c0, lam, beta, kkt_tol, max_iter):
    """Cycle coordinates until the subgradient conditions hold.

    G and c0 are the Gram matrix and X'y of the centered problem; beta is
    updated in place.  Returns the sweep count.  The kernel runs on plain
    Python floats: the dimensions seen here are small enough that ndarray
    scalar indexing would dominate the runtime.
    """
    p = beta.size
    gb = (G @ beta).tolist()
    rows = G.tolist()
    diag = [rows[j][j] for j in range(p)]
    b = beta.tolist()
    c = c0.tolist()
    idx = range(p)
    sweep_tol = 1e-4 * kkt_tol + 1e-15
    for sweep in range(1, max_iter + 1):
        delta_max = 0.0
        for j in idx:
            bj_old = b[j]
            cj = c[j] - gb[j] + diag[j] * bj_old
            over = abs(cj) - lam
            bj = math.copysign(over, cj) / diag[j] if over > 0.0 else 0.0
            step = bj - bj_old
            if step != 0.0:
                b[j] = bj
                row = rows[j]
                for i in idx:
                    gb[i] += row[i] * step
                if -step > delta_max or step > delta_max:
                    delta_max = abs(step)
        if delta_max <= sweep_tol:
            beta[:] = b
            grad = c0 - np.asarray(gb)
            ok_zero = np.abs(grad[beta == 0.0]) <= lam + kkt_tol
            active = beta != 0.0
            ok_active = np.abs(grad[active] - lam * np.sign(beta[active])) <= kkt_tol
            if ok_zero.all() and ok_active.all():
                return sweep
    beta[:] = b
    raise ConvergenceError(
        f"lasso coordinate descent did not meet KKT tolerance in {max_iter} sweeps",
    )


def _centered(data):
    xbar = data.X.mean(axis=0)
    Xc = data.X - xbar
    ybar = float(data.y.mean())
    return Xc, data.y - ybar, xbar, ybar


def lasso_lambda_max(data):
    """Smallest penalty at which the lasso solution is exactly zero."""
    Xc, yc, _, _ = _centered(data)
    return float(np.max(np.abs(Xc.T @ yc)))


def default_lambda_grid(data, n_lambdas=50, min_ratio=1e-3):
    lam_max = lasso_lambda_max(data)
    if lam_max <= 0:
        raise ConfigurationError("response is orthogonal to all predictors")
    return lam_max * np.logspace(0.0, math.log10(min_ratio), n_lambdas)


def fit_lasso(data, lambda_beta, beta0=None, kkt_tol=1e-7, max_iter=MAX_ITER):
    """Single-penalty lasso fit; the intercept is profiled out exactly."""
    if not data.intercept:
        raise ConfigurationError("lasso fitter expects an intercept term")
    if lambda_beta <= 0:
        raise ConfigurationError("lambda_beta must be positive for the lasso")
    Xc, yc, xbar, ybar = _centered(data)
    G = Xc.T @ Xc
    c0 = Xc.T @ yc
    beta = np.zeros(data.p) if beta0 is None else np.array(beta0, dtype=float)
    sweeps = _lasso_cd(G, c0, float(lambda_beta), beta, kkt_tol, max_iter)
    r = yc - Xc @ beta
    obj = 0.5 * float(r @ r) + lambda_beta * float(np.abs(beta).sum())
    theta = np.concatenate([[ybar - xbar @ beta], beta])
    return _result(
        data, theta, obj, [obj], sweeps, True, lambda_beta=float(lambda_beta)
    )


def fit_lasso_path(
    data, lambda_grid=None, n_lambdas=50, min_ratio=1e-3, kkt_tol=1e-7,
    max_iter=MAX_ITER, warm=None,
):
    """Lasso path with warm starts down a descending penalty grid.

    ``warm`` may hold one starting vector per grid point (for example a
    previous path on a slightly perturbed response); otherwise each
    solve continues from its predecessor on the grid.
    """
    if not data.intercept:
        raise ConfigurationError("lasso fitter expects an intercept term")
    if lambda_grid is None:
        grid = default_lambda_grid(data, n_lambdas, min_ratio)
    else:
        grid = np.sort(np.asarray(lambda_grid, dtype=float))[::-1]
        if grid.size == 0 or grid[-1] <= 0:
            raise ConfigurationError("lambda grid must be positive")
    if warm is not None and np.shape(warm) != (grid.size, data.p):
        raise ConfigurationError("warm start shape must match (grid, p)")
    Xc, yc, xbar, ybar = _centered(data)
    G = Xc.T @ Xc
    c0 = Xc.T @ yc
    beta = np.zeros(data.p)
    betas = np.empty((grid.size, data.p))
    intercepts = np.empty(grid.size)
    rss = np.empty(grid.size)
    df = np.empty(grid.size, dtype=int)
    for i, lam in enumerate(grid):
        if warm is not None:
            beta = np.array(warm[i], dtype=float)
        _lasso_cd(G, c0, float(lam), beta, kkt_tol, max_iter)
        betas[i] = beta
        intercepts[i] = ybar - xbar @ beta
        r = yc - Xc @ beta
        rss[i] = float(r @ r)
        df[i] = int(np.count_nonzero(beta))
    return LassoPath(grid.copy(), intercepts, betas, df, rss)


# === residual M-estimation (IRLS with a line-search safeguard) ===


def _wls_solve(Xt, y, w, ridge, mask):
    A = Xt.T @ (w[:, None] * Xt)
    if ridge > 0:
        A = A + ridge * np.diag(mask)
    b = Xt.T @ (w * y)
    try:
        return linalg.solve(A, b, assume_a="pos")
    except linalg.LinAlgError:
        return linalg.lstsq(A, b)[0]


def _irls_fit(
    Xt, y, theta, rho, psi, w_cap, ridge, mask, tol=1e-12, max_iter=MAX_ITER,
    trace=None, raise_on_exhaust=True,
):
    """Minimize sum(rho(y - Xt@theta)) + (ridge/2)||beta||^2.

    Weights psi(r)/r give a quadratic surrogate whose gradient matches the
    objective, so the reweighted solve is a descent direction; a halving
    line search keeps the objective monotone when the surrogate overshoots.
    """

    def objective(th):
        r = y - Xt @ th
        val = float(np.sum(rho(r)))
        if ridge > 0:
            val += 0.5 * ridge * float(np.sum(mask * th * th))
        return val

    if trace is None:
        trace = []
    f = objective(theta)
    trace.append(f)
    stall = 0
    for it in range(1, max_iter + 1):
        r = y - Xt @ theta
        small = np.abs(r) < 1e-10
        w = np.where(small, w_cap, psi(np.where(small, 1.0, r)) / np.where(small, 1.0, r))
        w = np.minimum(w, w_cap)
        theta_new = _wls_solve(Xt, y, w, ridge, mask)
        step = theta_new - theta
        t = 1.0
        f_new = objective(theta_new)
        while f_new > f and t > 1e-14:
            t *= 0.5
            f_new = objective(theta + t * step)
        if f_new > f:
            # no further progress representable; treat as converged
            return theta, trace, it, True
        theta = theta + t * step
        drop = f - f_new
        f = f_new
        trace.append(f)
        if drop <= tol * (1.0 + abs(f)):
            stall += 1
            if stall >= 2:
                return theta, trace, it, True
        else:
            stall = 0
    if raise_on_exhaust:
        raise ConvergenceError(
            f"IRLS did not converge in {max_iter} iterations", trace=trace
        )
    return theta, trace, max_iter, False


def _check_wcap(q, lam):
    return lam * max(q / (1.0 - q), (1.0 - q) / q)


def fit_quantile(data, q, effective=None, tol=1e-12, max_iter=MAX_ITER):
    """Quantile regression, standard or with a quadratic adjustment band.

    Arguments
    ---------
    data : Dataset
    q : scalar in (0, 1)
        Quantile level.
    effective : EffectiveLossSpec, optional
        A check + asym_l2 spec at the same q.  When given, the fit
        minimizes that effective loss directly (the modified estimator).
        When omitted, the plain check loss is minimized by running the same
        machinery while shrinking the quadratic band below 1e-8, so the
        answer is quantile regression to within solver tolerance.
    """
    if not 0.0 < q < 1.0:
        raise ConfigurationError(f"q must be in (0, 1), got {q!r}")
    Xt, mask = design(data)
    theta = _wls_solve(Xt, data.y, np.ones(data.n), 0.0, mask)
    # starting the intercept near the requested quantile speeds the tail fits
    if data.intercept:
        theta[0] += float(np.quantile(data.y - Xt @ theta, q))

    check = LossSpec(Family.CHECK, q=q)

    if effective is not None:
        if (
            effective.base.family is not Family.CHECK
            or abs(effective.base.q - q) > 1e-12
        ):
            raise ConfigurationError(
                "effective spec must be a check loss at the same quantile level"
            )
        lam = effective.lambda_gamma
        theta, trace, its, conv = _irls_fit(
            Xt,
            data.y,
            theta,
            lambda r: losses.effective_loss_value(effective, r),
            lambda r: losses.effective_loss_deriv(effective, r),
            _check_wcap(q, lam),
            0.0,
            mask,
            tol=tol,
            max_iter=max_iter,
        )
        return _result(
            data, theta, trace[-1], trace, its, conv, lambda_gamma=float(lam)
        )

    # plain quantile regression: continuation in the band width, with an
    # exact vertex check so most fits stop after a few stages
    spread = float(np.median(np.abs(data.y - np.median(data.y))))
    h = max(spread, 1.0)
    total_its = 0
    trace = []
    while True:
        lam = max(q, 1.0 - q) / h
        espec = EffectiveLossSpec(check, lam, GammaNorm.ASYMMETRIC_L2)
        last = h <= 1e-8
        theta, _, its, stage_conv = _irls_fit(
            Xt,
            data.y,
            theta,
            lambda r, s=espec: losses.effective_loss_value(s, r),
            lambda r, s=espec: losses.effective_loss_deriv(s, r),
            _check_wcap(q, lam),
            0.0,
            mask,
            tol=tol if last else 1e-8,
            max_iter=max_iter,
            raise_on_exhaust=not last,
        )
        total_its += its
        theta, certified = _vertex_step(Xt, data.y, theta, q, check)
        trace.append(float(np.sum(losses.loss_value(check, data.y - Xt @ theta))))
        if certified or last:
            break
        # bands below 1e-8 make IRLS crawl toward the vertex in
        # band-sized objective drops, so stop shrinking there
        h = max(h * 0.01, 1e-8)
    if not (certified or stage_conv):
        raise ConvergenceError(
            "quantile fit stalled without an optimality certificate", trace=trace
        )
    return _result(data, theta, trace[-1], trace, total_its, True)


def _basis_solve(A, b):
    # ill-conditioned systems only warn under scipy; treat them as singular
    # (exact zeros on a diagonal also emit divide warnings, hence the filter)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            warnings.simplefilter("error", linalg.LinAlgWarning)
            out = linalg.solve(A, b)
    except (linalg.LinAlgError, linalg.LinAlgWarning):
        return None
    return out if np.all(np.isfinite(out)) else None


def _vertex_step(Xt, y, theta, q, check, max_pivots=100):
    """Walk interpolation vertices near theta until one is optimal.

    A check-loss minimizer generically interpolates as many points as
    there are columns.  Starting from the vertex through the smallest
    residuals, each round tests the subgradient condition (the other
    points' gradient must be absorbable by values in [q-1, q] at the
    zeros) and, when it fails, exchanges the worst offender for the
    first residual to vanish along the exit direction.  Certified means
    exactly optimal; anything else falls back to the incoming iterate.
    """
    n, k = Xt.shape
    if n < k:
        return theta, False
    active = np.argsort(np.abs(y - Xt @ theta))[:k]
    in_active = np.zeros(n, dtype=bool)
    in_active[active] = True
    f_prev = np.inf
    for _ in range(max_pivots):
        XA = Xt[active]
        th = _basis_solve(XA, y[active])
        if th is None:
            return theta, False
        r = y - Xt @ th
        f_th = float(np.sum(losses.loss_value(check, r)))
        if f_th > f_prev - 1e-12 * (1.0 + abs(f_prev)):
            # pivoting stopped descending; give up on the certificate
            break
        f_prev = f_th
        rest = np.flatnonzero(~in_active)
        psi = np.where(r[rest] > 0.0, q, q - 1.0)
        s = _basis_solve(XA.T, -(Xt[rest].T @ psi))
        if s is None:
            return theta, False
        viol = np.maximum(s - q, (q - 1.0) - s)
        j = int(np.argmax(viol))
        if viol[j] <= 1e-8:
            return th, True
        e = np.zeros(k)
        e[j] = 1.0
        d = _basis_solve(XA, e)
        if d is None:
            return theta, False
        # leaving point j keeps the others interpolated; the step size is
        # set by the first outside residual to hit zero
        rates = Xt[rest] @ d
        moved = False
        for sign in (1.0, -1.0):
            den = sign * rates
            ok = den > 1e-12
            if not np.any(ok):
                continue
            t_hit = r[rest][ok] / den[ok]
            pos = t_hit > 1e-14
            if not np.any(pos):
                continue
            which = np.argmin(np.where(pos, t_hit, np.inf))
            t = float(t_hit[which])
            f_new = float(
                np.sum(losses.loss_value(check, y - Xt @ (th + sign * t * d)))
            )
            if f_new < f_th - 1e-12 * (1.0 + abs(f_th)):
                enter = rest[np.flatnonzero(ok)[which]]
                in_active[active[j]] = False
                in_active[enter] = True
                active[j] = enter
                moved = True
                break
        if not moved:
            break
    return theta, False


# === margin losses (Newton with Armijo backtracking) ===


def _margin_funcs(spec):
    if isinstance(spec, EffectiveLossSpec):
        return (
            lambda t: losses.effective_loss_value(spec, t),
            lambda t: losses.effective_loss_deriv(spec, t),
            lambda t: losses.effective_loss_curvature(spec, t),
        )
    fam = spec.family
    if fam is Family.LOGISTIC:
        def curv(t):
            p = expit(-t)
            return p * (1.0 - p)

        return (
            lambda t: losses.loss_value(spec, t),
            lambda t: losses.loss_deriv(spec, t),
            curv,
        )
    if fam is Family.EXPONENTIAL:
        return (
            lambda t: losses.loss_value(spec, t),
            lambda t: losses.loss_deriv(spec, t),
            lambda t: np.exp(-t),
        )
    if fam is Family.SQUARED_HINGE:
        return (
            lambda t: losses.loss_value(spec, t),
            lambda t: losses.loss_deriv(spec, t),
            lambda t: np.where(t < 1.0, 2.0, 0.0),
        )
    raise ConfigurationError(f"no smooth margin solver for family {fam!r}")


def _margin_newton(
    Xt,
    y,
    mask,
    funcs,
    lambda_beta,
    theta,
    offset=None,
    weights=None,
    gtol=1e-8,
    max_iter=MAX_ITER,
    norm_guard=1e6,
    trace=None,
):
    """Damped Newton with Armijo backtracking on a smooth margin objective.

    The exit test is an absolute sup-norm gradient bound.  If rounding
    prevents further descent first, the fit is accepted only when the
    gradient is already small relative to the objective; otherwise a
    ConvergenceError reports the trace.  A coefficient-norm guard catches
    the runaway fits produced by separated classes.
    """
    val, grad_fn, curv_fn = funcs
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
    off = 0.0 if offset is None else np.asarray(offset, dtype=float)

    def objective(th):
        tau = y * (Xt @ th) + off
        v = float(np.sum(w * val(tau)))
        if lambda_beta > 0:
            v += 0.5 * lambda_beta * float(np.sum(mask * th * th))
        return v

    if trace is None:
        trace = []
    f = objective(theta)
    trace.append(f)
    n_coef = theta.size
    stalls = 0
    for it in range(1, max_iter + 1):
        tau = y * (Xt @ theta) + off
        g = Xt.T @ (y * w * grad_fn(tau)) + lambda_beta * mask * theta
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= gtol:
            return theta, trace, it, True
        if float(np.linalg.norm(theta)) > norm_guard:
            raise ConvergenceError(
                "coefficient norm guard tripped; classes may be completely "
                "separated (add a ridge penalty or use a linearized loss)",
                trace=trace,
            )
        H = Xt.T @ ((w * curv_fn(tau))[:, None] * Xt) + lambda_beta * np.diag(mask)
        mu = 0.0
        for _ in range(60):
            # near-singular H only warns under scipy; damp it instead of
            # trusting a garbage step
            step = _basis_solve(H + mu * np.eye(n_coef), -g)
            if step is not None and float(step @ g) < 0.0:
                break
            mu = max(1e-8, 10.0 * mu) if mu else 1e-8 * max(1.0, float(np.trace(H)))
        else:
            raise ConvergenceError("could not produce a descent direction", trace=trace)
        t = 1.0
        slope = float(step @ g)
        while t > 1e-15:
            f_new = objective(theta + t * step)
            if f_new <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            if gnorm <= 1e-6 * (1.0 + abs(f)):
                return theta, trace, it, True  # rounding floor, gradient tiny
            raise ConvergenceError(
                f"line search failed with gradient norm {gnorm:.3e}", trace=trace
            )
        theta = theta + t * step
        # two consecutive steps without measurable descent mean the
        # objective hit its floating-point floor
        if f - f_new <= 1e-14 * (1.0 + abs(f)):
            stalls += 1
            if stalls >= 2:
                if gnorm <= 1e-6 * (1.0 + abs(f)):
                    trace.append(f_new)
                    return theta, trace, it, True
                raise ConvergenceError(
                    f"stalled with gradient norm {gnorm:.3e}", trace=trace
                )
        else:
            stalls = 0
        f = f_new
        trace.append(f)
    raise ConvergenceError(
        f"Newton solver did not converge in {max_iter} iterations", trace=trace
    )


def _require_labels(data):
    if not np.all(np.abs(data.y) == 1.0):
        raise ConfigurationError("classification fitters require +-1 labels")


def fit_logistic(
    data,
    linearized=None,
    lambda_beta=0.0,
    margin_offset=None,
    sample_weight=None,
    gtol=1e-8,
    max_iter=MAX_ITER,
):
    """Binomial deviance fit, optionally linearized below a bending margin.

    ``linearized`` is the bending constant k: margins below k see a linear
    loss with slope matching the deviance at k, which corresponds to the
    per-case-shift penalty level 1/(1 + e^k).
    """
    _require_labels(data)
    base = LossSpec(Family.LOGISTIC)
    lam_gamma = None
    if linearized is None:
        spec = base
    else:
        lam_gamma = 1.0 / (1.0 + math.exp(linearized))
        spec = EffectiveLossSpec(base, lam_gamma, GammaNorm.L1)
    Xt, mask = design(data)
    theta, trace, its, conv = _margin_newton(
        Xt,
        data.y,
        mask,
        _margin_funcs(spec),
        lambda_beta,
        np.zeros(Xt.shape[1]),
        offset=margin_offset,
        weights=sample_weight,
        gtol=gtol,
        max_iter=max_iter,
    )
    return _result(
        data,
        theta,
        trace[-1],
        trace,
        its,
        conv,
        lambda_beta=float(lambda_beta),
        lambda_gamma=lam_gamma,
    )


def fit_exponential(
    data,
    lambda_beta=0.0,
    bend=None,
    margin_offset=None,
    sample_weight=None,
    gtol=1e-8,
    max_iter=MAX_ITER,
):
    """Exponential margin loss fit; ``bend`` linearizes below -log(lambda)."""
    _require_labels(data)
    base = LossSpec(Family.EXPONENTIAL)
    spec = base if bend is None else EffectiveLossSpec(base, bend, GammaNorm.L1)
    Xt, mask = design(data)
    theta, trace, its, conv = _margin_newton(
        Xt,
        data.y,
        mask,
        _margin_funcs(spec),
        lambda_beta,
        np.zeros(Xt.shape[1]),
        offset=margin_offset,
        weights=sample_weight,
        gtol=gtol,
        max_iter=max_iter,
    )
    return _result(
        data, theta, trace[-1], trace, its, conv, lambda_beta=float(lambda_beta)
    )


_HUBERIZED_CONTINUATION = (2.0, 10.0, 100.0, 1e3, 1e4, 1e5)


def fit_svm(
    data,
    variant="hinge",
    k=None,
    lambda_beta=1e-4,
    margin_offset=None,
    gtol=1e-8,
    max_iter=MAX_ITER,
    subgrad_iters=200,
):
    """Support vector machine variants.

    Arguments
    ---------
    data : Dataset with +-1 labels
    variant : {"hinge", "squared_hinge", "huberized"}
        "squared_hinge" is the smooth SVM; "huberized" rounds the hinge
        corner quadratically starting at the bending constant ``k`` < 1.
        The plain hinge is fit by averaged subgradient descent followed by
        Newton solves on quadratically smoothed hinges with the corner
        radius shrunk to 1e-5, which pins the objective to the optimum far
        tighter than the subgradient phase alone.
    lambda_beta : ridge level; the default 1e-4 is the near-unpenalized
        comparison mode.
    """
    _require_labels(data)
    if lambda_beta < 0:
        raise ConfigurationError("lambda_beta must be nonnegative")
    Xt, mask = design(data)
    hinge = LossSpec(Family.HINGE)

    if variant == "squared_hinge":
        if k is not None:
            raise ConfigurationError("k applies to the huberized variant only")
        theta, trace, its, conv = _margin_newton(
            Xt,
            data.y,
            mask,
            _margin_funcs(LossSpec(Family.SQUARED_HINGE)),
            lambda_beta,
            np.zeros(Xt.shape[1]),
            offset=margin_offset,
            gtol=gtol,
            max_iter=max_iter,
        )
        return _result(
            data, theta, trace[-1], trace, its, conv, lambda_beta=float(lambda_beta)
        )

    if variant == "huberized":
        if k is None or k >= 1.0:
            raise ConfigurationError("huberized variant requires bending constant k < 1")
        lam_gamma = 1.0 / (1.0 - k)
        espec = EffectiveLossSpec(hinge, lam_gamma, GammaNorm.L2)
        theta, trace, its, conv = _margin_newton(
            Xt,
            data.y,
            mask,
            _margin_funcs(espec),
            lambda_beta,
            np.zeros(Xt.shape[1]),
            offset=margin_offset,
            gtol=gtol,
            max_iter=max_iter,
        )
        return _result(
            data,
            theta,
            trace[-1],
            trace,
            its,
            conv,
            lambda_beta=float(lambda_beta),
            lambda_gamma=float(lam_gamma),
        )

    if variant != "hinge":
        raise ConfigurationError(f"unknown svm variant {variant!r}")

    off = 0.0 if margin_offset is None else np.asarray(margin_offset, dtype=float)

    def hinge_objective(th):
        tau = data.y * (Xt @ th) + off
        v = float(np.sum(np.maximum(1.0 - tau, 0.0)))
        return v + 0.5 * lambda_beta * float(np.sum(mask * th * th))

    # phase 1: averaged subgradient descent for a cheap warm start
    theta = np.zeros(Xt.shape[1])
    avg = np.zeros_like(theta)
    n_avg = 0
    scale = float(np.mean(np.sum(Xt * Xt, axis=1)))
    for t in range(1, subgrad_iters + 1):
        tau = data.y * (Xt @ theta) + off
        sub = -(Xt.T @ (data.y * (tau < 1.0))) + lambda_beta * mask * theta
        theta -= (1.0 / (scale * math.sqrt(t))) * sub
        if t > subgrad_iters // 2:
            avg += theta
            n_avg += 1
    theta = avg / n_avg
    trace = [hinge_objective(theta)]

    # phase 2: Newton on quadratically smoothed hinges, corner radius -> 1e-5
    its = subgrad_iters
    conv = False
    for lam_gamma in _HUBERIZED_CONTINUATION:
        espec = EffectiveLossSpec(hinge, lam_gamma, GammaNorm.L2)
        last = lam_gamma == _HUBERIZED_CONTINUATION[-1]
        theta, _, nits, conv = _margin_newton(
            Xt,
            data.y,
            mask,
            _margin_funcs(espec),
            lambda_beta,
            theta,
            offset=margin_offset,
            gtol=gtol if last else 1e-6,
            max_iter=max_iter,
        )
        its += nits
        trace.append(hinge_objective(theta))
    return _result(
        data, theta, trace[-1], trace, its, conv, lambda_beta=float(lambda_beta)
    )
