"""Command-line front end.

Subcommands: ``fit`` (one penalized case-adjusted fit), ``path`` (lasso
trace), ``cv`` (paired repeated k-fold comparison), ``tune`` (penalty
from a bending rule), ``simulate`` (the Monte Carlo studies).  Each run
writes CSV tables, a JSON summary, figures where they make sense, and a
manifest recording the exact invocation, input digests, and seed.

Exit codes: 0 success, 2 bad configuration or usage, 3 unreadable or
malformed input data, 4 solver failure (the objective trace so far is
still written).
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, losses, report, selection, simulate, solvers, tuning
from .alternation import AlternationConfig, PenaltyConfig, alternate_fit
from .asymptotics import equivalence_curve
from .data import load_csv
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DescentError,
    IngestionError,
)
from .losses import EffectiveLossSpec, Family, GammaNorm, LossSpec


def _out_dir(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out, inputs=()):
    options = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func" and not k.startswith("_")
    }
    payload = {
        "command": args.command,
        "options": options,
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): report.sha256_of(p) for p in inputs},
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    report.write_json(out / "manifest.json", payload)


def _admissibility_table():
    lines = ["supported loss / gamma-norm pairs:"]
    for base, norm in losses.supported_pairs():
        lines.append(f"  {base:13s} + {norm}")
    return "\n".join(lines)


def _loss_spec(args):
    family = Family(args.loss)
    q = getattr(args, "q", None)
    if family is Family.CHECK:
        if q is None:
            raise ConfigurationError("--q is required for the check loss")
        return LossSpec(family, q=q)
    return LossSpec(family)


_DEFAULT_RULES = {
    Family.SQUARED: "regression",
    Family.ABSOLUTE: "regression",
    Family.CHECK: "quantile",
    Family.LOGISTIC: "logistic",
    Family.SQUARED_HINGE: "svm",
    Family.HINGE: "svm",
}


def _initial_scale(data, loss):
    """Robust residual scale from the unadjusted fit of the base loss."""
    if loss.family is Family.CHECK:
        fit = solvers.fit_quantile(data, loss.q)
    elif loss.family is Family.ABSOLUTE:
        fit = solvers.fit_quantile(data, 0.5)
    else:
        fit = solvers.fit_least_squares(data)
    return tuning.robust_scale(data.y - fit.predict(data.raw_X))


def _resolve_lambda_gamma(args, data, loss):
    """Explicit value wins; otherwise apply the loss family's rule."""
    if args.lambda_gamma is not None:
        if args.rule is not None or args.bend_k is not None:
            raise ConfigurationError(
                "give either --lambda-gamma or a rule (--rule/--bend-k), not both"
            )
        return float(args.lambda_gamma), {"source": "flag"}
    rule = args.rule or _DEFAULT_RULES.get(loss.family)
    if rule is None:
        raise ConfigurationError(
            f"no tuning rule exists for the {loss.family.value} loss; "
            "pass --lambda-gamma"
        )
    if rule == "regression":
        k = 2.0 if args.bend_k is None else float(args.bend_k)
        sigma = _initial_scale(data, loss)
        lam = tuning.lambda_gamma_regression(k, sigma)
        return lam, {"source": "rule", "rule": rule, "k": k, "sigma_hat": sigma}
    if rule == "quantile":
        if loss.family is not Family.CHECK:
            raise ConfigurationError("the quantile rule applies to the check loss")
        sigma = _initial_scale(data, loss)
        lam = tuning.lambda_gamma_quantile(loss.q, data.n, sigma, alpha=args.alpha)
        return lam, {
            "source": "rule",
            "rule": rule,
            "alpha": args.alpha,
            "sigma_hat": sigma,
        }
    if rule in ("svm", "logistic"):
        if args.bend_k is None:
            raise ConfigurationError(f"the {rule} rule needs --bend-k")
        lam = tuning.lambda_from_bending(float(args.bend_k), family=rule)
        return lam, {"source": "rule", "rule": rule, "k": float(args.bend_k)}
    raise ConfigurationError(f"unknown rule {rule!r}")


def _write_trace(out, trace):
    if trace is None:
        return
    arr = np.asarray(trace, dtype=float)
    report.write_rows_csv(
        out / "trace.csv",
        ("step", "objective"),
        [(i, float(v)) for i, v in enumerate(arr)],
    )


def cmd_fit(args):
    out = _out_dir(args)
    data = load_csv(args.data, args.response, label_mode=args.labels)
    loss = _loss_spec(args)
    lam_gamma, how = _resolve_lambda_gamma(args, data, loss)
    pen = PenaltyConfig(
        lambda_gamma=lam_gamma,
        gamma_norm=GammaNorm(args.gamma_norm),
        lambda_beta=args.lambda_beta,
        beta_norm=args.beta_norm,
    )
    config = AlternationConfig(
        penalty=pen, epsilon=args.epsilon, max_outer_iters=args.max_outer
    )
    try:
        fit = alternate_fit(data, loss, config)
    except (ConvergenceError, DescentError) as err:
        _write_trace(out, getattr(err, "trace", None))
        _manifest(args, out, [args.data])
        raise

    names = ["intercept"] + list(data.column_names)
    coef_rows = [("intercept", fit.intercept, fit.intercept_raw)]
    coef_rows += [
        (name, float(b), float(br))
        for name, b, br in zip(data.column_names, fit.beta, fit.beta_raw, strict=True)
    ]
    report.write_rows_csv(out / "coefficients.csv", ("term", "standardized", "raw"), coef_rows)

    gamma = fit.gamma
    report.write_rows_csv(
        out / "gamma.csv",
        ("case", "gamma", "adjusted"),
        [
            (i, float(g), bool(a))
            for i, (g, a) in enumerate(zip(gamma.values, gamma.adjusted, strict=True))
        ],
    )
    _write_trace(out, fit.objective_trace)
    report.write_json(
        out / "summary.json",
        {
            "objective": fit.objective,
            "iterations": fit.iterations,
            "converged": fit.converged,
            "lambda_gamma": lam_gamma,
            "lambda_gamma_how": how,
            "lambda_beta": args.lambda_beta,
            "beta_norm": args.beta_norm,
            "gamma_norm": args.gamma_norm,
            "loss": loss.family.value,
            "q": loss.q,
            "n_adjusted": gamma.n_adjusted,
            "terms": names,
        },
    )
    report.gamma_figure(out / "gamma.png", gamma.values, gamma.adjusted)
    report.trace_figure(out / "trace.png", fit.objective_trace)
    _manifest(args, out, [args.data])
    return 0


def cmd_path(args):
    out = _out_dir(args)
    data = load_csv(args.data, args.response)
    path = solvers.fit_lasso_path(
        data, n_lambdas=args.n_lambdas, min_ratio=args.min_ratio
    )
    cols = ("lambda", "df", "rss", "intercept") + tuple(
        f"b_{name}" for name in data.column_names
    )
    rows = [
        (
            float(path.lambdas[i]),
            int(path.df[i]),
            float(path.rss[i]),
            float(path.intercepts[i]),
            *[float(v) for v in path.betas[i]],
        )
        for i in range(len(path))
    ]
    report.write_rows_csv(out / "path.csv", cols, rows)
    report.lasso_path_figure(out / "path.png", path, data.column_names)
    _manifest(args, out, [args.data])
    return 0


def _cv_fitters(args, loss):
    """Plain and adjusted fitting closures for the cv command."""
    lam_beta = args.lambda_beta

    if loss.family is Family.CHECK:

        def plain(train):
            return solvers.fit_quantile(train, loss.q)

    elif loss.family is Family.SQUARED:

        def plain(train):
            return solvers.fit_least_squares(train, lambda_beta=lam_beta)

    else:
        raise ConfigurationError(
            "cv supports the squared and check losses; "
            f"got {loss.family.value}"
        )

    if args.lambda_gamma is None and args.rule is None and args.bend_k is None:
        return plain, plain, None

    norm = GammaNorm(args.gamma_norm) if args.gamma_norm else (
        GammaNorm.ASYMMETRIC_L2 if loss.family is Family.CHECK else GammaNorm.L1
    )

    if args.lambda_gamma is not None:
        fixed = float(args.lambda_gamma)

        def modified(train):
            spec = EffectiveLossSpec(loss, fixed, norm)
            if loss.family is Family.CHECK:
                return solvers.fit_quantile(train, loss.q, effective=spec)
            from .alternation import equivalent_effective_fit

            return equivalent_effective_fit(
                train, spec, lambda_beta=lam_beta,
                beta_norm="l2" if lam_beta else "none",
            )

        return plain, modified, fixed

    # rule-tuned per training fold
    def modified(train):
        class _Args:
            lambda_gamma = None
            rule = args.rule
            bend_k = args.bend_k
            alpha = args.alpha

        lam, _ = _resolve_lambda_gamma(_Args, train, loss)
        spec = EffectiveLossSpec(loss, lam, norm)
        if loss.family is Family.CHECK:
            return solvers.fit_quantile(train, loss.q, effective=spec)
        from .alternation import equivalent_effective_fit

        return equivalent_effective_fit(
            train, spec, lambda_beta=lam_beta,
            beta_norm="l2" if lam_beta else "none",
        )

    return plain, modified, None


def cmd_cv(args):
    out = _out_dir(args)
    data = load_csv(args.data, args.response)
    loss = _loss_spec(args)
    plain, modified, lam_gamma = _cv_fitters(args, loss)
    rep_plain = selection.kfold_cv(
        data, plain, loss, folds=args.folds, repeats=args.repeats, seed=args.seed
    )
    rep_mod = selection.kfold_cv(
        data, modified, loss, folds=args.folds, repeats=args.repeats, seed=args.seed
    )

    rows = []
    for arm, rep in (("plain", rep_plain), ("modified", rep_mod)):
        for rec in rep.rows():
            rows.append((rec["repeat"], rec["fold"], arm, rec["score"]))
    report.write_rows_csv(out / "cv_scores.csv", ("repeat", "fold", "arm", "score"), rows)

    ps = rep_plain.repeat_scores
    ms = rep_mod.repeat_scores
    report.write_rows_csv(
        out / "cv_pairs.csv",
        ("repeat", "plain", "modified", "difference"),
        [
            (i, float(a), float(b), float(b - a))
            for i, (a, b) in enumerate(zip(ps, ms, strict=True))
        ],
    )
    report.write_json(
        out / "summary.json",
        {
            "plain": rep_plain.summary(),
            "modified": rep_mod.summary(),
            "lambda_gamma": lam_gamma,
            "modified_wins": int(np.sum(ms < ps)),
        },
    )
    report.cv_pairs_figure(out / "cv_pairs.png", ps, ms)
    _manifest(args, out, [args.data])
    return 0


def cmd_tune(args):
    out = _out_dir(args)
    data = load_csv(args.data, args.response, label_mode=args.labels)
    result = {"rule": args.rule, "n": data.n}
    if args.rule == "regression":
        k = 2.0 if args.bend_k is None else float(args.bend_k)
        sigma = _initial_scale(data, LossSpec(Family.SQUARED))
        result.update(k=k, sigma_hat=sigma,
                      lambda_gamma=tuning.lambda_gamma_regression(k, sigma))
    elif args.rule == "quantile":
        if args.q is None:
            raise ConfigurationError("the quantile rule needs --q")
        sigma = _initial_scale(data, LossSpec(Family.CHECK, q=args.q))
        result.update(
            q=args.q,
            alpha=args.alpha,
            sigma_hat=sigma,
            lambda_gamma=tuning.lambda_gamma_quantile(
                args.q, data.n, sigma, alpha=args.alpha
            ),
        )
    else:  # svm or logistic bending
        if args.bend_k is None:
            raise ConfigurationError(f"the {args.rule} rule needs --bend-k")
        k = float(args.bend_k)
        result.update(
            k=k, lambda_gamma=tuning.lambda_from_bending(k, family=args.rule)
        )
    report.write_json(out / "tune.json", result)
    _manifest(args, out, [args.data])
    return 0


def _simulate_table1(args, out):
    summaries = {}
    all_rows = []
    delta_rows = []
    for preset in simulate.REGRESSION_PRESETS:
        scenario = simulate.RegressionScenario(beta_preset=preset, seed=args.seed)
        rep = simulate.run_regression_study(
            scenario, args.replicates, k=args.bend_k or 2.0, threads=args.threads
        )
        summaries[preset] = rep.summary
        all_rows += [(preset, *row) for row in rep.rows]
        for setting in ("epsilon", "leverage"):
            for method in ("lasso_cp", "robust_lasso_cp"):
                cells = simulate.size_delta_table(rep, setting, method)
                delta_rows.append(
                    (preset, setting, method, *[cells[d] for d in range(-3, 4)])
                )
    report.write_rows_csv(
        out / "table1_replicates.csv",
        ("preset", "replicate", "setting", "method", "mse_beta", "model_size", "size_delta"),
        all_rows,
    )
    report.write_rows_csv(
        out / "table1_deltas.csv",
        ("preset", "setting", "method", "le_m3", "m2", "m1", "zero", "p1", "p2", "ge_p3"),
        delta_rows,
    )
    report.write_json(out / "table1_summary.json", summaries)
    report.regression_study_figure(out / "table1_mse.png", summaries)


def _simulate_table2(args, out):
    summaries = {}
    all_rows = []
    mean_rows = []
    for separation in simulate.SEPARATIONS:
        for flip in (0.0, 0.05, 0.10):
            scenario = simulate.ClassificationScenario(
                separation=separation, flip_fraction=flip, seed=args.seed
            )
            rep = simulate.run_classification_study(
                scenario, args.replicates, threads=args.threads
            )
            name = f"{separation}_flip{int(round(100 * flip))}"
            summaries[name] = rep.summary
            all_rows += [(separation, flip, *row) for row in rep.rows]
            for m in simulate.CLASSIFIER_IDS:
                mean_rows.append(
                    (
                        separation,
                        flip,
                        m,
                        rep.summary[f"mean_error_{m}"],
                        rep.summary[f"sd_error_{m}"],
                        rep.summary[f"degenerate_{m}"],
                    )
                )
    report.write_rows_csv(
        out / "table2_replicates.csv",
        ("separation", "flip_fraction", "replicate", "method", "error_rate",
         "excess_error", "degenerate"),
        all_rows,
    )
    report.write_rows_csv(
        out / "table2_means.csv",
        ("separation", "flip_fraction", "method", "mean_error", "sd_error", "degenerate"),
        mean_rows,
    )
    report.write_json(out / "table2_summary.json", summaries)
    report.classification_study_figure(
        out / "table2_rates.png", summaries, simulate.CLASSIFIER_IDS
    )


def _simulate_qr(args, out):
    rep = simulate.run_quantile_study(
        q_levels=tuple(args.q_levels),
        n_grid=tuple(args.n_grid),
        error_dist=args.dist,
        replicates=args.replicates,
        seed=args.seed,
        threads=args.threads,
    )
    report.write_rows_csv(out / "qr_replicates.csv", rep.columns, rep.rows)
    report.write_json(out / "qr_summary.json",
                      {"scenario": rep.scenario, "summary": rep.summary})
    report.quantile_study_figure(out / "qr_mse.png", rep)


def _simulate_theorem1(args, out):
    curves = []
    rows = []
    summary = {}
    for alpha in (args.alpha_main, 0.0):
        curve = equivalence_curve(
            args.q,
            alpha,
            n_grid=tuple(args.n_grid),
            replicates=args.replicates,
            seed=args.seed,
            threads=args.threads,
        )
        curves.append(curve)
        for gi, n in enumerate(curve.n_grid):
            for r, d in enumerate(curve.distances[gi]):
                rows.append((alpha, n, r, float(d)))
        summary[f"alpha_{alpha:g}"] = {
            "median_distance": curve.median_distance,
            "scaled_distance": curve.scaled_distance,
            "excluded": curve.excluded,
            "c": curve.c,
        }
    report.write_rows_csv(
        out / "theorem1_distances.csv", ("alpha", "n", "replicate", "distance"), rows
    )
    report.write_json(out / "theorem1_summary.json", summary)
    report.equivalence_figure(out / "theorem1.png", curves)


def cmd_simulate(args):
    out = _out_dir(args)
    if args.table == "1":
        _simulate_table1(args, out)
    elif args.table == "2":
        _simulate_table2(args, out)
    elif args.table == "qr":
        _simulate_qr(args, out)
    else:
        _simulate_theorem1(args, out)
    _manifest(args, out)
    return 0


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="casereg",
        description="Penalized case-specific adjustment for regression and "
        "classification.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common_io(p):
        p.add_argument("data", help="CSV file with a header row")
        p.add_argument("--response", required=True, help="response column name")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)

    fit = sub.add_parser("fit", help="one adjusted fit with case diagnostics")
    common_io(fit)
    fit.add_argument("--labels", choices=("01", "pm1"), default=None,
                     help="map the response to +-1 labels")
    fit.add_argument("--loss", required=True,
                     choices=[f.value for f in Family])
    fit.add_argument("--q", type=float, default=None)
    fit.add_argument("--gamma-norm", required=True,
                     choices=[g.value for g in GammaNorm])
    fit.add_argument("--lambda-gamma", type=float, default=None)
    fit.add_argument("--rule", default=None,
                     choices=("regression", "quantile", "svm", "logistic"))
    fit.add_argument("--bend-k", type=float, default=None)
    fit.add_argument("--alpha", type=float, default=0.3,
                     help="sample-size exponent of the quantile rule")
    fit.add_argument("--lambda-beta", type=float, default=0.0)
    fit.add_argument("--beta-norm", default="none", choices=("none", "l1", "l2"))
    fit.add_argument("--epsilon", type=float, default=1e-8,
                     help="outer-loop squared-step stopping threshold")
    fit.add_argument("--max-outer", type=int, default=100)
    fit.set_defaults(func=cmd_fit)

    path = sub.add_parser("path", help="lasso path on a penalty grid")
    common_io(path)
    path.add_argument("--n-lambdas", type=_positive_int, default=50)
    path.add_argument("--min-ratio", type=float, default=1e-3)
    path.set_defaults(func=cmd_path)

    cv = sub.add_parser("cv", help="repeated k-fold: plain versus adjusted")
    common_io(cv)
    cv.add_argument("--loss", default="check", choices=("squared", "check"))
    cv.add_argument("--q", type=float, default=None)
    cv.add_argument("--gamma-norm", default=None,
                    choices=[g.value for g in GammaNorm])
    cv.add_argument("--lambda-gamma", type=float, default=None)
    cv.add_argument("--rule", default=None,
                    choices=("regression", "quantile", "svm", "logistic"))
    cv.add_argument("--bend-k", type=float, default=None)
    cv.add_argument("--alpha", type=float, default=0.3)
    cv.add_argument("--lambda-beta", type=float, default=0.0)
    cv.add_argument("--folds", type=_positive_int, default=10)
    cv.add_argument("--repeats", type=_positive_int, default=10)
    cv.set_defaults(func=cmd_cv)

    tune = sub.add_parser("tune", help="penalty level from a bending rule")
    common_io(tune)
    tune.add_argument("--labels", choices=("01", "pm1"), default=None)
    tune.add_argument("--rule", required=True,
                      choices=("regression", "quantile", "svm", "logistic"))
    tune.add_argument("--bend-k", type=float, default=None)
    tune.add_argument("--q", type=float, default=None)
    tune.add_argument("--alpha", type=float, default=0.3)
    tune.set_defaults(func=cmd_tune)

    sim = sub.add_parser("simulate", help="Monte Carlo studies")
    group = sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--table", choices=("1", "2", "qr"))
    group.add_argument("--study", choices=("theorem1",), dest="study")
    sim.add_argument("--replicates", type=_positive_int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=_positive_int, default=None)
    sim.add_argument("--out-dir", default=".")
    sim.add_argument("--bend-k", type=float, default=None,
                     help="winsorization constant for the lasso study")
    sim.add_argument("--q", type=float, default=0.3,
                     help="quantile level for the equivalence study")
    sim.add_argument("--q-levels", type=float, nargs="+", default=[0.25, 0.5, 0.9])
    sim.add_argument("--n-grid", type=_positive_int, nargs="+",
                     default=None)
    sim.add_argument("--dist", choices=simulate.ERROR_DISTRIBUTIONS,
                     default="normal")
    sim.add_argument("--alpha-main", type=float, default=0.4,
                     help="penalty growth exponent for the equivalence study")
    sim.set_defaults(func=cmd_simulate, table=None)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.n_grid is None:
        args.n_grid = [100, 1000, 10000] if args.study else [100, 1000]
    try:
        return args.func(args)
    except IngestionError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except ConfigurationError as err:
        print(f"error: {err}", file=sys.stderr)
        print(_admissibility_table(), file=sys.stderr)
        return 2
    except (ConvergenceError, DescentError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
