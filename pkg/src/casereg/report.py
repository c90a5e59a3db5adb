"""Deterministic file output: delimited tables, JSON summaries, figures.

Numbers are written with ``repr``, the shortest digit string that
round-trips the float, so identical results produce byte-identical
files.  Figures are rendered through the Agg backend next to the
tables they illustrate; nothing here requires a display.
"""

from __future__ import annotations

import hashlib
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    text = str(value)
    if "," in text or '"' in text or "\n" in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


def write_rows_csv(path, columns, rows):
    """Write a header plus rows of mixed scalars, with '\\n' endings."""
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(
                f"row width {len(row)} does not match {len(columns)} columns"
            )
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _plain(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(_plain(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_of(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# figures


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def gamma_figure(path, gamma, adjusted):
    """Per-case shift estimates with the nonzero ones picked out."""
    gamma = np.asarray(gamma, dtype=float)
    adjusted = np.asarray(adjusted, dtype=bool)
    idx = np.arange(gamma.size)
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.vlines(idx, 0.0, gamma, color="0.75", linewidth=1)
    ax.plot(idx[~adjusted], gamma[~adjusted], ".", color="0.55", markersize=4)
    if adjusted.any():
        ax.plot(idx[adjusted], gamma[adjusted], "o", color="crimson", markersize=5,
                label=f"{int(adjusted.sum())} adjusted")
        ax.legend(loc="best", frameon=False)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("case")
    ax.set_ylabel("case shift")
    _save(fig, path)


def trace_figure(path, trace):
    trace = np.asarray(trace, dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.plot(np.arange(trace.size), trace, marker=".", color="steelblue")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("objective")
    _save(fig, path)


def lasso_path_figure(path, lasso_path, column_names=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    lam = lasso_path.lambdas
    for j in range(lasso_path.betas.shape[1]):
        label = column_names[j] if column_names else None
        ax.plot(lam, lasso_path.betas[:, j], label=label, linewidth=1.2)
    ax.set_xscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("penalty")
    ax.set_ylabel("standardized coefficient")
    if column_names and len(column_names) <= 12:
        ax.legend(loc="best", fontsize=8, frameon=False)
    _save(fig, path)


def cv_pairs_figure(path, plain_scores, modified_scores):
    """Repeat-level scores of the two arms against the diagonal."""
    a = np.asarray(plain_scores, dtype=float)
    b = np.asarray(modified_scores, dtype=float)
    fig, ax = plt.subplots(figsize=(4.4, 4.4))
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    pad = 0.05 * (hi - lo) if hi > lo else 0.05
    ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], color="0.6", linewidth=0.8)
    ax.plot(a, b, "o", color="steelblue", markersize=5)
    ax.set_xlim(lo - pad, hi + pad)
    ax.set_ylim(lo - pad, hi + pad)
    ax.set_xlabel("plain CV score")
    ax.set_ylabel("modified CV score")
    _save(fig, path)


def regression_study_figure(path, summaries):
    """Mean MSE per contamination setting, one panel per preset.

    ``summaries`` maps preset name to a study summary dict.
    """
    presets = list(summaries)
    fig, axes = plt.subplots(1, len(presets), figsize=(3.1 * len(presets), 3.4),
                             sharey=False, squeeze=False)
    settings = ("none", "epsilon", "leverage")
    xs = np.arange(len(settings))
    for ax, preset in zip(axes[0], presets, strict=True):
        s = summaries[preset]
        plain = [s[f"mse_{c}_lasso_cp"] for c in settings]
        robust = [s[f"mse_{c}_robust_lasso_cp"] for c in settings]
        ax.plot(xs, plain, "o--", color="0.45", label="lasso")
        ax.plot(xs, robust, "s-", color="crimson", label="robust lasso")
        ax.set_xticks(xs, settings)
        ax.set_title(preset, fontsize=10)
        ax.set_ylabel("mean MSE")
    axes[0][0].legend(frameon=False, fontsize=8)
    _save(fig, path)


def classification_study_figure(path, summaries, method_ids):
    """Mean error rate by method, one panel per scenario."""
    names = list(summaries)
    fig, axes = plt.subplots(1, len(names), figsize=(3.0 * len(names), 3.6),
                             squeeze=False)
    xs = np.arange(len(method_ids))
    for ax, name in zip(axes[0], names, strict=True):
        s = summaries[name]
        vals = [s[f"mean_error_{m}"] for m in method_ids]
        ax.bar(xs, vals, color="steelblue")
        ax.axhline(s["bayes_error"], color="crimson", linewidth=1,
                   label="Bayes rate")
        ax.set_xticks(xs, method_ids, rotation=60, fontsize=7, ha="right")
        ax.set_title(name, fontsize=10)
        ax.set_ylabel("mean error rate")
    axes[0][0].legend(frameon=False, fontsize=8)
    _save(fig, path)


def quantile_study_figure(path, report):
    """Mean integrated MSE of both methods over the sample-size grid."""
    q_levels = report.scenario["q_levels"]
    n_grid = report.scenario["n_grid"]
    fig, axes = plt.subplots(1, len(q_levels), figsize=(3.4 * len(q_levels), 3.4),
                             squeeze=False)
    for ax, q in zip(axes[0], q_levels, strict=True):
        plain = [report.summary[f"mse_qr_q{q}_n{n}"] for n in n_grid]
        mod = [report.summary[f"mse_qr_m_q{q}_n{n}"] for n in n_grid]
        ax.plot(n_grid, plain, "o--", color="0.45", label="standard")
        ax.plot(n_grid, mod, "s-", color="crimson", label="adjusted")
        ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("mean integrated MSE")
        ax.set_title(f"q = {q}", fontsize=10)
    axes[0][0].legend(frameon=False, fontsize=8)
    _save(fig, path)


def equivalence_figure(path, curves):
    """Root-n-scaled median distances for one or more penalty scalings."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for curve in curves:
        ax.plot(curve.n_grid, curve.scaled_distance, marker="o",
                label=f"alpha = {curve.alpha:g}")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("median sqrt(n) distance")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)
