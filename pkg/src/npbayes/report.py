"""Figure rendering for CLI results.

Each command's tabular output can be rendered to a matplotlib figure saved
next to the delimited file (the ``--figures`` flag).  Plots are deliberately
plain: they exist to eyeball a run, not to publish.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _col(columns, rows, name):
    k = columns.index(name)
    return np.array([r[k] for r in rows])


def _numeric(columns, rows, name, where=None):
    k = columns.index(name)
    out = [r[k] for r in rows if (where is None or where(r))]
    return np.array([v for v in out if v is not None], dtype=float)


def render_figure(command: str, columns: list, rows: list, meta: dict, path) -> bool:
    """Render the standard figure for one command's rows; returns False when
    the command has no figure (nothing is written then)."""
    fn = _RENDERERS.get(command)
    if fn is None:
        return False
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    fn(ax, columns, rows, meta)
    ax.set_title(command)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def _dp_sample(ax, columns, rows, meta):
    if meta["params"].get("emit", "summary") == "atoms":
        draws = _col(columns, rows, "draw")
        first = [r for r, d in zip(rows, draws) if d == draws[0]]
        atoms = _numeric(columns, first, "atom")
        weights = _numeric(columns, first, "weight")
        ax.vlines(atoms, 0.0, weights, lw=1.2)
        ax.set_xlabel("atom location")
        ax.set_ylabel("weight")
    else:
        means = _numeric(columns, rows, "mean")
        ax.hist(means, bins=60, density=True, alpha=0.8)
        ax.set_xlabel("measure mean")
        ax.set_ylabel("density")


def _mean_moments(ax, columns, rows, meta):
    p = _numeric(columns, rows, "p")
    m = _numeric(columns, rows, "mean_central_moment")
    ax.plot(p, np.abs(m), "o-")
    ax.set_yscale("log")
    ax.set_xlabel("order p")
    ax.set_ylabel("|central moment|")


def _mean_chain(ax, columns, rows, meta):
    theta = _numeric(columns, rows, "theta")
    ax.hist(theta, bins=80, density=True, alpha=0.8)
    ax.set_xlabel("random mean")
    ax.set_ylabel("density")


def _transform_check(ax, columns, rows, meta):
    u = _numeric(columns, rows, "u")
    lhs = _numeric(columns, rows, "lhs_mc")
    se = _numeric(columns, rows, "mc_se")
    rhs = _numeric(columns, rows, "rhs_exact")
    ax.errorbar(u, lhs, yerr=3 * se, fmt="o", label="Monte Carlo (3 se)")
    ax.plot(u, rhs, "x--", label="quadrature")
    ax.set_xlabel("u")
    ax.set_ylabel("transform value")
    ax.legend()


def _quantile_estimate(ax, columns, rows, meta):
    curve = [r for r in rows if r[columns.index("record")] == "curve"]
    y = _numeric(columns, curve, "y")
    qb = _numeric(columns, curve, "q_bernstein")
    ax.plot(y, qb, label="noninformative estimate")
    qpm = [r[columns.index("q_posterior_mean")] for r in curve]
    if any(v is not None for v in qpm):
        ax.plot(y, np.array([v for v in qpm], dtype=float), "--", label="posterior mean")
    ax.set_xlabel("y")
    ax.set_ylabel("quantile")
    ax.legend()


def _density_estimate(ax, columns, rows, meta):
    x = _numeric(columns, rows, "x")
    f = _numeric(columns, rows, "density")
    ax.plot(x, f)
    ax.set_xlabel("x")
    ax.set_ylabel("estimated density")


def _pyramid_fit(ax, columns, rows, meta):
    from fractions import Fraction

    labels = sorted({r[columns.index("node")] for r in rows}, key=Fraction)
    data = [
        _numeric(columns, [r for r in rows if r[columns.index("node")] == lab], "value")
        for lab in labels
    ]
    ax.boxplot(data, tick_labels=labels, showfliers=False)
    ax.set_xlabel("node")
    ax.set_ylabel("quantile value")
    ax.tick_params(axis="x", rotation=70)


def _frailty_sim(ax, columns, rows, meta):
    if meta["params"].get("emit", "comparison") == "paths":
        paths = _col(columns, rows, "path")
        for pid in np.unique(paths)[:20]:
            sub = [r for r, p in zip(rows, paths) if p == pid]
            t = _numeric(columns, sub, "time")
            z = _numeric(columns, sub, "z")
            ax.step(np.concatenate(([0.0], t)), np.concatenate(([0.0], z)), where="post", alpha=0.6)
        ax.set_xlabel("t")
        ax.set_ylabel("accumulated damage")
    else:
        t = _numeric(columns, rows, "t")
        mc = _numeric(columns, rows, "mc_survival")
        se = _numeric(columns, rows, "mc_se")
        exact = _numeric(columns, rows, "exact_survival")
        ax.errorbar(t, mc, yerr=3 * se, fmt="o", label="Monte Carlo (3 se)")
        ax.plot(t, exact, "x--", label="closed form")
        ax.set_xlabel("t")
        ax.set_ylabel("survival")
        ax.legend()


def _localreg_fit(ax, columns, rows, meta):
    keep = [r for r in rows if not r[columns.index("gap")]]
    x = _numeric(columns, keep, "x")
    m = _numeric(columns, keep, "mean")
    sd = _numeric(columns, keep, "sd")
    ax.plot(x, m, label="posterior mean")
    ax.fill_between(x, m - 2 * sd, m + 2 * sd, alpha=0.25, label="2 sd band")
    xs = meta["params"].get("x")
    ys = meta["params"].get("y")
    if xs and ys:
        ax.plot(xs, ys, ".", ms=3, alpha=0.6, label="data")
    ax.set_xlabel("x")
    ax.set_ylabel("m(x)")
    ax.legend()


def _envelope(ax, columns, rows, meta):
    if meta["params"]["mode"] == "predictive":
        t = _numeric(columns, rows, "t")
        g = _numeric(columns, rows, "cdf")
        ax.plot(t, g)
        ax.set_xlabel("t")
        ax.set_ylabel("predictive cdf")
    else:
        ax.bar([0], [rows[0][columns.index("log_factor")]])
        ax.set_xticks([0], ["log control factor"])


_RENDERERS = {
    "dp-sample": _dp_sample,
    "mean-moments": _mean_moments,
    "mean-chain": _mean_chain,
    "transform-check": _transform_check,
    "quantile-estimate": _quantile_estimate,
    "density-estimate": _density_estimate,
    "pyramid-fit": _pyramid_fit,
    "frailty-sim": _frailty_sim,
    "localreg-fit": _localreg_fit,
    "envelope": _envelope,
}
