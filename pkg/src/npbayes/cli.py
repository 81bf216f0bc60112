"""Command-line front end.

Usage: ``npbayes <command> --config <path> [--out <path>] [--format csv|json]
[--figures]``.  The config is a JSON document ``{"version": 1, "seed": ...,
"params": {...}}`` validated against the per-command schema; unknown keys are
rejected and every violation is reported.  One command writes one output
file (CSV with a leading ``#`` audit line carrying the resolved config, or a
JSON document with the same content) and prints a short summary to stdout.
Identical configs reproduce identical output bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from npbayes import dp, envelope, frailty, localreg, means, pyramid, quantile
from npbayes.randkit import RngState
from npbayes.schemas import PARAM_SCHEMAS, STOCHASTIC_COMMANDS, config_schema


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class RunConfig:
    """A validated run: command, seed, resolved parameter block, output."""

    command: str
    seed: int | None
    params: dict
    out: Path | None = None
    fmt: str = "csv"

    @property
    def meta(self) -> dict:
        meta = {"command": self.command, "version": 1, "params": self.params}
        if self.seed is not None:
            meta["seed"] = self.seed
        return meta


# ---------------------------------------------------------------------------
# descriptor -> object builders


def _build_base(desc: dict) -> dp.BaseDistribution:
    family = desc["family"]
    if family == "uniform":
        return dp.Uniform(desc.get("lo", 0.0), desc.get("hi", 1.0))
    if family == "normal":
        return dp.Normal(desc.get("loc", 0.0), desc.get("sd", 1.0))
    if family == "empirical":
        return dp.Empirical(desc["points"], desc.get("masses"))
    if family == "mixture":
        emp = dp.Empirical(desc["points"], desc.get("masses"))
        return dp.Mixture(_build_base(desc["continuous"]), emp, desc["cont_mass"])
    raise ConfigError([f"unknown base family {family!r}"])


def _build_grid(desc: dict) -> np.ndarray:
    if "values" in desc:
        return np.asarray(desc["values"], dtype=float)
    return np.linspace(desc["start"], desc["stop"], desc["count"])


def _build_g(desc: dict):
    kind = desc["kind"]
    if kind == "identity":
        return lambda x: np.asarray(x, dtype=float)
    if kind == "square":
        return lambda x: np.asarray(x, dtype=float) ** 2
    if kind == "abs":
        return lambda x: np.abs(np.asarray(x, dtype=float))
    intercept, slope = desc["intercept"], desc["slope"]
    return lambda x: intercept + slope * np.asarray(x, dtype=float)


def _build_mean(desc: dict):
    kind = desc["kind"]
    if kind == "constant":
        return localreg.constant_mean(desc["value"])
    if kind == "linear":
        return localreg.linear_mean(desc["intercept"], desc["slope"])
    return localreg.tabulated(desc["xs"], desc["values"])


def _build_m_law(desc: dict):
    if desc["kind"] == "fixed":
        return dp.fixed_m(desc["m"])
    return dp.shifted_poisson(desc["mean"])


def _build_jump(desc: dict) -> frailty.JumpLaw:
    if desc["kind"] == "gamma":
        return frailty.JumpLaw("gamma", desc["shape"])
    return frailty.JumpLaw("point", desc["value"])


def _moment_spec(base_desc: dict, p_max: int) -> means.BaseMomentSpec:
    if base_desc["family"] == "uniform":
        return means.BaseMomentSpec.uniform(
            base_desc.get("lo", 0.0), base_desc.get("hi", 1.0), p_max=p_max
        )
    if base_desc["family"] == "normal":
        return means.BaseMomentSpec.normal(
            base_desc.get("loc", 0.0), base_desc.get("sd", 1.0), p_max=p_max
        )
    return means.BaseMomentSpec.from_base(_build_base(base_desc), p_max=p_max)


# ---------------------------------------------------------------------------
# per-command defaults and extra (non-schema) validation


def _resolve_params(command: str, params: dict) -> tuple[dict, list]:
    p = dict(params)
    problems = []
    if command == "dp-sample":
        p.setdefault("emit", "summary")
        method = p.get("method")
        if method == "finite" and "m" not in p:
            problems.append("params.m is required for method 'finite'")
        if method == "random_m" and "m_law" not in p:
            problems.append("params.m_law is required for method 'random_m'")
        if method == "stick":
            p.setdefault("truncation_eps", 1e-8)
    elif command == "mean-chain":
        p.setdefault("thin", 1)
        p.setdefault("moment_match", False)
        p.setdefault("burn_in", p.get("steps", 100) // 100)
        if p.get("burn_in", 0) >= p.get("steps", 1):
            problems.append("params.burn_in must be smaller than params.steps")
    elif command == "transform-check":
        p.setdefault("quad_points", 200)
        p.setdefault("truncation_eps", 1e-10)
    elif command == "quantile-estimate":
        p.setdefault("posterior_mean", True)
        p.setdefault("mass_y", [])
    elif command == "density-estimate":
        pass
    elif command == "pyramid-fit":
        p.setdefault("thin", 1)
        p.setdefault("proposal_scale", 0.25)
        p.setdefault("burn_in", p.get("iterations", 1) // 10)
        p.setdefault("level_density", {"family": "uniform"})
        if p["burn_in"] >= p.get("iterations", 1):
            problems.append("params.burn_in must be smaller than params.iterations")
    elif command == "frailty-sim":
        p.setdefault("rate", {"kappa": 1.0, "power": 1.0})
        p["rate"] = {"kappa": p["rate"].get("kappa", 1.0), "power": p["rate"].get("power", 1.0)}
        p.setdefault("emit", "comparison")
        p.setdefault("eval_times", [p["t_max"] / 2.0, p["t_max"]] if "t_max" in p else [])
        if "t_max" in p and any(t > p["t_max"] for t in p["eval_times"]):
            problems.append("params.eval_times must not exceed params.t_max")
    elif command == "localreg-fit":
        p.setdefault("kernel", "uniform")
        p.setdefault("m0", {"kind": "constant", "value": 0.0})
        p.setdefault("w0", 0.0)
        p.setdefault("sigma", "plug_in")
        if "grid" not in p and "x" in p:
            p["grid"] = {"start": min(p["x"]), "stop": max(p["x"]), "count": 101}
        if len(p.get("x", [])) != len(p.get("y", [])):
            problems.append("params.x and params.y must have the same length")
    return p, problems


def parse_config(
    text: str,
    command: str | None = None,
    out: Path | str | None = None,
    fmt: str = "csv",
) -> RunConfig:
    """Validate a JSON config document and return the resolved RunConfig.

    The command may come from the document itself or from the caller (the
    CLI passes the subcommand); if both are present they must agree.  Every
    schema violation is collected and reported together.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])
    doc_command = doc.get("command")
    if command is None and doc_command is None:
        raise ConfigError(["no command given (pass one on the CLI or set 'command')"])
    if command is not None and doc_command is not None and command != doc_command:
        raise ConfigError(
            [f"config 'command' field {doc_command!r} does not match requested {command!r}"]
        )
    command = command or doc_command
    if command not in PARAM_SCHEMAS:
        raise ConfigError([f"unknown command {command!r}"])
    validator = Draft202012Validator(config_schema(command))
    violations = [
        f"{'.'.join(str(p) for p in err.absolute_path) or '(top level)'}: {err.message}"
        for err in sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    ]
    seed = doc.get("seed")
    params = doc.get("params")
    resolved = params
    if isinstance(params, dict):
        resolved, extra = _resolve_params(command, params)
        violations.extend(extra)
    if seed is None and command in STOCHASTIC_COMMANDS:
        violations.append(f"seed is required for stochastic command '{command}'")
    if (
        command == "localreg-fit"
        and seed is None
        and isinstance(params, dict)
        and "hierarchical" in params
    ):
        violations.append("seed is required for localreg-fit with a hierarchical block")
    if violations:
        raise ConfigError(violations)
    if fmt not in ("csv", "json"):
        raise ConfigError([f"unknown output format {fmt!r}"])
    return RunConfig(
        command=command,
        seed=seed,
        params=resolved,
        out=Path(out) if out is not None else None,
        fmt=fmt,
    )


# ---------------------------------------------------------------------------
# command handlers: params -> (columns, rows, summary lines)


def _fmt_num(v: float) -> str:
    return f"{v:.6g}"


def _cmd_dp_sample(p, rng):
    params = dp.DPParams(
        b=p["b"],
        base=_build_base(p["base"]),
        stick_a=p.get("stick_a", 1.0),
        stick_b=p.get("stick_b"),
    )
    method = p["method"]
    draws = []
    for _ in range(p["n_draws"]):
        if method == "finite":
            draws.append(dp.finite_approx_sample(p["m"], params, rng))
        elif method == "stick":
            draws.append(dp.stick_breaking_sample(params, p["truncation_eps"], rng))
        else:
            draws.append(dp.random_m_sample(_build_m_law(p["m_law"]), params, rng))
    if p["emit"] == "atoms":
        columns = ["draw", "atom", "weight"]
        rows = [
            (k, float(a), float(w))
            for k, meas in enumerate(draws)
            for a, w in zip(meas.atoms, meas.weights)
        ]
        return columns, rows, []
    columns = ["draw", "n_atoms", "residual_mass", "mean"]
    with_set = "set_upper" in p
    if with_set:
        columns.append("p_set")
    rows = []
    for k, meas in enumerate(draws):
        row = [k, meas.atoms.size, meas.residual_mass, meas.integrate()]
        if with_set:
            row.append(meas.prob_leq(p["set_upper"]))
        rows.append(tuple(row))
    mean_of_means = float(np.mean([r[3] for r in rows]))
    return columns, rows, [f"mean of measure means: {_fmt_num(mean_of_means)}"]


def _cmd_mean_moments(p, rng):
    sticks = means.stick_moments(p["stick_a"], p["stick_b"], p["p_max"])
    spec = _moment_spec(p["y"], p["p_max"])
    m = means.central_moments(spec, sticks, p["p_max"])
    columns = ["p", "base_central_moment", "mean_central_moment"]
    rows = [
        (order, float(spec.central[order]), float(val))
        for order, val in zip(range(2, p["p_max"] + 1), m)
    ]
    return columns, rows, [f"mean of the random mean: {_fmt_num(float(spec.theta0))}"]


def _cmd_mean_chain(p, rng):
    y = _build_base(p["y"])
    path = means.stochastic_chain(
        p["stick_a"], p["stick_b"], y, p["steps"], p["burn_in"], rng
    )
    if p["moment_match"]:
        spec = _moment_spec(p["y"], 2)
        sticks = means.stick_moments(p["stick_a"], p["stick_b"], 2)
        (m2,) = means.central_moments(spec, sticks, 2)
        path = means.match_first_two_moments(path, float(spec.theta0), float(m2))
    thin = p["thin"]
    columns = ["step", "theta"]
    rows = [(p["burn_in"] + k * thin, float(v)) for k, v in enumerate(path[::thin])]
    return columns, rows, [f"chain mean: {_fmt_num(path.mean())}, sd: {_fmt_num(path.std())}"]


def _cmd_transform_check(p, rng):
    params = dp.DPParams(b=p["b"], base=_build_base(p["base"]))
    g = _build_g(p["g"])
    columns = ["u", "lhs_mc", "mc_se", "rhs_exact", "abs_diff", "within_3se"]
    rows, summary = [], []
    for u in p["u_values"]:
        out = means.transform_identity_check(
            u, params, g, p["n_sim"], p["quad_points"], rng, p["truncation_eps"]
        )
        rows.append(
            (
                out.u,
                out.lhs_mc,
                out.mc_se,
                out.rhs_exact,
                abs(out.lhs_mc - out.rhs_exact),
                out.within_3se,
            )
        )
        summary.append(
            f"u={_fmt_num(u)}: mc={out.lhs_mc:.6f} (se {out.mc_se:.2g}) "
            f"exact={out.rhs_exact:.6f} within_3se={out.within_3se}"
        )
    return columns, rows, summary


def _cmd_quantile_estimate(p, rng):
    data = quantile.SortedSample(np.asarray(p["data"], dtype=float))
    f0 = _build_base(p["f0"])
    b = p["b"]
    ys = _build_grid(p["y_grid"])
    columns = ["record", "y", "q_bernstein", "q_posterior_mean", "atom_index", "atom_x", "atom_mass"]
    rows = []
    for y in ys:
        qb = quantile.bernstein_quantile(float(y), data)
        if not p["posterior_mean"]:
            qpm = None
        elif b == 0:
            qpm = qb
        else:
            qpm = quantile.quantile_posterior_mean(float(y), data, b, f0)
        rows.append(("curve", float(y), qb, qpm, None, None, None))
    for y in p["mass_y"]:
        masses = quantile.noninf_point_masses(float(y), data.n)
        for i, (x, m) in enumerate(zip(data.values, masses), start=1):
            rows.append(("mass", float(y), None, None, i, float(x), float(m)))
    return columns, rows, [f"{ys.size} grid points, n={data.n}"]


def _cmd_density_estimate(p, rng):
    data = quantile.SortedSample(np.asarray(p["data"], dtype=float))
    est = quantile.automatic_density(data)
    lo, hi = est.support
    grid = _build_grid(p.get("grid", {"start": lo, "stop": hi, "count": 201}))
    columns = ["x", "density", "cdf"]
    rows = [(float(x), est.density(float(x)), est.cdf(float(x))) for x in grid]
    return columns, rows, [f"support [{_fmt_num(lo)}, {_fmt_num(hi)}]"]


def _cmd_pyramid_fit(p, rng):
    ld = p["level_density"]
    level = pyramid.LevelDensity(ld["family"], ld.get("alpha", 1.0), ld.get("beta", 1.0))
    kept = pyramid.posterior_sampler(
        p["depth"],
        level,
        np.asarray(p["data"], dtype=float),
        p["likelihood"],
        p["iterations"],
        p["proposal_scale"],
        rng,
        burn_in=p["burn_in"],
        thin=p["thin"],
    )
    labels = pyramid.node_labels(p["depth"])
    columns = ["iteration", "node", "value"]
    rows = []
    for k, pyr in enumerate(kept):
        it = p["burn_in"] + k * p["thin"]
        rows.extend((it, lab, float(v)) for lab, v in zip(labels, pyr.values))
    stacked = np.array([pyr.values for pyr in kept])
    summary = [f"retained draws: {len(kept)}"]
    summary += [
        f"node {lab}: posterior mean {m:.4f}" for lab, m in zip(labels, stacked.mean(axis=0))
    ]
    return columns, rows, summary


def _cmd_frailty_sim(p, rng):
    spec = frailty.FrailtySpec(
        theta=p["theta"],
        jump_law=_build_jump(p["jump"]),
        rate=frailty.CumulativeRate(p["rate"]["kappa"], p["rate"]["power"]),
    )
    if p["emit"] == "paths":
        columns = ["path", "time", "z"]
        rows = []
        for k in range(p["n_paths"]):
            path = frailty.simulate_path(spec, p["t_max"], rng)
            rows.extend(
                (k, float(t), float(z)) for t, z in zip(path.times, path.z_values)
            )
        return columns, rows, [f"{p['n_paths']} paths simulated"]
    ts = np.asarray(p["eval_times"], dtype=float)
    surv = np.empty((p["n_paths"], ts.size))
    for k in range(p["n_paths"]):
        path = frailty.simulate_path(spec, p["t_max"], rng)
        surv[k] = [path.conditional_survival(float(t)) for t in ts]
    columns = ["t", "mc_survival", "mc_se", "exact_survival", "abs_diff", "within_3se"]
    rows, summary = [], []
    for j, t in enumerate(ts):
        mc = float(surv[:, j].mean())
        se = float(surv[:, j].std(ddof=1) / math.sqrt(surv.shape[0]))
        exact = frailty.marginal_survival(spec, float(t))
        rows.append((float(t), mc, se, exact, abs(mc - exact), abs(mc - exact) <= 3 * se))
        summary.append(f"t={_fmt_num(t)}: mc={mc:.5f} exact={exact:.5f}")
    return columns, rows, summary


def _cmd_localreg_fit(p, rng):
    data = localreg.RegressionData(np.asarray(p["x"], float), np.asarray(p["y"], float))
    kernel = localreg.Kernel(p["kernel"])
    w0 = p["w0"]
    if w0 == "empirical_bayes":
        w0 = None
    elif isinstance(w0, dict):
        w0 = localreg.tabulated(w0["xs"], w0["values"])
    sigma = None if p["sigma"] == "plug_in" else p["sigma"]
    prior = localreg.LocalPrior(m0=_build_mean(p["m0"]), w0=w0, sigma=sigma)
    hier = None
    if "hierarchical" in p:
        h = p["hierarchical"]
        hier = localreg.HierarchicalSpec(
            xi_mean=tuple(h["xi_mean"]),
            xi_cov=tuple(tuple(row) for row in h["xi_cov"]),
            n_draws=h["n_draws"],
            rng=rng,
        )
    fit = localreg.fit_curve(data, _build_grid(p["grid"]), p["h"], prior, kernel, hier)
    columns = ["x", "mean", "sd", "s0", "m_tilde", "gap"]
    rows = [
        (
            float(x),
            None if math.isnan(m) else float(m),
            None if math.isnan(v) else float(math.sqrt(v)),
            float(s),
            None if math.isnan(mt) else float(mt),
            bool(g),
        )
        for x, m, v, s, mt, g in zip(
            fit.grid, fit.mean, fit.variance, fit.s0, fit.m_tilde, fit.gap
        )
    ]
    summary = [f"sigma used: {_fmt_num(fit.sigma)}; gaps: {int(fit.gap.sum())}"]
    return columns, rows, summary


def _cmd_envelope(p, rng):
    if p["mode"] == "predictive":
        draws = [np.asarray(d, dtype=float) for d in p["residual_draws"]]
        lengths = {d.size for d in draws}
        if len(lengths) != 1:
            raise ValueError("all residual draws must have the same length")
        g0 = _build_base(p["g0"])
        ts = _build_grid(p["t_grid"])
        vals = envelope.predictive_cdf(ts, np.vstack(draws), p["b"], g0, p.get("w_n"))
        columns = ["t", "cdf"]
        rows = [(float(t), float(v)) for t, v in zip(ts, vals)]
        n = lengths.pop()
        w = p.get("w_n")
        w = p["b"] / (p["b"] + n) if w is None else w
        return columns, rows, [f"n={n}, prior weight {_fmt_num(w)}"]
    val = envelope.control_log_factor(p["counts"], p["z"], p["b"])
    columns = ["n", "cells", "log_factor"]
    rows = [(int(sum(p["counts"])), len(p["counts"]), float(val))]
    return columns, rows, [f"log control factor: {_fmt_num(val)}"]


_HANDLERS = {
    "dp-sample": _cmd_dp_sample,
    "mean-moments": _cmd_mean_moments,
    "mean-chain": _cmd_mean_chain,
    "transform-check": _cmd_transform_check,
    "quantile-estimate": _cmd_quantile_estimate,
    "density-estimate": _cmd_density_estimate,
    "pyramid-fit": _cmd_pyramid_fit,
    "frailty-sim": _cmd_frailty_sim,
    "localreg-fit": _cmd_localreg_fit,
    "envelope": _cmd_envelope,
}


# ---------------------------------------------------------------------------
# output


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    s = str(v)
    if any(c in s for c in ",\"\n"):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv(path: Path, meta: dict, columns: list, rows: list) -> None:
    lines = ["# " + json.dumps(meta, sort_keys=True)]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_json(path: Path, meta: dict, columns: list, rows: list) -> None:
    def clean(v):
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, (np.floating,)):
            return float(v)
        return v

    doc = {
        "meta": meta,
        "columns": columns,
        "rows": [[clean(v) for v in row] for row in rows],
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def run(config: RunConfig, figures: bool = False) -> Path:
    """Execute a validated config; writes the output file (plus an optional
    figure next to it) and returns the output path."""
    rng = RngState(config.seed) if config.seed is not None else None
    columns, rows, summary = _HANDLERS[config.command](config.params, rng)
    out = config.out if config.out is not None else Path(f"{config.command}.{config.fmt}")
    out.parent.mkdir(parents=True, exist_ok=True)
    if config.fmt == "csv":
        write_csv(out, config.meta, columns, rows)
    else:
        write_json(out, config.meta, columns, rows)
    for line in summary:
        print(line)
    print(f"wrote {len(rows)} rows to {out}")
    if figures:
        from npbayes import report

        fig_path = out.with_suffix(".png")
        if report.render_figure(config.command, columns, rows, config.meta, fig_path):
            print(f"wrote figure to {fig_path}")
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="npbayes",
        description="Nonparametric Bayes toolkit: simulation and estimation commands.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in sorted(_HANDLERS):
        c = sub.add_parser(name)
        c.add_argument("--config", required=True, help="path to the JSON config document")
        c.add_argument("--out", default=None, help="output file (default <command>.<format>)")
        c.add_argument("--format", default="csv", choices=["csv", "json"], dest="fmt")
        c.add_argument(
            "--figures",
            action="store_true",
            help="also render a matplotlib figure next to the output file",
        )
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        _emit_error(args.command, "io", [str(exc)])
        return 2
    try:
        config = parse_config(text, command=args.command, out=args.out, fmt=args.fmt)
    except ConfigError as exc:
        _emit_error(args.command, "config", exc.violations)
        return 2
    try:
        run(config, figures=args.figures)
    except Exception as exc:  # noqa: BLE001 - surfaced as a machine-readable record
        _emit_error(args.command, "runtime", [f"{type(exc).__name__}: {exc}"])
        return 1
    return 0


def _emit_error(command: str, kind: str, messages: list) -> None:
    record = {"error": {"command": command, "type": kind, "messages": messages}}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
