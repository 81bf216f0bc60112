import json
import math
from pathlib import Path

import numpy as np
import pytest

from npbayes.cli import ConfigError, main, parse_config, run
from npbayes.schemas import all_schemas


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def minimal_dp_config(seed=42):
    return {
        "version": 1,
        "seed": seed,
        "params": {
            "method": "finite",
            "m": 50,
            "b": 1.0,
            "base": {"family": "normal"},
            "n_draws": 20,
        },
    }


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    columns = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return meta, columns, rows


# ---------------------------------------------------------------------------
# config parsing


def test_parse_minimal_config_fills_defaults():
    cfg = parse_config(json.dumps(minimal_dp_config()), command="dp-sample")
    assert cfg.command == "dp-sample"
    assert cfg.seed == 42
    assert cfg.params["emit"] == "summary"


def test_parse_rejects_unknown_key():
    doc = minimal_dp_config()
    doc["params"]["bogus_knob"] = 1
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc), command="dp-sample")
    assert any("bogus_knob" in v for v in exc.value.violations)


def test_parse_requires_seed_for_stochastic():
    doc = minimal_dp_config()
    del doc["seed"]
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc), command="dp-sample")
    assert any("seed is required" in v for v in exc.value.violations)


def test_parse_reports_all_violations():
    doc = {"version": 1, "params": {"method": "warp", "b": -1}}
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc), command="dp-sample")
    assert len(exc.value.violations) >= 3


def test_parse_malformed_json():
    with pytest.raises(ConfigError) as exc:
        parse_config("{not json", command="dp-sample")
    assert "malformed JSON" in exc.value.violations[0]


def test_parse_command_mismatch():
    doc = minimal_dp_config()
    doc["command"] = "mean-moments"
    with pytest.raises(ConfigError):
        parse_config(json.dumps(doc), command="dp-sample")


def test_parse_method_specific_requirements():
    doc = minimal_dp_config()
    del doc["params"]["m"]
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc), command="dp-sample")
    assert any("method 'finite'" in v for v in exc.value.violations)


def test_deterministic_commands_need_no_seed():
    doc = {
        "version": 1,
        "params": {"stick_a": 1.0, "stick_b": 1.0, "p_max": 4, "y": {"family": "uniform"}},
    }
    cfg = parse_config(json.dumps(doc), command="mean-moments")
    assert cfg.seed is None


def test_localreg_hierarchical_needs_seed():
    doc = {
        "version": 1,
        "params": {
            "x": [0.0, 0.5, 1.0],
            "y": [0.0, 1.0, 0.0],
            "h": 0.5,
            "sigma": 0.3,
            "hierarchical": {"xi_mean": [0, 0], "xi_cov": [[1, 0], [0, 1]], "n_draws": 3},
        },
    }
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc), command="localreg-fit")
    assert any("hierarchical" in v for v in exc.value.violations)


# ---------------------------------------------------------------------------
# end-to-end runs


def test_dp_sample_csv_run(tmp_path):
    cfg = parse_config(
        json.dumps(minimal_dp_config()), command="dp-sample", out=tmp_path / "dp.csv"
    )
    out = run(cfg)
    meta, columns, rows = read_rows(out)
    assert meta["seed"] == 42
    assert columns == ["draw", "n_atoms", "residual_mass", "mean"]
    assert len(rows) == 20


def test_rerun_is_byte_identical(tmp_path):
    doc = minimal_dp_config(seed=7)
    cfg1 = parse_config(json.dumps(doc), command="dp-sample", out=tmp_path / "a.csv")
    cfg2 = parse_config(json.dumps(doc), command="dp-sample", out=tmp_path / "b.csv")
    run(cfg1)
    run(cfg2)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_different_seeds_differ(tmp_path):
    run(parse_config(json.dumps(minimal_dp_config(1)), "dp-sample", tmp_path / "a.csv"))
    run(parse_config(json.dumps(minimal_dp_config(2)), "dp-sample", tmp_path / "b.csv"))
    assert (tmp_path / "a.csv").read_text() != (tmp_path / "b.csv").read_text()


def test_transform_check_run(tmp_path, capsys):
    doc = {
        "version": 1,
        "seed": 11,
        "params": {
            "b": 1.0,
            "base": {"family": "uniform"},
            "g": {"kind": "identity"},
            "u_values": [1.0],
            "n_sim": 4000,
        },
    }
    out = run(parse_config(json.dumps(doc), "transform-check", tmp_path / "t.csv"))
    _, columns, rows = read_rows(out)
    vals = dict(zip(columns, rows[0]))
    assert float(vals["rhs_exact"]) == pytest.approx(math.e / 4, abs=1e-9)
    assert abs(float(vals["lhs_mc"]) - float(vals["rhs_exact"])) <= 3 * float(vals["mc_se"])
    assert vals["within_3se"] == "true"


def test_density_estimate_boundary(tmp_path):
    doc = {
        "version": 1,
        "params": {"data": [0.0, 1.0, 3.0], "grid": {"values": [0.0, 1.5, 3.0]}},
    }
    out = run(parse_config(json.dumps(doc), "density-estimate", tmp_path / "d.csv"))
    _, columns, rows = read_rows(out)
    assert float(rows[0][columns.index("density")]) == pytest.approx(0.5, abs=1e-12)


def test_quantile_estimate_masses(tmp_path):
    doc = {
        "version": 1,
        "params": {
            "data": [0.1, 0.4, 0.9],
            "b": 0,
            "f0": {"family": "uniform"},
            "y_grid": {"start": 0.25, "stop": 0.75, "count": 3},
            "mass_y": [0.5],
        },
    }
    out = run(parse_config(json.dumps(doc), "quantile-estimate", tmp_path / "q.json", fmt="json"))
    doc_out = json.loads(out.read_text())
    mass_rows = [r for r in doc_out["rows"] if r[0] == "mass"]
    assert len(mass_rows) == 3
    assert sum(r[6] for r in mass_rows) == pytest.approx(1.0, abs=1e-12)


def test_pyramid_fit_run(tmp_path, capsys):
    doc = {
        "version": 1,
        "seed": 3,
        "params": {
            "depth": 2,
            "data": [0.2, 0.5, 0.8],
            "likelihood": "substitute",
            "iterations": 200,
            "burn_in": 50,
        },
    }
    out = run(parse_config(json.dumps(doc), "pyramid-fit", tmp_path / "p.csv"))
    _, columns, rows = read_rows(out)
    assert columns == ["iteration", "node", "value"]
    assert len(rows) == 150 * 3
    assert "node 1/2" in capsys.readouterr().out


def test_frailty_sim_run(tmp_path):
    doc = {
        "version": 1,
        "seed": 5,
        "params": {
            "theta": 1.0,
            "jump": {"kind": "gamma", "shape": 1.0},
            "t_max": 2.0,
            "eval_times": [1.0, 2.0],
            "n_paths": 3000,
        },
    }
    out = run(parse_config(json.dumps(doc), "frailty-sim", tmp_path / "f.csv"))
    _, columns, rows = read_rows(out)
    exact = [float(r[columns.index("exact_survival")]) for r in rows]
    assert exact[0] == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert all(r[columns.index("within_3se")] == "true" for r in rows)


def test_localreg_fit_run(tmp_path):
    gen = np.random.default_rng(0)
    x = np.linspace(0, 1, 80)
    y = np.sin(2 * np.pi * x) + gen.normal(0, 0.2, 80)
    doc = {
        "version": 1,
        "params": {
            "x": x.tolist(),
            "y": y.tolist(),
            "h": 0.2,
            "sigma": 0.2,
            "w0": 0,
            "grid": {"start": 0.1, "stop": 0.9, "count": 9},
        },
    }
    out = run(parse_config(json.dumps(doc), "localreg-fit", tmp_path / "l.csv"))
    _, columns, rows = read_rows(out)
    assert columns == ["x", "mean", "sd", "s0", "m_tilde", "gap"]
    means_ = [float(r[1]) for r in rows]
    assert max(abs(m) for m in means_) < 1.6


def test_envelope_predictive_run(tmp_path):
    doc = {
        "version": 1,
        "params": {
            "mode": "predictive",
            "residual_draws": [[-0.5, 0.5], [-1.0, 1.0]],
            "b": 2.0,
            "g0": {"family": "normal"},
            "t_grid": {"start": -3, "stop": 3, "count": 13},
        },
    }
    out = run(parse_config(json.dumps(doc), "envelope", tmp_path / "e.csv"))
    _, columns, rows = read_rows(out)
    vals = [float(r[1]) for r in rows]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


def test_envelope_control_run(tmp_path):
    doc = {
        "version": 1,
        "params": {"mode": "control", "counts": [2, 5, 1], "z": [0.25, 0.5, 0.25], "b": 2.0},
    }
    out = run(parse_config(json.dumps(doc), "envelope", tmp_path / "c.json", fmt="json"))
    payload = json.loads(out.read_text())
    assert payload["columns"] == ["n", "cells", "log_factor"]
    assert payload["rows"][0][0] == 8


def test_mean_moments_exact_value(tmp_path):
    doc = {
        "version": 1,
        "params": {"stick_a": 1.0, "stick_b": 1.0, "p_max": 3, "y": {"family": "uniform"}},
    }
    out = run(parse_config(json.dumps(doc), "mean-moments", tmp_path / "m.csv"))
    _, columns, rows = read_rows(out)
    assert float(rows[0][columns.index("mean_central_moment")]) == pytest.approx(1 / 24, rel=1e-12)


def test_mean_chain_run(tmp_path):
    doc = {
        "version": 1,
        "seed": 9,
        "params": {
            "stick_a": 1.0,
            "stick_b": 1.0,
            "y": {"family": "uniform"},
            "steps": 5000,
            "burn_in": 100,
            "thin": 10,
        },
    }
    out = run(parse_config(json.dumps(doc), "mean-chain", tmp_path / "mc.csv"))
    _, columns, rows = read_rows(out)
    assert len(rows) == 490
    thetas = [float(r[1]) for r in rows]
    assert 0.0 <= min(thetas) and max(thetas) <= 1.0


def test_cli_main_roundtrip(tmp_path, capsys):
    path = write_config(tmp_path, minimal_dp_config())
    code = main(
        ["dp-sample", "--config", str(path), "--out", str(tmp_path / "out.csv")]
    )
    assert code == 0
    assert (tmp_path / "out.csv").exists()
    assert "wrote 20 rows" in capsys.readouterr().out


def test_cli_main_config_error(tmp_path, capsys):
    path = write_config(tmp_path, {"version": 1, "params": {}})
    code = main(["dp-sample", "--config", str(path)])
    assert code == 2
    record = json.loads(capsys.readouterr().err)
    assert record["error"]["type"] == "config"
    assert record["error"]["messages"]


def test_cli_main_missing_file(tmp_path, capsys):
    code = main(["dp-sample", "--config", str(tmp_path / "nope.json")])
    assert code == 2


def test_cli_figures(tmp_path, capsys):
    path = write_config(tmp_path, minimal_dp_config())
    code = main(
        [
            "dp-sample",
            "--config",
            str(path),
            "--out",
            str(tmp_path / "out.csv"),
            "--figures",
        ]
    )
    assert code == 0
    assert (tmp_path / "out.png").exists()


def test_published_schemas_in_sync():
    published = json.loads(Path("docs/config-schemas.json").read_text())
    assert published == all_schemas()
