import json

import pytest

from npbayes.cli import main

CONFIGS = {
    "dp-sample": {
        "version": 1,
        "seed": 1,
        "params": {
            "method": "stick",
            "b": 1.0,
            "base": {"family": "uniform"},
            "n_draws": 50,
            "set_upper": 0.5,
        },
    },
    "mean-moments": {
        "version": 1,
        "params": {"stick_a": 1.0, "stick_b": 2.0, "p_max": 6, "y": {"family": "uniform"}},
    },
    "mean-chain": {
        "version": 1,
        "seed": 2,
        "params": {
            "stick_a": 1.0,
            "stick_b": 1.0,
            "y": {"family": "uniform"},
            "steps": 2000,
            "burn_in": 100,
        },
    },
    "transform-check": {
        "version": 1,
        "seed": 3,
        "params": {
            "b": 1.0,
            "base": {"family": "uniform"},
            "g": {"kind": "identity"},
            "u_values": [0.5, 1.0],
            "n_sim": 500,
        },
    },
    "quantile-estimate": {
        "version": 1,
        "params": {
            "data": [0.1, 0.3, 0.7, 0.9],
            "b": 1.0,
            "f0": {"family": "uniform"},
            "y_grid": {"start": 0.1, "stop": 0.9, "count": 9},
            "mass_y": [0.5],
        },
    },
    "density-estimate": {
        "version": 1,
        "params": {"data": [0.0, 0.2, 0.5, 0.9, 1.7, 3.0]},
    },
    "pyramid-fit": {
        "version": 1,
        "seed": 4,
        "params": {
            "depth": 2,
            "data": [0.2, 0.4, 0.6],
            "likelihood": "interp",
            "iterations": 300,
            "burn_in": 100,
        },
    },
    "frailty-sim": {
        "version": 1,
        "seed": 5,
        "params": {
            "theta": 1.0,
            "jump": {"kind": "gamma", "shape": 1.0},
            "t_max": 2.0,
            "n_paths": 500,
            "emit": "paths",
        },
    },
    "localreg-fit": {
        "version": 1,
        "params": {
            "x": [0.0, 0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0],
            "y": [0.1, 0.4, 0.8, 1.0, 0.9, 0.5, 0.2, 0.0],
            "h": 0.4,
            "sigma": 0.2,
            "w0": 0.5,
            "grid": {"start": 0.1, "stop": 0.9, "count": 17},
        },
    },
    "envelope": {
        "version": 1,
        "params": {
            "mode": "predictive",
            "residual_draws": [[-0.4, 0.1, 0.8]],
            "b": 1.0,
            "g0": {"family": "normal"},
            "t_grid": {"start": -3, "stop": 3, "count": 25},
        },
    },
}


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_every_command_renders_a_figure(tmp_path, command):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(CONFIGS[command]))
    out = tmp_path / "out.csv"
    code = main([command, "--config", str(cfg), "--out", str(out), "--figures"])
    assert code == 0
    assert out.exists()
    png = out.with_suffix(".png")
    assert png.exists() and png.stat().st_size > 1000
