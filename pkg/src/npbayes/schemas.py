"""JSON schemas for the CLI configuration files, one per command.

The same definitions are published in ``docs/config-schemas.json``; a test
keeps the copies in sync.  Every object rejects unknown keys.
"""

from __future__ import annotations

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}
_NONNEG_INT = {"type": "integer", "minimum": 0}
_NUM_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_UNIT_OPEN = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

BASE_DISTRIBUTION = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "family": {"const": "uniform"},
                "lo": {"type": "number"},
                "hi": {"type": "number"},
            },
            "required": ["family"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "family": {"const": "normal"},
                "loc": {"type": "number"},
                "sd": _POS,
            },
            "required": ["family"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "family": {"const": "empirical"},
                "points": _NUM_LIST,
                "masses": _NUM_LIST,
            },
            "required": ["family", "points"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "family": {"const": "mixture"},
                "continuous": {"$ref": "#/$defs/base"},
                "cont_mass": _POS,
                "points": _NUM_LIST,
                "masses": _NUM_LIST,
            },
            "required": ["family", "continuous", "cont_mass", "points"],
            "additionalProperties": False,
        },
    ]
}

GRID = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "start": {"type": "number"},
                "stop": {"type": "number"},
                "count": {"type": "integer", "minimum": 2},
            },
            "required": ["start", "stop", "count"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"values": _NUM_LIST},
            "required": ["values"],
            "additionalProperties": False,
        },
    ]
}

_JUMP_LAW = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "gamma"}, "shape": _POS},
            "required": ["kind", "shape"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"const": "point"}, "value": _NONNEG},
            "required": ["kind", "value"],
            "additionalProperties": False,
        },
    ]
}

_RATE = {
    "type": "object",
    "properties": {"kappa": _NONNEG, "power": _POS},
    "additionalProperties": False,
}

_G_FUNCTION = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "identity"}},
            "required": ["kind"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"const": "square"}},
            "required": ["kind"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"const": "abs"}},
            "required": ["kind"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "affine"},
                "intercept": {"type": "number"},
                "slope": {"type": "number"},
            },
            "required": ["kind", "intercept", "slope"],
            "additionalProperties": False,
        },
    ]
}

_MEAN_FN = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "constant"}, "value": {"type": "number"}},
            "required": ["kind", "value"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "linear"},
                "intercept": {"type": "number"},
                "slope": {"type": "number"},
            },
            "required": ["kind", "intercept", "slope"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"const": "tabulated"}, "xs": _NUM_LIST, "values": _NUM_LIST},
            "required": ["kind", "xs", "values"],
            "additionalProperties": False,
        },
    ]
}

_LEVEL_DENSITY = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"family": {"const": "uniform"}},
            "required": ["family"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"family": {"const": "beta"}, "alpha": _POS, "beta": _POS},
            "required": ["family", "alpha", "beta"],
            "additionalProperties": False,
        },
    ]
}

_M_LAW = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "fixed"}, "m": _POS_INT},
            "required": ["kind", "m"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"const": "one_plus_poisson"}, "mean": _NONNEG},
            "required": ["kind", "mean"],
            "additionalProperties": False,
        },
    ]
}

PARAM_SCHEMAS = {
    "dp-sample": {
        "type": "object",
        "properties": {
            "method": {"enum": ["finite", "stick", "random_m"]},
            "b": _POS,
            "base": {"$ref": "#/$defs/base"},
            "stick_a": _POS,
            "stick_b": _POS,
            "m": _POS_INT,
            "truncation_eps": _UNIT_OPEN,
            "m_law": _M_LAW,
            "n_draws": _POS_INT,
            "emit": {"enum": ["summary", "atoms"]},
            "set_upper": {"type": "number"},
        },
        "required": ["method", "b", "base", "n_draws"],
        "additionalProperties": False,
    },
    "mean-moments": {
        "type": "object",
        "properties": {
            "stick_a": _POS,
            "stick_b": _POS,
            "p_max": {"type": "integer", "minimum": 2, "maximum": 60},
            "y": {"$ref": "#/$defs/base"},
        },
        "required": ["stick_a", "stick_b", "p_max", "y"],
        "additionalProperties": False,
    },
    "mean-chain": {
        "type": "object",
        "properties": {
            "stick_a": _POS,
            "stick_b": _POS,
            "y": {"$ref": "#/$defs/base"},
            "steps": {"type": "integer", "minimum": 2},
            "burn_in": _NONNEG_INT,
            "thin": _POS_INT,
            "moment_match": {"type": "boolean"},
        },
        "required": ["stick_a", "stick_b", "y", "steps"],
        "additionalProperties": False,
    },
    "transform-check": {
        "type": "object",
        "properties": {
            "b": _POS,
            "base": {"$ref": "#/$defs/base"},
            "g": _G_FUNCTION,
            "u_values": {"type": "array", "items": _POS, "minItems": 1},
            "n_sim": _POS_INT,
            "quad_points": {"type": "integer", "minimum": 4},
            "truncation_eps": _UNIT_OPEN,
        },
        "required": ["b", "base", "g", "u_values", "n_sim"],
        "additionalProperties": False,
    },
    "quantile-estimate": {
        "type": "object",
        "properties": {
            "data": _NUM_LIST,
            "b": _NONNEG,
            "f0": {"$ref": "#/$defs/base"},
            "y_grid": GRID,
            "posterior_mean": {"type": "boolean"},
            "mass_y": {"type": "array", "items": _UNIT_OPEN},
        },
        "required": ["data", "b", "f0", "y_grid"],
        "additionalProperties": False,
    },
    "density-estimate": {
        "type": "object",
        "properties": {"data": _NUM_LIST, "grid": GRID},
        "required": ["data"],
        "additionalProperties": False,
    },
    "pyramid-fit": {
        "type": "object",
        "properties": {
            "depth": {"type": "integer", "minimum": 1, "maximum": 10},
            "data": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
            "likelihood": {"enum": ["interp", "substitute"]},
            "iterations": _POS_INT,
            "burn_in": _NONNEG_INT,
            "thin": _POS_INT,
            "proposal_scale": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "level_density": _LEVEL_DENSITY,
        },
        "required": ["depth", "data", "likelihood", "iterations"],
        "additionalProperties": False,
    },
    "frailty-sim": {
        "type": "object",
        "properties": {
            "theta": _NONNEG,
            "jump": _JUMP_LAW,
            "rate": _RATE,
            "t_max": _POS,
            "eval_times": {"type": "array", "items": _NONNEG, "minItems": 1},
            "n_paths": _POS_INT,
            "emit": {"enum": ["comparison", "paths"]},
        },
        "required": ["theta", "jump", "t_max", "n_paths"],
        "additionalProperties": False,
    },
    "localreg-fit": {
        "type": "object",
        "properties": {
            "x": _NUM_LIST,
            "y": _NUM_LIST,
            "h": _POS,
            "kernel": {"enum": ["uniform", "triangular", "epanechnikov", "biweight"]},
            "m0": _MEAN_FN,
            "w0": {
                "oneOf": [
                    _NONNEG,
                    {"const": "empirical_bayes"},
                    {
                        "type": "object",
                        "properties": {
                            "kind": {"const": "tabulated"},
                            "xs": _NUM_LIST,
                            "values": _NUM_LIST,
                        },
                        "required": ["kind", "xs", "values"],
                        "additionalProperties": False,
                    },
                ]
            },
            "sigma": {"oneOf": [_POS, {"const": "plug_in"}]},
            "grid": GRID,
            "hierarchical": {
                "type": "object",
                "properties": {
                    "xi_mean": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                    "xi_cov": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                    "n_draws": _POS_INT,
                },
                "required": ["xi_mean", "xi_cov", "n_draws"],
                "additionalProperties": False,
            },
        },
        "required": ["x", "y", "h"],
        "additionalProperties": False,
    },
    "envelope": {
        "oneOf": [
            {
                "type": "object",
                "properties": {
                    "mode": {"const": "predictive"},
                    "residual_draws": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "number"}},
                        "minItems": 1,
                    },
                    "b": _POS,
                    "g0": {"$ref": "#/$defs/base"},
                    "t_grid": GRID,
                    "w_n": {"type": "number", "minimum": 0, "maximum": 1},
                },
                "required": ["mode", "residual_draws", "b", "g0", "t_grid"],
                "additionalProperties": False,
            },
            {
                "type": "object",
                "properties": {
                    "mode": {"const": "control"},
                    "counts": {"type": "array", "items": _NONNEG_INT, "minItems": 1},
                    "z": {"type": "array", "items": _POS, "minItems": 1},
                    "b": _POS,
                },
                "required": ["mode", "counts", "z", "b"],
                "additionalProperties": False,
            },
        ]
    },
}

# commands whose output depends on random draws; these must carry a seed
STOCHASTIC_COMMANDS = frozenset(
    ["dp-sample", "mean-chain", "transform-check", "pyramid-fit", "frailty-sim"]
)


def config_schema(command: str) -> dict:
    """Full schema of a config document for one command."""
    if command not in PARAM_SCHEMAS:
        raise KeyError(f"unknown command {command!r}")
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "properties": {
            "version": {"const": 1},
            "command": {"const": command},
            "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            "params": PARAM_SCHEMAS[command],
        },
        "required": ["version", "params"],
        "additionalProperties": False,
        "$defs": {"base": BASE_DISTRIBUTION},
    }


def all_schemas() -> dict:
    return {command: config_schema(command) for command in sorted(PARAM_SCHEMAS)}
