"""JSON experiment configuration: schema, validation and defaults.

Two document kinds are accepted. A *sweep* config names an ``experiment``
and its ``params``; a *field* config describes a single field for the
``spectrum``, ``freqscale``, ``heat``, ``nodal`` and ``verify`` commands.
Unknown keys are rejected at every level.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

from .generators import ConfigError

EXPERIMENTS = ("sharpness", "sturm", "dirac", "thm2", "cubes", "davies_gaffney", "cor1", "smoothed")
SWEEP_ALIASES = {"dg": "davies_gaffney"}

DEFAULT_N = {1: 8192, 2: 512, 3: 64}

_int_list = {"type": "array", "items": {"type": "integer"}, "minItems": 1}
_pos_list = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}
_seeds = {
    "oneOf": [
        {"type": "integer", "minimum": 1},
        {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
    ]
}
_pos = {"type": "number", "exclusiveMinimum": 0}

_GRID = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dim"],
    "properties": {
        "dim": {"type": "integer", "enum": [1, 2, 3]},
        "N": {"type": "integer", "minimum": 16},
    },
}

_OUTPUT = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "csv": {"type": "string"},
        "json": {"type": "string"},
        "svg": {"type": "string"},
        "record_timing": {"type": "boolean"},
    },
}

PARAM_SCHEMAS = {
    "sharpness": {"k_list": _int_list, "c": _pos, "c_reg": _pos},
    "thm2": {"k_list": _int_list, "c": _pos, "c_reg": _pos},
    "sturm": {"n_list": _int_list, "seeds": _seeds, "extra_modes": {"type": "integer", "minimum": 1}},
    "dirac": {
        "n_list": _int_list,
        "r_list": _pos_list,
        "seeds": _seeds,
        "n_ref": {"type": "integer", "minimum": 1},
        "r_ref": _pos,
        "jitter": {"type": "number", "minimum": 0, "maximum": 0.5},
    },
    "cubes": {
        "seeds": _seeds,
        "n_cut": {"type": "integer", "minimum": 0},
        "n_max": {"type": "integer", "minimum": 1},
        "proof_faithful": {"type": "boolean"},
        "radii": {"type": "boolean"},
    },
    "davies_gaffney": {"pairs": {"type": "integer", "minimum": 1}, "t_list": _pos_list, "seed": {"type": "integer"}},
    "cor1": {
        "seeds": _seeds,
        "terms": {"type": "integer", "minimum": 1},
        "m_max": {"type": "integer", "minimum": 1},
        "eps": _pos,
    },
    "smoothed": {
        "seeds": _seeds,
        "n_cut": {"type": "integer", "minimum": 0},
        "n_max": {"type": "integer", "minimum": 1},
        "t0": _pos,
        "J": {"type": "integer", "minimum": 0},
    },
}

PARAM_DEFAULTS = {
    "sharpness": {"k_list": [4, 8, 16, 32], "c": 1e-2, "c_reg": 2.5},
    "thm2": {"k_list": [4, 8, 16, 32], "c": 1e-2, "c_reg": 2.5},
    "sturm": {"n_list": list(range(1, 33)), "seeds": 100, "extra_modes": 4},
    "dirac": {"n_list": [16, 64, 256], "r_list": [0.025, 0.05, 0.1], "seeds": 5, "n_ref": 16, "r_ref": 0.1, "jitter": 0.2},
    "cubes": {"seeds": 20, "n_cut": 5, "n_max": 10, "proof_faithful": False, "radii": True},
    "davies_gaffney": {"pairs": 200, "t_list": [1e-3, 1e-2], "seed": 0},
    "cor1": {"seeds": 20, "terms": 2, "m_max": 6, "eps": 0.1},
    "smoothed": {"seeds": 5, "n_cut": 3, "n_max": 8, "t0": 1e-3, "J": 6},
}

DEFAULT_GRID = {
    "sharpness": {"dim": 2},
    "thm2": {"dim": 2},
    "sturm": {"dim": 1},
    "dirac": {"dim": 2},
    "cubes": {"dim": 2, "N": 256},
    "davies_gaffney": {"dim": 2, "N": 256},
    "cor1": {"dim": 2},
    "smoothed": {"dim": 2, "N": 256},
}


def _sweep_schema() -> dict:
    branches = []
    for name, props in PARAM_SCHEMAS.items():
        branches.append(
            {
                "if": {"properties": {"experiment": {"const": name}}},
                "then": {"properties": {"params": {"type": "object", "additionalProperties": False, "properties": props}}},
            }
        )
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "sweep config",
        "type": "object",
        "additionalProperties": False,
        "required": ["experiment"],
        "properties": {
            "experiment": {"enum": list(EXPERIMENTS)},
            "grid": _GRID,
            "params": {"type": "object"},
            "output": _OUTPUT,
        },
        "allOf": branches,
    }


_FIELD = {
    "type": "object",
    "required": ["type"],
    "oneOf": [
        {
            "additionalProperties": False,
            "properties": {"type": {"const": "file"}, "path": {"type": "string"}},
            "required": ["path"],
        },
        {
            "additionalProperties": False,
            "properties": {
                "type": {"const": "cosine"},
                "k": {"type": "integer"},
                "axis": {"type": "integer", "minimum": 0},
                "amplitude": {"type": "number"},
            },
            "required": ["k"],
        },
        {
            "additionalProperties": False,
            "properties": {
                "type": {"const": "eigen_sum"},
                "terms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["a", "m"],
                        "properties": {
                            "a": {"type": "number"},
                            "m": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                            "kind": {"enum": ["cos", "sin"]},
                        },
                    },
                },
            },
            "required": ["terms"],
        },
        {
            "additionalProperties": False,
            "properties": {
                "type": {"const": "highpass"},
                "seed": {"type": "integer"},
                "n_cut": {"type": "integer", "minimum": 0},
                "n_max": {"type": "integer", "minimum": 1},
            },
            "required": ["seed", "n_cut", "n_max"],
        },
        {
            "additionalProperties": False,
            "properties": {
                "type": {"const": "dirac"},
                "seed": {"type": "integer"},
                "n_points": {"type": "integer", "minimum": 1},
                "r": _pos,
                "jitter": {"type": "number", "minimum": 0, "maximum": 0.5},
            },
            "required": ["seed", "n_points", "r"],
        },
    ],
}

FIELD_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "field config",
    "type": "object",
    "additionalProperties": False,
    "required": ["field"],
    "properties": {
        "grid": _GRID,
        "field": _FIELD,
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c": _pos,
                "rhs_norm": {"enum": ["l1", "l2"]},
                "c_reg": _pos,
                "t": _pos,
                "eps": _pos,
                "saddle": {"enum": ["spectral", "bilinear"]},
                "encoding": {"enum": ["csv", "f64le"]},
                "strict": {"type": "boolean"},
            },
        },
        "output": _OUTPUT,
    },
}

SWEEP_SCHEMA = _sweep_schema()


def _validate(doc, schema) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {e.message}") from None


def _read(source) -> dict:
    if isinstance(source, dict):
        return copy.deepcopy(source)
    path = Path(source)
    try:
        return json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None


def _fill_grid(grid: dict | None, fallback: dict) -> dict:
    grid = dict(fallback if grid is None else grid)
    grid.setdefault("N", DEFAULT_N[grid["dim"]])
    return grid


def load_sweep_config(source, experiment: str | None = None) -> dict:
    """Validated sweep config with every default made explicit.

    ``experiment`` (from the command line) must agree with the document's
    own ``experiment`` key when both are given.
    """
    doc = _read(source)
    if experiment is not None:
        experiment = SWEEP_ALIASES.get(experiment, experiment)
        doc.setdefault("experiment", experiment)
        if doc["experiment"] != experiment:
            raise ConfigError(f"config is for {doc['experiment']!r}, not {experiment!r}")
    _validate(doc, SWEEP_SCHEMA)
    name = doc["experiment"]
    doc["grid"] = _fill_grid(doc.get("grid"), DEFAULT_GRID[name])
    doc["params"] = {**PARAM_DEFAULTS[name], **doc.get("params", {})}
    doc.setdefault("output", {})
    doc["output"].setdefault("csv", f"{name}.csv")
    doc["output"].setdefault("json", f"{name}.json")
    doc["output"].setdefault("record_timing", False)
    return doc


def load_field_config(source) -> dict:
    doc = _read(source)
    _validate(doc, FIELD_SCHEMA)
    doc["grid"] = _fill_grid(doc.get("grid"), {"dim": 2})
    doc.setdefault("params", {})
    doc.setdefault("output", {})
    return doc


def seed_list(seeds) -> list[int]:
    """``seeds`` is a count (``0..n-1``) or an explicit list."""
    return list(range(seeds)) if isinstance(seeds, int) else sorted(int(s) for s in seeds)
