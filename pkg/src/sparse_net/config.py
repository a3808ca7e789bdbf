"""Run configuration: JSON schema, validation and defaults.

The schema's defaults are read from the library dataclasses, so a config file
and a library call with no arguments agree.
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import fields
from pathlib import Path

import jsonschema

from .estimators import DEFAULT_GRID, SelectConfig
from .optimizer import OptConfig

SEED_ENV = "SPARSE_NET_SEED"

_OPT = OptConfig()
_SEL = SelectConfig()


def _num(default, minimum=None, exclusive=False, kind="number"):
    s = {"type": kind, "default": default}
    if minimum is not None:
        s["exclusiveMinimum" if exclusive else "minimum"] = minimum
    return s


def _obj(props: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props, "default": {}}


def config_schema() -> dict:
    grid = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
            "minItems": 1, "default": list(DEFAULT_GRID)}
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": "sparse-net run configuration",
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "seed": {"type": "integer", "minimum": 0,
                     "description": f"base seed; falls back to ${SEED_ENV}, then 0"},
            "workers": _num(1, 1, kind="integer"),
            "arch": _obj({
                "hidden_widths": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                  "minItems": 1, "default": [20, 20, 20]},
                "activation": {"enum": ["tanh", "identity"], "default": "tanh"},
            }),
            "synthetic": _obj({
                "n_features": _num(50, 1, kind="integer"),
                "n_significant": _num(10, 0, kind="integer"),
                "n_samples": _num(5000, 1, kind="integer"),
                "noise_sd": _num(1.0, 0),
                "input_low": _num(-1.0),
                "input_high": _num(1.0),
            }),
            "opt": _obj({
                "epochs": _num(_OPT.epochs, 1, kind="integer"),
                "initial_step": _num(_OPT.initial_step, 0, True),
                "backtracking_factor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1,
                                        "default": _OPT.backtracking_factor},
                "backtracking_growth": _num(_OPT.backtracking_growth, 1, True),
                "divergence_cap": _num(_OPT.divergence_cap, 0, True),
                "objective_tolerance": _num(_OPT.objective_tolerance, 0),
                "train_output_layer": {"type": "boolean", "default": _OPT.train_output_layer},
            }),
            "select": _obj({
                "gamma": _num(_SEL.gamma, 0, True),
                "lambda_grid": grid,
                "zeta_grid": copy.deepcopy(grid),
                "n_splits": _num(_SEL.n_splits, 1, kind="integer"),
                "test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1,
                                  "default": _SEL.test_fraction},
            }),
            "experiment": _obj({
                "replicates": _num(100, 1, kind="integer"),
                "method": {"enum": ["gl", "gl-agl", "gl_agl", "both"], "default": "both"},
                "data": {"type": ["string", "null"], "default": None},
                "response": {"type": ["string", "null"], "default": None},
                "add_noise": _num(0, 0, kind="integer"),
                "standardize": {"type": "boolean", "default": True},
                "scale_response": {"type": "boolean", "default": False},
            }),
            "output": _obj({
                "dir": {"type": "string", "default": "results"},
                "format": {"enum": ["csv", "json"], "default": "csv"},
            }),
        },
    }


def _fill_defaults(schema: dict, doc: dict) -> dict:
    out = dict(doc)
    for key, sub in schema.get("properties", {}).items():
        if sub.get("type") == "object":
            out[key] = _fill_defaults(sub, out.get(key, {}))
        elif key not in out and "default" in sub:
            out[key] = copy.deepcopy(sub["default"])
    return out


class ConfigError(ValueError):
    pass


def load_config(path=None) -> dict:
    """Validate a JSON config (or ``{}``) and fill in every default."""
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    schema = config_schema()
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    return _fill_defaults(schema, doc)


def resolve_seed(flag_seed, cfg: dict) -> int:
    """``--seed`` flag, else the config's ``seed``, else ``$SPARSE_NET_SEED``, else 0."""
    if flag_seed is not None:
        return int(flag_seed)
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def opt_config(cfg: dict, seed: int) -> OptConfig:
    names = {f.name for f in fields(OptConfig)}
    return OptConfig(seed=seed, **{k: v for k, v in cfg["opt"].items() if k in names})


def select_config(cfg: dict, seed: int) -> SelectConfig:
    s = cfg["select"]
    return SelectConfig(
        gamma=s["gamma"],
        lambda_grid=tuple(s["lambda_grid"]),
        zeta_grid=tuple(s["zeta_grid"]),
        n_splits=s["n_splits"],
        test_fraction=s["test_fraction"],
        opt=opt_config(cfg, seed),
        seed=seed,
    )


def write_schema(path) -> None:
    Path(path).write_text(json.dumps(config_schema(), indent=2) + "\n", encoding="utf-8")
