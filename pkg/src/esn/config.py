"""Experiment configuration: JSON schema, overrides, digest, scenario build.

Every numeric knob of an experiment lives in the config document, never in
code; a run is fully determined by (config, seed).
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Sequence

import jsonschema

from .errors import ContractViolation
from .shape import Box, shape_from_config
from .simulate import GridSpec, Scenario
from .weight import weight_from_config

__all__ = [
    "CONFIG_SCHEMA",
    "ConfigError",
    "load_config",
    "apply_overrides",
    "validate_config",
    "scenario_from_config",
    "canonical_digest",
    "format_float",
]

EXPERIMENTS = (
    "marginal_ks",
    "converge",
    "pot",
    "order_stats",
    "bigball",
    "coefficients",
    "extremal_index",
    "campbell",
    "mixing",
    "validate",
)

_SHAPE_SCHEMA = {
    "type": "object",
    "required": ["variant"],
    "properties": {
        "variant": {
            "enum": [
                "gaussian_diag",
                "path_loss_hard",
                "path_loss_smooth",
                "indicator_box",
                "log_decay",
            ]
        },
        "sigma": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "halfwidths": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "amplitude": {"type": "number", "exclusiveMinimum": 0},
        "A": {"type": "number", "exclusiveMinimum": 0},
        "r0": {"type": "number", "exclusiveMinimum": 0},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "number", "exclusiveMinimum": 0},
        "cap": {"type": "number", "exclusiveMinimum": 0},
        "dimension": {"type": "integer", "minimum": 1, "maximum": 3},
    },
    "additionalProperties": False,
}

_WEIGHT_SCHEMA = {
    "type": "object",
    "required": ["variant"],
    "properties": {
        "variant": {"enum": ["power_measure", "pareto", "burr", "exponential", "sum"]},
        "xi": {"type": "number", "exclusiveMinimum": 0},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "c": {"type": "number", "exclusiveMinimum": 0},
        "k": {"type": "number", "exclusiveMinimum": 0},
        "rate": {"type": "number", "exclusiveMinimum": 0},
        "parts": {"type": "array", "minItems": 1},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment", "seed", "reps", "scenario"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "reps": {"type": "integer", "minimum": 1},
        "scenario": {
            "type": "object",
            "required": ["dimension", "shape", "weight", "lambda", "window", "grid"],
            "properties": {
                "dimension": {"type": "integer", "minimum": 1, "maximum": 3},
                "shape": _SHAPE_SCHEMA,
                "weight": _WEIGHT_SCHEMA,
                "lambda": {"type": "number", "exclusiveMinimum": 0},
                "window": {
                    "type": "object",
                    "required": ["lo", "hi"],
                    "properties": {
                        "lo": {"type": "array", "items": {"type": "number"}},
                        "hi": {"type": "array", "items": {"type": "number"}},
                    },
                    "additionalProperties": False,
                },
                "grid": {
                    "type": "object",
                    "required": ["origin", "spacing", "counts"],
                    "properties": {
                        "origin": {"type": "array", "items": {"type": "number"}},
                        "spacing": {
                            "type": "array",
                            "items": {"type": "number", "exclusiveMinimum": 0},
                        },
                        "counts": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 1},
                        },
                    },
                    "additionalProperties": False,
                },
                "u0": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "max_halvings": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "params": {"type": "object"},
    },
    "additionalProperties": False,
}


class ConfigError(ContractViolation):
    """Invalid configuration; carries the JSON pointer of the offender."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


def load_config(path) -> dict:
    try:
        with open(Path(path)) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("/", f"config is not valid JSON: {e}") from e


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        pointer = "/" + "/".join(str(p) for p in e.absolute_path)
        raise ConfigError(pointer, e.message)


def apply_overrides(cfg: dict, overrides: Sequence[str]) -> dict:
    """Apply dotted-path key=value overrides; values parse as JSON literals
    with a plain-string fallback."""
    out = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError("/", f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node, dict) or p not in node:
                raise ConfigError("/" + "/".join(parts), f"unknown config path {key!r}")
            node = node[p]
        if not isinstance(node, dict):
            raise ConfigError("/" + "/".join(parts), f"unknown config path {key!r}")
        node[parts[-1]] = value
    return out


def scenario_from_config(cfg: dict) -> Scenario:
    scn = cfg["scenario"]
    window = Box(tuple(scn["window"]["lo"]), tuple(scn["window"]["hi"]))
    grid = GridSpec(
        origin=tuple(scn["grid"]["origin"]),
        spacing=tuple(scn["grid"]["spacing"]),
        counts=tuple(int(c) for c in scn["grid"]["counts"]),
    )
    return Scenario(
        dimension=int(scn["dimension"]),
        shape=shape_from_config(scn["shape"]),
        weight=weight_from_config(scn["weight"]),
        lam=float(scn["lambda"]),
        window=window,
        grid=grid,
        u0=scn.get("u0"),
        max_halvings=int(scn.get("max_halvings", 40)),
        reps=int(cfg["reps"]),
        seed=int(cfg["seed"]),
    )


def canonical_digest(cfg: dict) -> str:
    """sha256 of the canonicalized config; stable under key reordering."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def format_float(x: float) -> str:
    """17 significant digits: round-trips every IEEE double."""
    return f"{float(x):.17g}"
