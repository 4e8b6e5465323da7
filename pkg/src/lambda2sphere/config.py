"""Experiment configuration: one JSON document, validated before any work."""

import json
import os
from pathlib import Path

import jsonschema
import numpy as np

from .discretize import ConformalMetric, cached_mesh, random_harmonic_metric
from .optimize import two_bubble

_METRIC = {
    "type": "object",
    "properties": {
        "type": {"enum": ["round", "harmonic", "nodal", "two_bubble", "random", "file"]},
        "name": {"type": "string"},
        "coeffs": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array", "items": {"type": "number"}},
        "s": {"type": "number", "minimum": 0},
        "axis": {"type": "array", "items": {"type": "number"}},
        "seed": {"type": "integer"},
        "L": {"type": "integer", "minimum": 0, "maximum": 8},
        "amplitude": {"type": "number", "minimum": 0},
        "count": {"type": "integer", "minimum": 1},
        "path": {"type": "string"},
    },
    "required": ["type"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "m": {"enum": [2, 3]},
        "level": {"type": "integer", "minimum": 0, "maximum": 7},
        "seed": {"type": "integer"},
        "workers": {"type": "integer", "minimum": 1},
        "metric": _METRIC,
        "metrics": {"type": "array", "items": _METRIC},
        "solver": {
            "type": "object",
            "properties": {
                "K": {"type": "integer", "minimum": 3},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "com_tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "properties": {
                "points": {"type": "integer", "minimum": 4},
                "t_values": {"type": "integer", "minimum": 2},
                "zero_tol": {"type": "number", "exclusiveMinimum": 0},
                "degree_level": {"type": "integer", "minimum": 0, "maximum": 5},
            },
            "additionalProperties": False,
        },
        "geometry": {
            "type": "object",
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "rmax": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "threshold": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "cap": {
            "type": "object",
            "properties": {
                "p": {"type": "array", "items": {"type": "number"}},
                "t": {"type": "number", "minimum": 0, "maximum": 1},
            },
            "required": ["p", "t"],
            "additionalProperties": False,
        },
        "optimize": {
            "type": "object",
            "properties": {
                "L": {"type": "integer", "minimum": 1, "maximum": 8},
                "budget": {"type": "integer", "minimum": 1},
                "step": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "output": {"type": "string"},
    },
    "additionalProperties": False,
}

DEFAULTS = {
    "m": 2,
    "level": 4,
    "seed": 0,
    "workers": os.cpu_count() or 1,
    "metric": {"type": "round"},
    "solver": {"K": 9, "tol": 1e-8, "com_tol": 1e-11},
    "grid": {"points": 512, "t_values": 33, "zero_tol": 1e-6, "degree_level": 2},
    "geometry": {"samples": 10_000, "rmax": 0.9, "threshold": 1e-12},
    "optimize": {"L": 2, "budget": 200, "step": 0.25},
}


class ConfigError(ValueError):
    pass


def load_config(path=None, overrides=None):
    """Read, validate and fill defaults.  Raises ConfigError on any problem."""
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for key, val in (overrides or {}).items():
        if val is not None:
            doc[key] = val
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    cfg = {}
    for key, val in DEFAULTS.items():
        if isinstance(val, dict) and key != "metric":
            cfg[key] = {**val, **doc.get(key, {})}
        else:
            cfg[key] = doc.get(key, val)
    for key in ("metrics", "cap", "output"):
        if key in doc:
            cfg[key] = doc[key]
    return cfg


def build_metrics(spec, m, mesh):
    """Expand one metric spec into a list of (name, ConformalMetric)."""
    kind = spec["type"]
    name = spec.get("name", kind)
    if kind == "round":
        return [(name, ConformalMetric.round(m))]
    if kind == "harmonic":
        return [(name, ConformalMetric(m, "harmonic", spec["coeffs"]))]
    if kind == "nodal":
        if len(spec["values"]) != mesh.n_vertices:
            raise ConfigError("nodal metric length does not match the mesh")
        return [(name, ConformalMetric(m, "nodal", spec["values"], mesh))]
    if kind == "two_bubble":
        axis = spec.get("axis")
        return [(spec.get("name", f"two_bubble(s={spec['s']})"),
                 two_bubble(spec["s"], mesh, None if axis is None else np.asarray(axis)))]
    if kind == "random":
        rng = np.random.default_rng(spec.get("seed", 0))
        out = []
        for i in range(spec.get("count", 1)):
            g = random_harmonic_metric(rng, m, spec.get("L", 4), spec.get("amplitude", 0.5))
            out.append((f"{name}[{i}]", g))
        return out
    if kind == "file":
        g = ConformalMetric.from_json(Path(spec["path"]).read_text(), mesh)
        if g.m != m:
            raise ConfigError(f"metric file is for S^{g.m}, config says m = {m}")
        return [(name, g)]
    raise ConfigError(f"unknown metric type {kind!r}")


def metrics_of(cfg, mesh):
    specs = cfg.get("metrics") or [cfg["metric"]]
    out = []
    for spec in specs:
        out.extend(build_metrics(spec, cfg["m"], mesh))
    return out


def mesh_of(cfg):
    return cached_mesh(cfg["m"], cfg["level"])
