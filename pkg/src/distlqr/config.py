"""Run configuration: strict JSON schema, named presets, materialized defaults."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .chisq import NoiseModel
from .errors import ConfigError, DistLQRError
from .model import SystemSpec
from .settings import DEFAULT_TOLERANCES, SERIES_MAX_TERMS, SERIES_TOL, Tolerances

_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}
_VECTOR = {"type": "array", "minItems": 1, "items": {"type": "number"}}

_NOISE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["gaussian", "uniform", "laplace", "logistic", "triangular", "gaussian_mixture"]},
        "covariance": _MATRIX,
        "scale": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "separation": {"type": "number", "minimum": 0},
        "component_sd": {"type": "number", "minimum": 0},
    },
}

_TOL_PROPS = {
    name: ({"type": "integer", "minimum": 1} if isinstance(val, int) else {"type": "number", "minimum": 0})
    for name, val in asdict(DEFAULT_TOLERANCES).items()
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["system"],
    "properties": {
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["A", "B", "Q", "R", "gamma", "K", "x0"],
            "properties": {
                "A": _MATRIX, "B": _MATRIX, "Q": _MATRIX, "R": _MATRIX, "K": _MATRIX,
                "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "x0": _VECTOR,
            },
        },
        "noise": _NOISE,
        "noise_families": {"type": "array", "minItems": 1, "items": _NOISE},
        "horizons": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "mc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
                "path": {"enum": ["fast", "slow"]},
            },
        },
        "series": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta_policy": {"oneOf": [{"const": "min-weight"}, {"type": "number", "exclusiveMinimum": 0}]},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_terms": {"type": "integer", "minimum": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {"type": "integer", "minimum": 0},
                "quantile_lo": {"type": "number", "minimum": 0, "maximum": 1},
                "quantile_hi": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "decay": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"reference_horizon": {"type": "integer", "minimum": 1}},
        },
        "tolerances": {"type": "object", "additionalProperties": False, "properties": _TOL_PROPS},
    },
}

DEFAULTS = {
    "noise": {"kind": "gaussian"},  # covariance filled with the identity of matching size
    "horizons": [10],
    "mc": {"samples": 1_000_000, "seed": 0, "path": "fast"},
    "series": {"beta_policy": "min-weight", "tol": SERIES_TOL, "max_terms": SERIES_MAX_TERMS},
    "grid": {"points": 200, "quantile_lo": 0.001, "quantile_hi": 0.999},
}

_EXAMPLE1_SYSTEM = {
    "A": [[1.01, 0.01, 0.0], [0.01, 1.01, 0.01], [0.0, 0.01, 1.01]],
    "B": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    "Q": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    "R": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    "gamma": 0.6,
    "K": [[-0.015 * 56.19, -0.015 * 0.7692, -0.015 * 0.0027],
          [-0.015 * 0.7692, -0.015 * 56.20, -0.015 * 0.7692],
          [-0.015 * 0.0027, -0.015 * 0.7692, -0.015 * 56.19]],
    "x0": [1.0, 1.0, 1.0],
}

PRESETS = {
    # data center cooling; x0 and noise do not enter the table
    "example1": {
        "system": _EXAMPLE1_SYSTEM,
        "noise": {"kind": "gaussian", "covariance": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]},
        "horizons": [2, 3, 5, 10, 15, 20, 25],
        "decay": {"reference_horizon": 30},
    },
    "example2": {
        "system": {**_EXAMPLE1_SYSTEM, "x0": [3.0, 3.0, 3.0]},
        "noise": {"kind": "gaussian", "covariance": [[1.0, 0.5, 0.3], [0.5, 2.0, 0.4], [0.3, 0.4, 2.0]]},
        "horizons": [20],
        "grid": {"points": 200, "quantile_lo": 0.001, "quantile_hi": 0.999},
    },
    # vehicle steering
    "example3": {
        "system": {
            "A": [[1.0, 0.2], [0.0, 1.0]],
            "B": [[0.06], [0.20]],
            "Q": [[10.0, 0.0], [0.0, 10.0]],
            "R": [[1.0]],
            "gamma": 0.6,
            "K": [[-2.11, -2.56]],
            "x0": [0.0, 0.0],
        },
        "noise": {"kind": "gaussian", "covariance": [[1.0, 0.0], [0.0, 1.0]]},
        "noise_families": [
            {"kind": "gaussian", "covariance": [[1.0, 0.0], [0.0, 1.0]]},
            {"kind": "uniform", "scale": [1.0, 1.0]},
            {"kind": "laplace", "scale": [1.0, 1.0]},
            {"kind": "logistic", "scale": [1.0, 1.0]},
            {"kind": "triangular", "scale": [1.0, 1.0]},
        ],
        "horizons": [20],
        "grid": {"points": 400, "quantile_lo": 0.001, "quantile_hi": 0.999},
    },
}


def deep_merge(base: dict, overlay: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in overlay.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass(frozen=True)
class RunConfig:
    system: SystemSpec
    noise: NoiseModel
    noise_families: tuple[NoiseModel, ...]
    horizons: tuple[int, ...]
    mc_samples: int
    seed: int
    mc_path: str
    beta: float | None
    series_tol: float
    series_max_terms: int
    grid_points: int
    quantile_lo: float
    quantile_hi: float
    reference_horizon: int
    tolerances: Tolerances
    effective: dict

    def effective_json(self) -> str:
        return json.dumps(self.effective, sort_keys=True, separators=(",", ":"))


def _noise_from(doc: dict, n: int) -> NoiseModel:
    kind = doc["kind"]
    if kind == "gaussian":
        cov = doc.get("covariance")
        if cov is None:
            raise ConfigError("gaussian noise requires 'covariance'")
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (n, n):
            raise ConfigError(f"noise covariance must be {n}x{n}, got {cov.shape}")
        return NoiseModel.gaussian(cov)
    scale = doc.get("scale")
    if scale is not None and len(scale) != n:
        raise ConfigError(f"noise scale must have length {n}, got {len(scale)}")
    return NoiseModel(
        kind,
        scale=scale,
        separation=float(doc.get("separation", 0.0)),
        component_sd=float(doc.get("component_sd", 1.0)),
    )


def _materialize_noise(doc: dict, n: int) -> dict:
    doc = dict(doc)
    if doc["kind"] == "gaussian":
        doc.setdefault("covariance", np.eye(n).tolist())
    elif doc["kind"] == "gaussian_mixture":
        doc.setdefault("separation", 0.0)
        doc.setdefault("component_sd", 1.0)
    else:
        doc.setdefault("scale", [1.0] * n)
    return doc


def _check_matrix(value, name: str) -> np.ndarray:
    rows = {len(r) for r in value}
    if len(rows) != 1:
        raise ConfigError(f"{name} is a ragged array")
    return np.asarray(value, dtype=float)


def load_config(doc: dict) -> RunConfig:
    """Validate a config document and materialize every default into ``effective``."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None

    eff = deep_merge(DEFAULTS, doc)
    sysd = eff["system"]
    mats = {k: _check_matrix(sysd[k], k) for k in ("A", "B", "Q", "R", "K")}
    n = mats["A"].shape[0]
    try:
        spec = SystemSpec(mats["A"], mats["B"], mats["Q"], mats["R"], sysd["gamma"], mats["K"], sysd["x0"])
    except DistLQRError as exc:
        raise ConfigError(f"system: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from None

    eff["noise"] = _materialize_noise(eff["noise"], n)
    if "noise_families" in eff:
        eff["noise_families"] = [_materialize_noise(d, n) for d in eff["noise_families"]]
    else:
        eff["noise_families"] = [eff["noise"]]
    eff.setdefault("decay", {})
    eff["decay"].setdefault("reference_horizon", max(eff["horizons"]))
    tol_over = eff.get("tolerances", {})
    try:
        tol = DEFAULT_TOLERANCES.override(**tol_over)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    eff["tolerances"] = asdict(tol)

    try:
        noise = _noise_from(eff["noise"], n)
        families = tuple(_noise_from(d, n) for d in eff["noise_families"])
    except DistLQRError as exc:
        raise ConfigError(f"noise: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from None

    grid = eff["grid"]
    if not grid["quantile_lo"] < grid["quantile_hi"]:
        raise ConfigError("grid.quantile_lo must be below grid.quantile_hi")
    bp = eff["series"]["beta_policy"]
    return RunConfig(
        system=spec,
        noise=noise,
        noise_families=families,
        horizons=tuple(int(h) for h in eff["horizons"]),
        mc_samples=int(eff["mc"]["samples"]),
        seed=int(eff["mc"]["seed"]),
        mc_path=eff["mc"]["path"],
        beta=None if bp == "min-weight" else float(bp),
        series_tol=float(eff["series"]["tol"]),
        series_max_terms=int(eff["series"]["max_terms"]),
        grid_points=int(grid["points"]),
        quantile_lo=float(grid["quantile_lo"]),
        quantile_hi=float(grid["quantile_hi"]),
        reference_horizon=int(eff["decay"]["reference_horizon"]),
        tolerances=tol,
        effective=eff,
    )


def resolve_config(config_path: str | Path | None = None, preset: str | None = None,
                   overrides: dict | None = None) -> RunConfig:
    """Preset (if any), then the config file, then ``overrides``, merged in that order."""
    doc: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        doc = copy.deepcopy(PRESETS[preset])
    if config_path is not None:
        try:
            with open(config_path) as fh:
                file_doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        if not isinstance(file_doc, dict):
            raise ConfigError("config document must be a JSON object")
        doc = deep_merge(doc, file_doc)
    if overrides:
        doc = deep_merge(doc, overrides)
    if not doc:
        raise ConfigError("no configuration given (use --config and/or --preset)")
    return load_config(doc)
