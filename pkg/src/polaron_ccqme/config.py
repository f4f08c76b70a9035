"""JSON run configuration: schema, presets and resolution into model objects.

Configuration is fail-closed: unknown keys anywhere are rejected.

Units
-----
Energies, ``beta`` and times are in the units of the config (the shipped
presets use ``epsilon = omega_c = 1``). Scan and time entries may instead be
given relative to the bare system gap ``dE21`` (the splitting of ``H_S``) by
setting ``"units": "gap"``; then ``beta`` values mean ``beta * dE21`` and
times mean ``t * dE21``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import jsonschema
import numpy as np

from .errors import ConfigError
from .model import (
    BathSpec,
    SpinBosonSpec,
    SuperOhmic,
    SystemSpec,
    Tabulated,
    bare_gap,
    check_density_matrix,
    default_initial_state,
    spin_boson_to_general,
)

METHODS = ("pt-ccqme", "pt-redfield", "redfield", "ccqme")

_number = {"type": "number"}
_complex = {"oneOf": [_number, {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}]}
_range = {
    "oneOf": [
        {"type": "array", "items": _number, "minItems": 1},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "stop", "num"],
            "properties": {"start": _number, "stop": _number, "num": {"type": "integer", "minimum": 1}},
        },
    ]
}
_units = {"enum": ["absolute", "gap"]}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["bath"],
    "oneOf": [{"required": ["system"]}, {"required": ["spin_boson"]}],
    "properties": {
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim", "onsite", "hopping", "coupling_coeff"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "onsite": {"type": "array", "items": _number},
                "hopping": {"type": "array", "items": {"type": "array", "items": _complex}},
                "coupling_coeff": {"type": "array", "items": _number},
            },
        },
        "spin_boson": {
            "type": "object",
            "additionalProperties": False,
            "required": ["epsilon", "h"],
            "properties": {"epsilon": _number, "h": _number},
        },
        "bath": {
            "type": "object",
            "additionalProperties": False,
            "required": ["spectral_density"],
            "properties": {
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "units": _units,
                "spectral_density": {
                    "oneOf": [
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["type", "gamma"],
                            "properties": {
                                "type": {"const": "super_ohmic"},
                                "gamma": {"type": "number", "minimum": 0},
                                "omega_c": {"type": "number", "exclusiveMinimum": 0},
                            },
                        },
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["type", "table"],
                            "properties": {
                                "type": {"const": "tabulated"},
                                "table": {
                                    "type": "array",
                                    "minItems": 2,
                                    "items": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                                },
                                "exponent": _number,
                            },
                        },
                    ]
                },
            },
        },
        "initial_state": {"type": "array", "items": {"type": "array", "items": _complex}},
        "method": {"enum": list(METHODS)},
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": _range,
                "beta": _range,
                "units": _units,
                "methods": {"type": "array", "items": {"enum": list(METHODS)}, "minItems": 1, "uniqueItems": True},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_max", "steps"],
            "properties": {
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "steps": {"type": "integer", "minimum": 1},
                "units": _units,
            },
        },
        "correlation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tau": _range, "lam": _range},
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "modes": {"type": "integer", "minimum": 1},
                "fock_cutoff": {"type": "integer", "minimum": 2},
                "omega_max": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
    },
}

DEFAULT_TOLERANCES = {
    "detailed_balance": 1e-6,
    "imaginary_time": 1e-6,
    "tensor_agreement": 1e-12,
    "closed_form": 1e-8,
    "zero_mode": 1e-8,
    "trace_leakage": 1e-10,
    "hermiticity": 1e-10,
    "weak_limit": 1e-3,
    "order_exponent": 3.0,
    "mfg_imaginary_time": 1e-5,
    "rate_time_domain": 1e-6,
    "rate_derivative": 1e-6,
    "discrete_correlation": 1e-4,
    "ed_dynamics": 0.05,
}

_BASE = {
    "spin_boson": {"epsilon": 1.0, "h": 1.0},
    "bath": {"beta": 1.0, "spectral_density": {"type": "super_ohmic", "gamma": 0.1, "omega_c": 1.0}},
    "time": {"t_max": 28.0, "steps": 1400, "units": "gap"},
}


def _preset(**extra):
    cfg = copy.deepcopy(_BASE)
    cfg.update(extra)
    return cfg


PRESETS = {
    # positivity map: gamma and beta in config units (epsilon = omega_c = 1)
    "fig1": _preset(
        scan={
            "gamma": {"start": 0.05, "stop": 1.0, "num": 20},
            "beta": {"start": 1.0, "stop": 7.0, "num": 13},
            "units": "absolute",
            "methods": list(METHODS),
        }
    ),
    "fig2": _preset(
        scan={"gamma": [0.05, 0.3, 1.0], "beta": [1.4, 2.8, 5.6], "units": "gap", "methods": list(METHODS)}
    ),
    "fig3": _preset(
        scan={
            "gamma": {"start": 0.05, "stop": 1.0, "num": 20},
            "beta": [1.4, 2.8, 5.6],
            "units": "gap",
            "methods": ["pt-ccqme", "pt-redfield", "redfield"],
        }
    ),
}


def default_config() -> dict:
    """Single-point spin-boson configuration used when nothing is given."""
    return copy.deepcopy(_BASE)


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None


def load_config(path=None, preset: str | None = None) -> dict:
    """Load, merge and validate a configuration.

    A preset provides the starting document; keys of the file override it
    at the top level.
    """
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg = copy.deepcopy(PRESETS[preset])
    else:
        cfg = default_config() if path is None else {}
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config root must be an object")
        if preset is not None and ("system" in user or "spin_boson" in user):
            cfg.pop("system", None)
            cfg.pop("spin_boson", None)
        cfg.update(user)
    validate_config(cfg)
    return cfg


def expand_range(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["num"])
    return np.asarray(spec, dtype=float)


def _to_complex(x):
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def _matrix(rows):
    return np.array([[_to_complex(x) for x in row] for row in rows])


def build_density(spec: dict):
    sd = spec["spectral_density"]
    if sd["type"] == "super_ohmic":
        return SuperOhmic(float(sd["gamma"]), float(sd.get("omega_c", 1.0)))
    table = np.asarray(sd["table"], dtype=float)
    return Tabulated(table[:, 0], table[:, 1], float(sd.get("exponent", 3.0)))


def build_system(cfg: dict) -> SystemSpec:
    """System specification (bath-independent)."""
    if "spin_boson" in cfg:
        sb = cfg["spin_boson"]
        return spin_boson_to_general(SpinBosonSpec(float(sb["epsilon"]), float(sb["h"]), None))
    s = cfg["system"]
    n = s["dim"]
    hop = _matrix(s["hopping"])
    if len(s["onsite"]) != n or len(s["coupling_coeff"]) != n or hop.shape != (n, n):
        raise ConfigError(f"system arrays do not match dim={n}")
    if not np.any(hop.imag):
        hop = hop.real
    return SystemSpec(np.asarray(s["onsite"], float), hop, np.asarray(s["coupling_coeff"], float))


@dataclass(frozen=True)
class Point:
    """One resolved parameter point of a run."""

    index: int
    gamma: float | None
    beta: float
    system: SystemSpec
    bath: BathSpec


def gap_of(system: SystemSpec) -> float:
    return bare_gap(system)


def _density_with_gamma(cfg, gamma):
    sd = dict(cfg["bath"]["spectral_density"])
    if gamma is not None:
        if sd["type"] != "super_ohmic":
            raise ConfigError("a gamma scan needs a super_ohmic spectral density")
        sd["gamma"] = float(gamma)
    return build_density({"spectral_density": sd})


def _beta_value(value, units, system):
    return float(value) / gap_of(system) if units == "gap" else float(value)


def resolve_point(cfg: dict) -> Point:
    """The single point described by ``system``/``spin_boson`` and ``bath``."""
    system = build_system(cfg)
    if "beta" not in cfg["bath"]:
        raise ConfigError("bath.beta is required for single-point commands")
    beta = _beta_value(cfg["bath"]["beta"], cfg["bath"].get("units", "absolute"), system)
    density = _density_with_gamma(cfg, None)
    return Point(0, getattr(density, "gamma", None), beta, system, BathSpec(beta, density))


def resolve_grid(cfg: dict) -> list[Point]:
    """Points of the ``scan`` block in row-major (gamma outer, beta inner) order.

    Missing scan axes fall back to the single-point values.
    """
    system = build_system(cfg)
    scan = cfg.get("scan", {})
    units = scan.get("units", "absolute")
    if "gamma" in scan:
        gammas = [float(g) for g in expand_range(scan["gamma"])]
    else:
        gammas = [None]
    if "beta" in scan:
        betas = [_beta_value(b, units, system) for b in expand_range(scan["beta"])]
    elif "beta" in cfg["bath"]:
        betas = [_beta_value(cfg["bath"]["beta"], cfg["bath"].get("units", "absolute"), system)]
    else:
        raise ConfigError("no beta given: set bath.beta or scan.beta")
    if not gammas or not betas:
        raise ConfigError("scan grids must be non-empty")
    points = []
    for g in gammas:
        density = _density_with_gamma(cfg, g)
        for b in betas:
            points.append(Point(len(points), getattr(density, "gamma", None), b, system, BathSpec(b, density)))
    return points


def scan_methods(cfg: dict, default=METHODS) -> list[str]:
    return list(cfg.get("scan", {}).get("methods", default))


def time_grid(cfg: dict, system: SystemSpec) -> tuple[float, int]:
    """``(t_max, steps)`` in config units."""
    t = cfg.get("time", _BASE["time"])
    t_max = float(t["t_max"])
    if t.get("units", "absolute") == "gap":
        t_max /= gap_of(system)
    return t_max, int(t["steps"])


def initial_state(cfg: dict, dim: int):
    """Configured initial state, default ``|0><0|`` (``(sigma_z + I)/2`` for a qubit)."""
    if "initial_state" not in cfg:
        return default_initial_state(dim)
    rho = _matrix(cfg["initial_state"])
    if rho.shape != (dim, dim):
        raise ConfigError(f"initial_state must be {dim}x{dim}")
    if check_density_matrix(rho) < -1e-12:
        raise ConfigError("initial_state has a negative eigenvalue")
    return rho


def tolerances(cfg: dict) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    extra = cfg.get("tolerances", {})
    unknown = set(extra) - set(tol)
    if unknown:
        raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
    tol.update(extra)
    return tol
