"""Experiment configuration: JSON schema, parsing into model types, defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError, ModelError
from .model import (
    CompoundPoissonSpec,
    Deterministic,
    Erlang,
    ExtendedRate,
    Exponential,
    HyperExponential,
    QueueModel,
    RiskModel,
)

_NUMBER_OR_INF = {"oneOf": [{"type": "number", "minimum": 0}, {"enum": ["inf"]}]}
_POS = {"type": "number", "exclusiveMinimum": 0}

_JUMPS = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"law": {"const": "exponential"}, "rate": _POS},
            "required": ["law", "rate"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"law": {"const": "erlang"}, "shape": {"type": "integer", "minimum": 1}, "rate": _POS},
            "required": ["law", "shape", "rate"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "law": {"const": "hyperexponential"},
                "weights": {"type": "array", "items": _POS, "minItems": 1},
                "rates": {"type": "array", "items": _POS, "minItems": 1},
            },
            "required": ["law", "weights", "rates"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"law": {"const": "deterministic"}, "size": _POS},
            "required": ["law", "size"],
            "additionalProperties": False,
        },
    ]
}

_COMPANY = {
    "type": "object",
    "properties": {"drift": _POS, "rate": {"type": "number", "minimum": 0}, "jumps": _JUMPS},
    "required": ["drift", "rate", "jumps"],
    "additionalProperties": False,
}

_NUM_LIST = {"type": "array", "items": {"type": "number"}}

SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "company1": _COMPANY,
        "company2": _COMPANY,
        "risk": {
            "type": "object",
            "properties": {"r1": _NUMBER_OR_INF, "r2": _NUMBER_OR_INF},
            "required": ["r1", "r2"],
            "additionalProperties": False,
        },
        "queue": {
            "type": "object",
            "properties": {"rho1": {"type": "number", "minimum": 0}, "rho2": {"type": "number", "minimum": 0}},
            "required": ["rho1", "rho2"],
            "additionalProperties": False,
        },
        "simulation": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "T": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "burn_in_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "epsilon_x": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "x_max": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "queue_total_time": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "queue_replicas": {"type": "integer", "minimum": 2},
                "monotone_replicas": {"type": "integer", "minimum": 1},
                "rescale_replicas": {"type": "integer", "minimum": 1},
                "rescale_factor": _POS,
            },
            "additionalProperties": False,
        },
        "grids": {
            "type": "object",
            "properties": {
                "s": _NUM_LIST,
                "u": _NUM_LIST,
                "theta": _NUM_LIST,
                "r": _NUM_LIST,
                "law_inv_r2": {"type": "array", "items": _NUMBER_OR_INF},
                "convolution_u": _NUM_LIST,
            },
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "ks_c_alpha": _POS,
                "ks_slack": {"type": "number", "minimum": 0},
                "grid_slack": {"type": "number", "minimum": 0},
                "sigmas": _POS,
                "identity": _POS,
                "limit": _POS,
                "limit_scaled": _POS,
                "convolution": _POS,
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": "string"},
    },
    "required": ["company1", "company2", "risk"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Budget:
    N: int = 20000
    T: float | None = None
    burn_in_fraction: float = 0.2
    epsilon_x: float | None = None
    x_max: float | None = None
    queue_total_time: float | None = None
    queue_replicas: int = 10
    monotone_replicas: int = 100
    rescale_replicas: int = 2000
    rescale_factor: float = 2.0


@dataclass(frozen=True)
class Grids:
    s: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    u: tuple = (0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0)
    theta: tuple = (0.1, 10.0)
    r: tuple = (0.1, 1.0, 10.0)
    law_inv_r2: tuple = (0.0, 0.25, 1.0, "inf")
    convolution_u: tuple = (0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class Tolerances:
    ks_c_alpha: float = 1.628
    ks_slack: float = 0.005
    grid_slack: float = 0.01
    sigmas: float = 3.0
    identity: float = 1e-6
    limit: float = 1e-3
    limit_scaled: float = 1e-2
    convolution: float = 5e-4


@dataclass(frozen=True)
class ExperimentConfig:
    risk: RiskModel
    queue: QueueModel | None
    budget: Budget = field(default_factory=Budget)
    grids: Grids = field(default_factory=Grids)
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 7
    output_dir: str = "out"
    name: str = ""
    raw: dict = field(default_factory=dict, compare=False)

    def resolved(self) -> dict:
        """Fully resolved configuration, suitable for reproducing a run."""
        out = dict(self.raw)
        out["seed"] = self.seed
        out["simulation"] = {**vars(self.budget)}
        out["grids"] = {k: list(v) for k, v in vars(self.grids).items()}
        out["tolerances"] = {**vars(self.tolerances)}
        out["output_dir"] = self.output_dir
        return out


def _jumps(d: dict):
    law = d["law"]
    if law == "exponential":
        return Exponential(float(d["rate"]))
    if law == "erlang":
        return Erlang(int(d["shape"]), float(d["rate"]))
    if law == "hyperexponential":
        return HyperExponential(tuple(d["weights"]), tuple(d["rates"]))
    return Deterministic(float(d["size"]))


def _company(d: dict) -> CompoundPoissonSpec:
    return CompoundPoissonSpec(float(d["drift"]), float(d["rate"]), _jumps(d["jumps"]))


def parse_config(data: dict) -> ExperimentConfig:
    """Validate against the schema and build model objects.

    Raises:
        ConfigError: schema violation or invalid model parameters.
    """
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    try:
        s1, s2 = _company(data["company1"]), _company(data["company2"])
        risk = RiskModel(s1, s2, ExtendedRate.of(data["risk"]["r1"]), ExtendedRate.of(data["risk"]["r2"]))
        q = data.get("queue")
        queue = QueueModel(s1, s2, float(q["rho1"]), float(q["rho2"])) if q else None
    except ModelError as exc:
        raise ConfigError(str(exc)) from None
    grids = Grids(**{k: tuple(v) for k, v in data.get("grids", {}).items()})
    return ExperimentConfig(
        risk=risk,
        queue=queue,
        budget=Budget(**data.get("simulation", {})),
        grids=grids,
        tolerances=Tolerances(**data.get("tolerances", {})),
        seed=int(data.get("seed", 7)),
        output_dir=data.get("output_dir", "out"),
        name=data.get("name", ""),
        raw=data,
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


def builtin_config(name: str) -> ExperimentConfig:
    """Bundled configuration ``cfg_a`` or ``cfg_b``."""
    text = resources.files("decomplab.configs").joinpath(f"{name}.json").read_text()
    return parse_config(json.loads(text))
