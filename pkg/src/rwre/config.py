"""Run configuration: JSON schema, defaults, and flag precedence."""
from __future__ import annotations

import json
from dataclasses import dataclass, fields

import jsonschema

from .environment import EnvironmentLaw, law_from_spec
from .errors import ConfigError
from .lattice import JumpSet, as_element

U64_MAX = 2**64 - 1

_INT_VECTOR = {"type": "array", "items": {"type": "integer"}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "jumps": {"type": "array", "items": _INT_VECTOR, "minItems": 1},
        "law": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "atoms"],
                    "properties": {
                        "kind": {"const": "mixture"},
                        "atoms": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["w", "p"],
                                "properties": {
                                    "w": {"type": "number", "minimum": 0},
                                    "p": {"type": "array", "items": {"type": "number", "minimum": 0}},
                                },
                            },
                        },
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "alphas"],
                    "properties": {
                        "kind": {"const": "dirichlet"},
                        "alphas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                    },
                },
            ]
        },
        "steps": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": U64_MAX},
        "min_count": {"type": "integer", "minimum": 1},
        "max_total": {"type": "integer", "minimum": 1},
        "degree": {"type": "integer", "minimum": 1},
        "grid": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "number"},
                    {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2},
                ]
            },
        },
        "moment_path": {"enum": ["canonical", "average"]},
        "fit_degree": {"type": "boolean"},
        "replicas": {"type": "integer", "minimum": 1},
        "max_steps": {"type": ["integer", "null"], "minimum": 0},
        "keep_ordered": {"type": "boolean"},
        "out": {"type": "string"},
    },
}


@dataclass
class RunConfig:
    dim: int = 1
    jumps: list | None = None
    law: dict | None = None
    steps: int = 10_000
    seed: int = 0
    min_count: int = 30
    max_total: int | None = None
    degree: int = 20
    grid: list | None = None
    moment_path: str = "average"
    fit_degree: bool = False
    replicas: int = 2
    max_steps: int | None = None
    keep_ordered: bool = False
    out: str = "."

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        """Validated config; keys set to null mean "use the default"."""
        if isinstance(data, dict):
            data = {k: v for k, v in data.items() if v is not None}
        validate(data)
        cfg = cls(**data)
        cfg.check()
        return cfg

    def updated(self, **overrides) -> RunConfig:
        """Copy with the non-None ``overrides`` applied (command-line flags)."""
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(data)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def check(self) -> None:
        if self.jumps is not None:
            if any(len(j) != self.dim for j in self.jumps):
                raise ConfigError(f"every jump must have {self.dim} coordinates")
            try:
                JumpSet(as_element(j) for j in self.jumps)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.law is not None:
            if self.jumps is None:
                raise ConfigError("a law needs a 'jumps' list")
            self.environment_law()
        if self.grid is not None:
            for pt in self.grid:
                for x in (pt if isinstance(pt, list) else [pt]):
                    if not 0.0 < x <= 1.0:
                        raise ConfigError(f"grid coordinate {x} outside (0, 1]")

    @property
    def jumpset(self) -> JumpSet | None:
        return None if self.jumps is None else JumpSet(as_element(j) for j in self.jumps)

    def environment_law(self) -> EnvironmentLaw:
        if self.law is None:
            raise ConfigError("config has no 'law'")
        try:
            return law_from_spec(self.jumps, self.law)
        except ConfigError:
            raise
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"invalid law: {exc}") from None

    def grid_points(self) -> list[tuple[float, ...]] | None:
        if self.grid is None:
            return None
        return [tuple(pt) if isinstance(pt, list) else (pt,) for pt in self.grid]


def validate(data) -> None:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None


def load_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return RunConfig.from_dict(data)
