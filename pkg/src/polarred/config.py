"""Run configuration: strict JSON loading and orbit-string parsing."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .catalog import CATALOG
from .classical import (
    CoadjointOrbitSpec,
    orbit_generic,
    orbit_kks,
    orbit_su2_equator,
    orbit_zero,
)
from .polar import CONJUGATION, PolarActionModel

SCHEMES = ("rk4", "strang_split")
REPS = ("trivial", "adjoint")
ASSEMBLY = ("direct", "conjugated")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: str = "su2-conj"
    orbit: str = "auto"
    rep: str = "trivial"
    t_end: float = 1.0
    dt: float = 1e-4
    scheme: str = "rk4"
    grid_n: int = 2000
    k: int = 5
    assembly: str = "direct"
    q_samples: int = 50
    seed: int = 0
    q0: list | None = None
    p0: list | None = None
    oracle: bool = False
    output: str | None = None
    csv: str | None = None
    dump_operator: str | None = None

    def validate(self) -> "RunConfig":
        if self.model not in CATALOG:
            raise ConfigError(f"unknown model {self.model!r}; choose from {sorted(CATALOG)}")
        if self.rep not in REPS:
            raise ConfigError(f"rep must be one of {REPS}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.assembly not in ASSEMBLY:
            raise ConfigError(f"assembly must be one of {ASSEMBLY}")
        for name in ("t_end", "dt"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        for name in ("grid_n", "k", "q_samples"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.grid_n < 2:
            raise ConfigError("grid_n must be at least 2")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        return self

    def as_dict(self) -> dict:
        return asdict(self)


_KEYS = {f.name for f in fields(RunConfig)}


def from_mapping(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**data).validate()


def load(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_mapping(data)


def merge(base: RunConfig, overrides: dict) -> RunConfig:
    """Flags win over file values; ``None`` means 'not given'."""
    given = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(given) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return replace(base, **given).validate()


def _params(text: str) -> dict:
    out = {}
    for part in filter(None, text.split(",")):
        key, sep, val = part.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value in orbit spec, got {part!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"orbit parameter {key!r} is not a number") from None
    return out


def parse_orbit(text: str, model: PolarActionModel, seed: int = 0) -> CoadjointOrbitSpec:
    """Orbit strings: zero, auto, su2:r=R, kks:nu=NU, random:scale=S, generic:x1,x2,..."""
    head, _, rest = text.partition(":")
    try:
        if head == "zero":
            return orbit_zero(model)
        if head == "auto":
            if model.kind == CONJUGATION:
                if model.symmetry_model.name == "su(2)":
                    return orbit_su2_equator(model, 1.0)
                return orbit_kks(model, 1.0)
            return parse_orbit("random:scale=0.5", model, seed)
        if head == "su2":
            return orbit_su2_equator(model, _params(rest).get("r", 1.0))
        if head == "kks":
            return orbit_kks(model, _params(rest).get("nu", 1.0))
        if head == "random":
            scale = _params(rest).get("scale", 0.5)
            split = model.isotropy_split
            base = np.zeros(model.symmetry_model.dimension)
            if split.dim_kperp:
                x = np.random.default_rng(seed).standard_normal(split.dim_kperp)
                base = scale * (x / np.linalg.norm(x)) @ split.kperp_basis
            return CoadjointOrbitSpec("random", base, {"scale": scale, "seed": seed})
        if head == "generic":
            vals = [float(v) for v in rest.split(",") if v.strip()]
            return orbit_generic(model, np.array(vals))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown orbit spec {text!r}")
