"""Experiment configuration: TOML in, validated dataclasses out."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field as dc_field, asdict
from typing import List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration; the message carries the offending field path."""


@dataclass
class FieldConfig:
    kind: str = "rpw"
    k: float = 1.0
    m: int = 1024
    sigma: float = 1.0
    grid_n: int = 128
    period: float = 0.0      # 0 = auto (10 sigma or domain-derived)


@dataclass
class LatticeConfig:
    family: str = "hexagonal"
    rescale_hex_pair: bool = False


@dataclass
class DomainConfig:
    shape: str = "disc"
    s: float = 10.0


@dataclass
class OracleConfig:
    r0: int = 32
    r_cap: int = 256


@dataclass
class ExperimentConfig:
    field: FieldConfig = dc_field(default_factory=FieldConfig)
    lattice: LatticeConfig = dc_field(default_factory=LatticeConfig)
    domain: DomainConfig = dc_field(default_factory=DomainConfig)
    oracle: OracleConfig = dc_field(default_factory=OracleConfig)
    level: float = 0.0
    meshes: List[float] = dc_field(default_factory=lambda: [0.4, 0.2, 0.1])
    trials: int = 100
    seed: int = 0
    workers: int = 0
    out: str = "runs"
    event: str = "double"            # scaling subcommand
    max_interior_loops: int = 1
    conic_constant: float = 1.0

    def validate(self):
        if self.field.kind not in ("rpw", "gaussian"):
            raise ConfigError("field.kind must be 'rpw' or 'gaussian'")
        if self.field.kind == "rpw" and self.field.k <= 0:
            raise ConfigError("field.k must be positive")
        if self.field.kind == "rpw" and self.field.m < 16:
            raise ConfigError("field.m must be at least 16")
        if self.field.kind == "gaussian" and self.field.sigma <= 0:
            raise ConfigError("field.sigma must be positive")
        if self.lattice.family not in ("hexagonal", "square", "triangular"):
            raise ConfigError("lattice.family must be hexagonal, square or triangular")
        if self.domain.shape not in ("disc", "square"):
            raise ConfigError("domain.shape must be 'disc' or 'square'")
        if self.domain.s <= 0:
            raise ConfigError("domain.s must be positive")
        if not self.meshes or any(e <= 0 for e in self.meshes):
            raise ConfigError("meshes must be a nonempty list of positive numbers")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.oracle.r0 < 32:
            raise ConfigError("oracle.r0 must be at least 32")
        if self.oracle.r_cap < self.oracle.r0:
            raise ConfigError("oracle.r_cap must be >= oracle.r0")
        if self.event not in ("double", "four", "tubular", "small", "invisible"):
            raise ConfigError("event must be one of double|four|tubular|small|invisible")
        return self

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _fill(dc_cls, data, path):
    kwargs = {}
    fields = {f.name for f in dc_cls.__dataclass_fields__.values()}
    for key, val in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key {path}{key}")
        kwargs[key] = val
    return dc_cls(**kwargs)


def load_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    cfg = ExperimentConfig()
    for section, cls in (("field", FieldConfig), ("lattice", LatticeConfig),
                         ("domain", DomainConfig), ("oracle", OracleConfig)):
        if section in data:
            setattr(cfg, section, _fill(cls, data.pop(section), f"{section}."))
    for key, val in data.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown key {key}")
        setattr(cfg, key, val)
    for key, val in (overrides or {}).items():
        setattr(cfg, key, val)
    return cfg.validate()
