"""Experiment configuration."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from nfbackup.simcore import SELECTION_MODES

STRATEGIES = ("piggybackup", "random", "shortest_path", "exact")
TOPOLOGIES = ("fat_tree", "random")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid config: " + "; ".join(problems))


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "fat_tree"
    pods: int = 4
    num_servers: int = 20
    connect_prob: float = 0.2
    num_types: int = 20
    num_chains: int = 50
    chain_len_min: int = 1
    chain_len_max: int = 20
    primary_capacity: int = 8
    backup_capacity: int = 3
    k_limit: int = 5
    rate: float = 1.0
    piggyback_bytes: float = 20.0
    standalone_bytes: float = 60.0
    simulate: bool = False
    epoch_length: float = 1.0
    num_epochs: int = 1000
    selection_mode: str = "bounded_waiting"
    strategies: tuple[str, ...] = ("piggybackup", "random", "shortest_path")
    seeds: tuple[int, ...] = tuple(range(20))

    def problems(self) -> list[str]:
        out = []
        if self.topology not in TOPOLOGIES:
            out.append(f"topology: must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.topology == "fat_tree" and (self.pods < 2 or self.pods % 2):
            out.append(f"pods: must be an even integer >= 2, got {self.pods}")
        if self.topology == "random":
            if self.num_servers < 2:
                out.append("num_servers: must be >= 2")
            if not 0 < self.connect_prob <= 1:
                out.append("connect_prob: must be in (0, 1]")
        for name in ("num_types", "primary_capacity", "k_limit", "num_epochs", "chain_len_min"):
            if getattr(self, name) < 1:
                out.append(f"{name}: must be positive")
        if self.num_chains < 0:
            out.append("num_chains: must be >= 0")
        if self.backup_capacity < 0:
            out.append("backup_capacity: must be >= 0")
        if self.chain_len_max < self.chain_len_min:
            out.append("chain_len_max: must be >= chain_len_min")
        if self.rate <= 0:
            out.append("rate: must be positive")
        if self.epoch_length <= 0:
            out.append("epoch_length: must be positive")
        if not 0 < self.piggyback_bytes <= self.standalone_bytes:
            out.append("piggyback_bytes: need 0 < piggyback_bytes <= standalone_bytes")
        if self.selection_mode not in SELECTION_MODES:
            out.append(f"selection_mode: must be one of {SELECTION_MODES}")
        if not self.strategies:
            out.append("strategies: must not be empty")
        for s in self.strategies:
            if s not in STRATEGIES:
                out.append(f"strategies: unknown strategy {s!r}")
        if not self.seeds:
            out.append("seeds: must not be empty")
        return out

    def validate(self) -> "ExperimentConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["strategies"] = list(self.strategies)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - set(known))
        if unknown:
            raise ConfigError([f"{k}: unknown field" for k in unknown])
        kwargs = {}
        problems = []
        for k, v in doc.items():
            try:
                kwargs[k] = coerce_field(k, v)
            except (TypeError, ValueError) as exc:
                problems.append(f"{k}: {exc}")
        if problems:
            raise ConfigError(problems)
        return cls(**kwargs)


def coerce_field(name: str, value: Any) -> Any:
    default = getattr(ExperimentConfig, name, None)
    if name in ("strategies", "seeds"):
        if isinstance(value, str):
            value = [v for v in value.split(",") if v]
        items = tuple(value)
        return tuple(int(v) for v in items) if name == "seeds" else tuple(str(v) for v in items)
    if isinstance(default, bool):
        if isinstance(value, str):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"expected a boolean, got {value!r}")
            return value.lower() in ("true", "1", "yes")
        return bool(value)
    if isinstance(default, int):
        if isinstance(value, float) and not value.is_integer():
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        return float(value)
    return str(value)


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def derive_seed(master: int, label: str) -> int:
    """Independent 63-bit sub-seed for one pipeline stage."""
    h = hashlib.blake2b(f"{master}:{label}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "big") >> 1
