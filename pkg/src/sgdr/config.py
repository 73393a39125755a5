"""Training configuration and its flat ``key = value`` text format.

Keys are dotted (``schedule.t0``, ``optimizer.momentum``). Values are
numbers, booleans (``true``/``false``), bare strings, or comma-separated
lists. ``#`` starts a comment. Only ``schedule.kind`` and ``total_epochs``
are required; everything else has a default.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .data import Dataset, load_csv, make_blobs, make_spirals
from .schedule import Schedule, make_schedule

__all__ = [
    "ConfigError",
    "ScheduleConfig",
    "OptimizerConfig",
    "ModelConfig",
    "DataConfig",
    "TrainConfig",
    "parse_config",
    "parse_config_text",
    "format_config",
    "config_to_dict",
    "derive_seed",
    "REQUIRED_KEYS",
]

REQUIRED_KEYS = ("schedule.kind", "total_epochs")


class ConfigError(ValueError):
    pass


def derive_seed(master_seed: int, tag: int) -> int:
    """Independent 63-bit seed for stream ``tag`` of ``master_seed``."""
    state = np.random.SeedSequence([int(master_seed), int(tag)]).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))


@dataclass
class ScheduleConfig:
    kind: str = "cosine"
    eta_max: float = 0.05
    eta_min: float = 0.0
    t0: float = 10.0
    t_mult: float = 2.0
    restart_decay: float = 1.0
    eta0: float = 0.1
    drop_factor: float = 0.2
    milestones: Tuple[int, ...] = (60, 120, 160)
    value: float = 0.1

    def build(self) -> Schedule:
        if self.kind == "const":
            return make_schedule("const", value=self.value)
        params = dataclasses.asdict(self)
        return make_schedule(params.pop("kind"), **params)


@dataclass
class OptimizerConfig:
    momentum: float = 0.9
    weight_decay: float = 5e-4
    dampening: float = 0.0


@dataclass
class ModelConfig:
    hidden: Tuple[int, ...] = (32, 32)
    activation: str = "tanh"


@dataclass
class DataConfig:
    kind: str = "spirals"
    path: str = ""
    num_arms: int = 2
    per_arm: int = 500
    noise: float = 0.1
    turns: float = 1.0
    scale: float = 2.0
    num_classes: int = 3
    per_class: int = 100
    dim: int = 2
    spread: float = 1.0
    # -1 means "derive from master_seed".
    seed: int = -1
    test_fraction: float = 0.2

    def load(self, master_seed: int) -> Dataset:
        seed = derive_seed(master_seed, 3) if self.seed < 0 else self.seed
        if self.kind == "spirals":
            return make_spirals(self.num_arms, self.per_arm, self.noise, seed, self.turns, self.scale)
        if self.kind == "blobs":
            return make_blobs(self.num_classes, self.per_class, self.dim, self.spread, seed)
        if self.kind == "csv":
            if not self.path:
                raise ConfigError("data.kind = csv requires data.path")
            return load_csv(self.path)
        raise ConfigError(f"unknown data.kind {self.kind!r}; expected spirals, blobs or csv")


@dataclass
class TrainConfig:
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    data: DataConfig = field(default_factory=DataConfig)
    total_epochs: int = 1
    batch_size: int = 128
    snapshot_policy: str = "at_restarts"
    reset_velocity_on_restart: bool = False
    master_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.total_epochs < 1:
            raise ConfigError(f"total_epochs must be >= 1, got {self.total_epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.schedule.kind not in ("cosine", "step", "const"):
            raise ConfigError(f"unknown schedule.kind {self.schedule.kind!r}; expected cosine, step or const")
        snapshot_keep(self.snapshot_policy)
        if self.model.activation not in ("tanh", "relu"):
            raise ConfigError(f"model.activation must be tanh or relu, got {self.model.activation!r}")
        try:
            self.schedule.build()
        except ValueError as exc:
            raise ConfigError(f"invalid schedule: {exc}") from None


def snapshot_keep(policy: str) -> Optional[int]:
    """Number of snapshots to retain: ``None`` for all, 0 for none."""
    if policy == "at_restarts":
        return None
    if policy == "none":
        return 0
    if policy.startswith("last_m:"):
        try:
            m = int(policy.split(":", 1)[1])
        except ValueError:
            m = 0
        if m >= 1:
            return m
    raise ConfigError(f"snapshot_policy must be at_restarts, none or last_m:<M>, got {policy!r}")


_SECTIONS = {
    "schedule": ScheduleConfig,
    "optimizer": OptimizerConfig,
    "model": ModelConfig,
    "data": DataConfig,
}
_TOP_LEVEL = ("total_epochs", "batch_size", "snapshot_policy", "reset_velocity_on_restart", "master_seed")


def _key_types() -> Dict[str, Any]:
    default = TrainConfig()
    types = {name: type(getattr(default, name)) for name in _TOP_LEVEL}
    for section, cls in _SECTIONS.items():
        inst = cls()
        for f in fields(cls):
            types[f"{section}.{f.name}"] = type(getattr(inst, f.name))
    return types


KEY_TYPES = _key_types()


def _coerce(raw: str, typ, key: str, lineno: int):
    where = f"line {lineno}: {key}"
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if typ is int:
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if typ is float:
            return float(raw)
        if typ is tuple:
            return tuple(int(v) for v in raw.split(",") if v.strip())
        return raw
    except ValueError:
        name = {bool: "boolean", int: "integer", float: "number", tuple: "comma-separated integers"}[typ]
        raise ConfigError(f"{where}: expected {name}, got {raw!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> TrainConfig:
    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KEY_TYPES:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}: line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _coerce(raw, KEY_TYPES[key], key, lineno)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")
    sections = {name: {} for name in _SECTIONS}
    top = {}
    for key, value in values.items():
        if "." in key:
            section, name = key.split(".", 1)
            sections[section][name] = value
        else:
            top[key] = value
    try:
        return TrainConfig(**{name: cls(**sections[name]) for name, cls in _SECTIONS.items()}, **top)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def parse_config(path) -> TrainConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def config_to_dict(config: TrainConfig) -> Dict[str, Any]:
    """Flat dotted-key mapping of every setting."""
    out = {name: getattr(config, name) for name in _TOP_LEVEL}
    for section in _SECTIONS:
        for key, value in dataclasses.asdict(getattr(config, section)).items():
            out[f"{section}.{key}"] = value
    return out


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(config: TrainConfig) -> str:
    """Emit every setting in the text format accepted by :func:`parse_config_text`."""
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in config_to_dict(config).items())
