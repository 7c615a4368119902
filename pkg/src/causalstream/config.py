"""Engine configuration: every free parameter in one validated record.

Config files are JSON objects using exactly the EngineConfig field names;
unknown keys are a hard error so typos cannot silently fall back to
defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .continual import DiscoveryParams
from .errors import ConfigError


@dataclass(frozen=True)
class EngineConfig:
    tau_max: int = 3
    alpha_pc: float = 0.05
    alpha_link: float = 0.01
    theta_s: float = 0.1
    window_capacity: int = 500
    max_conds: int = 3
    max_px: int = 1
    intervention_k: int = 1
    seed: int = 0

    def validate(self) -> "EngineConfig":
        if self.tau_max < 1:
            raise ConfigError(f"tau_max must be >= 1, got {self.tau_max}")
        if not 0.0 < self.alpha_pc < 1.0:
            raise ConfigError(f"alpha_pc must lie in (0, 1), got {self.alpha_pc}")
        if not 0.0 < self.alpha_link < 1.0:
            raise ConfigError(f"alpha_link must lie in (0, 1), got {self.alpha_link}")
        if not 0.0 <= self.theta_s <= 1.0:
            raise ConfigError(f"theta_s must lie in [0, 1], got {self.theta_s}")
        if self.max_conds < 0:
            raise ConfigError(f"max_conds must be >= 0, got {self.max_conds}")
        if self.max_px < 0:
            raise ConfigError(f"max_px must be >= 0, got {self.max_px}")
        if self.intervention_k < 1:
            raise ConfigError(f"intervention_k must be >= 1, got {self.intervention_k}")
        if self.window_capacity <= self.tau_max + self.max_conds + 4:
            raise ConfigError(
                f"window_capacity {self.window_capacity} must exceed "
                f"tau_max + max_conds + 4 = {self.tau_max + self.max_conds + 4}"
            )
        return self

    def discovery_params(self) -> DiscoveryParams:
        return DiscoveryParams(
            tau_max=self.tau_max,
            alpha_pc=self.alpha_pc,
            alpha_link=self.alpha_link,
            theta_s=self.theta_s,
            max_conds=self.max_conds,
            max_px=self.max_px,
        )


_FIELDS = {f.name: f.type for f in dataclasses.fields(EngineConfig)}
_INT_FIELDS = {"tau_max", "window_capacity", "max_conds", "max_px", "intervention_k", "seed"}


def config_from_obj(obj: dict) -> EngineConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = sorted(set(obj) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, value in obj.items():
        if key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"config key {key} must be an integer, got {value!r}")
            kwargs[key] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"config key {key} must be a number, got {value!r}")
            kwargs[key] = float(value)
    return EngineConfig(**kwargs).validate()


def load_config(path: str | Path) -> EngineConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_obj(obj)
