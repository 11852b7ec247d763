"""Run and world configuration: schema, validation, canonical YAML round-trip.

The run-config file format mirrors the experiment preset layout shipped in
``configs/``: a flat document with an ``env_parameters`` block, training
hyperparameters, and an optional ``extensions`` block for knobs that are
specific to this implementation (seed, agent count, world overrides).
Serialization is canonical: loading a file and serializing it again yields
byte-identical output for files authored in canonical form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

INTERVENTION_TYPES = ("none", "auto", "llm")
SHOT_MODES = ("few", "zero")


@dataclass(frozen=True)
class WorldConfig:
    """Geometry, fire dynamics and kinematics of one simulated island."""

    env_half_extent: float = 750.0
    island_half_extent: float = 600.0
    village_center: tuple[float, float] = (300.0, 300.0)
    village_radius: float = 150.0
    episode_length: int = 3000
    n_agents: int = 3
    tree_count: int = 1000
    agent_speed: float = 5.0
    max_turn_rate: float = 0.1
    burn_duration: int = 400
    wet_immunity: int = 600
    spread_base_prob: float = 0.002
    spread_radius: float = 60.0
    wind: tuple[float, float] = (1.0, 0.0)
    wind_gain: float = 0.5
    humidity: float = 0.15
    drop_radius: float = 40.0
    ignition_radius: float = 60.0
    agent_spawn_radius: float = 300.0
    seed: int = 0

    def validate(self) -> "WorldConfig":
        if not (self.env_half_extent > self.island_half_extent > 0):
            raise ConfigError(
                "env_half_extent must exceed island_half_extent and both must be positive"
            )
        vx, vy = self.village_center
        if max(abs(vx), abs(vy)) + self.village_radius > self.island_half_extent:
            raise ConfigError("village must lie fully inside the island square")
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        if self.tree_count <= 0:
            raise ConfigError("tree_count must be positive")
        if not 0.0 <= self.humidity <= 1.0:
            raise ConfigError("humidity must be in [0, 1]")
        if not 0.0 <= self.spread_base_prob <= 1.0:
            raise ConfigError("spread_base_prob must be in [0, 1]")
        if self.episode_length < 1:
            raise ConfigError("episode_length must be >= 1")
        for name in ("agent_speed", "max_turn_rate", "spread_radius", "drop_radius"):
            if getattr(self, name) <= 0 or not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be positive and finite")
        return self


# --- run config ------------------------------------------------------------

ENV_PARAMETER_KEYS = (
    "training",
    "human_intervention",
    "task",
    "ext_fire_reward",
    "prep_tree_reward",
    "water_pickup_reward",
    "fire_out_reward",
    "crash_reward",
    "fire_close_to_village_reward",
)

TOP_LEVEL_KEYS = (
    "name",
    "env_parameters",
    "no_graphics",
    "intervention_type",
    "model",
    "shot",
    "lr",
    "lambda_",
    "gamma",
    "sgd_minibatch_size",
    "train_batch_size",
    "num_sgd_iter",
    "clip_param",
    "extensions",
)

# Implementation-specific knobs allowed under `extensions`.
EXTENSION_KEYS = (
    "seed",
    "n_agents",
    "total_steps",
    "tree_count",
    "episode_length",
    "spread_base_prob",
    "spread_radius",
    "wind",
    "wind_gain",
    "humidity",
    "burn_duration",
    "wet_immunity",
    "agent_speed",
    "max_turn_rate",
    "drop_radius",
    "ignition_radius",
    "agent_spawn_radius",
    "village_center",
    "village_radius",
    "cooldown_steps",
    "arrival_radius",
    "value_coef",
    "entropy_coef",
    "optimizer",
    "mask_overridden",
    "checkpoint_every",
    "record_events",
    "template_dir",
    "max_strategy_chars",
    "endpoint",
    "api_key_env",
)


@dataclass
class EnvParameters:
    training: int = 1
    human_intervention: int = 0
    task: int = 0
    ext_fire_reward: float = 5.0
    prep_tree_reward: float = 1.0
    water_pickup_reward: float = 1.0
    fire_out_reward: float = 10.0
    crash_reward: float = -100.0
    fire_close_to_village_reward: float = -50.0


@dataclass
class RunConfig:
    name: str = "RUN"
    env_parameters: EnvParameters = field(default_factory=EnvParameters)
    no_graphics: bool = True
    intervention_type: str = "none"
    model: str | None = None
    shot: str | None = None
    lr: float = 0.005
    lambda_: float = 0.95
    gamma: float = 0.99
    sgd_minibatch_size: int = 900
    train_batch_size: int = 9000
    num_sgd_iter: int = 3
    clip_param: float = 0.2
    extensions: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.intervention_type not in INTERVENTION_TYPES:
            raise ConfigError(
                f"intervention_type must be one of {INTERVENTION_TYPES}, "
                f"got {self.intervention_type!r}"
            )
        if self.intervention_type == "llm" and not self.model:
            raise ConfigError("intervention_type 'llm' requires a `model`")
        if self.shot is not None and self.shot not in SHOT_MODES:
            raise ConfigError(f"shot must be one of {SHOT_MODES}, got {self.shot!r}")
        if self.env_parameters.task != 0:
            raise ConfigError("only the default task (0) is supported")
        if self.train_batch_size % self.sgd_minibatch_size != 0:
            raise ConfigError("sgd_minibatch_size must divide train_batch_size")
        for key in ("lr", "lambda_", "gamma", "clip_param"):
            v = getattr(self, key)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{key} must be a finite number")
        n_agents = self.extensions.get("n_agents", WorldConfig.n_agents)
        if self.train_batch_size % n_agents != 0:
            raise ConfigError("n_agents must divide train_batch_size")
        self.world_config().validate()
        return self

    def world_config(self) -> WorldConfig:
        """WorldConfig with any `extensions` overrides applied."""
        base = WorldConfig()
        overrides = {}
        for f in fields(WorldConfig):
            if f.name in self.extensions:
                v = self.extensions[f.name]
                if isinstance(v, list):
                    v = tuple(v)
                overrides[f.name] = v
        return replace(base, **overrides) if overrides else base

    @property
    def seed(self) -> int:
        return int(self.extensions.get("seed", 0))

    @property
    def total_steps(self) -> int:
        return int(self.extensions.get("total_steps", 300_000))

    @property
    def n_agents(self) -> int:
        return int(self.extensions.get("n_agents", WorldConfig.n_agents))

    @property
    def cooldown_steps(self) -> int:
        return int(self.extensions.get("cooldown_steps", 200))


def _expect(mapping: dict, key: str, kinds: tuple[type, ...], path: str) -> Any:
    v = mapping[key]
    if kinds == (bool,):
        ok = isinstance(v, bool)
    elif float in kinds:
        ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    else:
        ok = isinstance(v, kinds) and not isinstance(v, bool)
    if not ok:
        raise ConfigError(f"{path}.{key}: expected {'/'.join(k.__name__ for k in kinds)}, "
                          f"got {type(v).__name__}")
    return v


def config_from_dict(doc: dict[str, Any]) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    unknown = set(doc) - set(TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")

    ep_doc = doc.get("env_parameters", {})
    if not isinstance(ep_doc, dict):
        raise ConfigError("env_parameters: expected a mapping")
    unknown = set(ep_doc) - set(ENV_PARAMETER_KEYS)
    if unknown:
        raise ConfigError(f"env_parameters: unknown key(s): {sorted(unknown)}")
    ep = EnvParameters()
    for key in ENV_PARAMETER_KEYS:
        if key in ep_doc:
            setattr(ep, key, _expect(ep_doc, key, (int, float), "env_parameters"))

    ext = doc.get("extensions", {})
    if not isinstance(ext, dict):
        raise ConfigError("extensions: expected a mapping")
    unknown = set(ext) - set(EXTENSION_KEYS)
    if unknown:
        raise ConfigError(f"extensions: unknown key(s): {sorted(unknown)}")

    cfg = RunConfig(env_parameters=ep, extensions=dict(ext))
    if "name" in doc:
        cfg.name = _expect(doc, "name", (str,), "$")
    if "no_graphics" in doc:
        cfg.no_graphics = _expect(doc, "no_graphics", (bool,), "$")
    if "intervention_type" in doc:
        cfg.intervention_type = _expect(doc, "intervention_type", (str,), "$")
    if "model" in doc:
        cfg.model = _expect(doc, "model", (str,), "$")
    if "shot" in doc:
        cfg.shot = _expect(doc, "shot", (str,), "$")
    for key in ("lr", "lambda_", "gamma", "clip_param"):
        if key in doc:
            setattr(cfg, key, _expect(doc, key, (int, float), "$"))
    for key in ("sgd_minibatch_size", "train_batch_size", "num_sgd_iter"):
        if key in doc:
            setattr(cfg, key, _expect(doc, key, (int,), "$"))
    return cfg.validate()


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a run-config YAML file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(doc)


# --- canonical serialization -----------------------------------------------


def _fmt_scalar(v: Any) -> str:
    if isinstance(v, bool):
        return "True" if v else "False"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_scalar(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize value of type {type(v).__name__}")


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig in canonical form (stable key order, stable scalars)."""
    lines = [f"name: {_fmt_scalar(cfg.name)}"]
    lines.append("env_parameters:")
    for key in ENV_PARAMETER_KEYS:
        lines.append(f"  {key}: {_fmt_scalar(getattr(cfg.env_parameters, key))}")
    lines.append(f"no_graphics: {_fmt_scalar(cfg.no_graphics)}")
    lines.append(f"intervention_type: {_fmt_scalar(cfg.intervention_type)}")
    if cfg.model is not None:
        lines.append(f"model: {_fmt_scalar(cfg.model)}")
    if cfg.shot is not None:
        lines.append(f"shot: {_fmt_scalar(cfg.shot)}")
    for key in ("lr", "lambda_", "gamma", "sgd_minibatch_size", "train_batch_size",
                "num_sgd_iter", "clip_param"):
        lines.append(f"{key}: {_fmt_scalar(getattr(cfg, key))}")
    if cfg.extensions:
        lines.append("extensions:")
        for key in EXTENSION_KEYS:
            if key in cfg.extensions:
                lines.append(f"  {key}: {_fmt_scalar(cfg.extensions[key])}")
    return "\n".join(lines) + "\n"


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(serialize_config(cfg))
