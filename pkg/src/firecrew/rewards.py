"""Team reward computation from step events.

Every agent receives the same scalar each step: the crew is rewarded and
punished as a unit. Component weights default to the evaluation values;
training presets override them through ``env_parameters``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .config import EnvParameters
from .world import StepEvents


@dataclass(frozen=True)
class RewardShaping:
    """Per-component weights. Defaults are the evaluation weights."""

    ext_fire_reward: float = 5.0
    prep_tree_reward: float = 1.0
    water_pickup_reward: float = 1.0
    fire_out_reward: float = 10.0
    crash_reward: float = -100.0
    fire_close_to_village_reward: float = -50.0
    time_penalty: float = -0.01

    @classmethod
    def from_env_parameters(cls, ep: EnvParameters) -> "RewardShaping":
        return cls(
            ext_fire_reward=float(ep.ext_fire_reward),
            prep_tree_reward=float(ep.prep_tree_reward),
            water_pickup_reward=float(ep.water_pickup_reward),
            fire_out_reward=float(ep.fire_out_reward),
            crash_reward=float(ep.crash_reward),
            fire_close_to_village_reward=float(ep.fire_close_to_village_reward),
        )


# Shaped weights used for the curriculum-style training runs.
TRAINING_SHAPING = RewardShaping(
    ext_fire_reward=1000.0,
    prep_tree_reward=0.1,
    water_pickup_reward=0.1,
    fire_out_reward=0.0,
    crash_reward=-100.0,
    fire_close_to_village_reward=0.0,
)


@dataclass(frozen=True)
class RewardBreakdown:
    """One step's reward split by component.

    ``total`` is always the sum in declaration order; keeping the order
    fixed keeps the float result reproducible.
    """

    crash: float
    pickup: float
    fire_out: float
    village: float
    time_burning: float
    extinguish: float
    prepare: float

    @property
    def total(self) -> float:
        return (self.crash + self.pickup + self.fire_out + self.village
                + self.time_burning + self.extinguish + self.prepare)


def compute_rewards(events: StepEvents, shaping: RewardShaping) -> RewardBreakdown:
    """Score one step of events under the given shaping."""
    return RewardBreakdown(
        crash=shaping.crash_reward * events.crashes,
        pickup=shaping.water_pickup_reward * events.pickups,
        fire_out=shaping.fire_out_reward * (1.0 if events.fire_out else 0.0),
        village=shaping.fire_close_to_village_reward * (1.0 if events.village_hit else 0.0),
        time_burning=shaping.time_penalty * (1.0 if events.burning_after else 0.0),
        extinguish=shaping.ext_fire_reward * events.extinguished,
        prepare=shaping.prep_tree_reward * events.prepared,
    )


def episode_return(step_rewards: list[float], gamma: float) -> float:
    """Discounted sum of per-step team rewards from the episode start."""
    total = 0.0
    g = 1.0
    for r in step_rewards:
        total += g * r
        g *= gamma
    return total
