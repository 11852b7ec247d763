"""Bit-exact replay of recorded runs.

Training (with the ``record_events`` extension on) writes an events log:
one line per episode start carrying the world seed and initial digest, one
line per step carrying the executed actions and the post-step digest.
Replay re-runs those actions through a fresh world and compares digests
step by step, so any drift in simulation semantics, kernel backend or RNG
handling surfaces as a :class:`ReplayMismatch` naming the first divergent
step.

The log also supports recounting: folding the replayed events back into
episode records, an independent check of the telemetry accumulator.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .config import WorldConfig
from .errors import ReplayError, ReplayMismatch
from .rewards import RewardShaping, compute_rewards
from .telemetry import EpisodeAccumulator, EpisodeRecord
from .world import Action, init_world, state_digest, step


@dataclass
class ReplayReport:
    episodes: int
    steps: int
    records: list[EpisodeRecord]


def read_events(path: str | Path) -> list[dict]:
    events = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ReplayError(f"events log line {lineno} is not JSON: {exc}")
    return events


def verify_events(world_cfg: WorldConfig, events: list[dict],
                  shaping: RewardShaping | None = None,
                  gamma: float = 0.99,
                  config_name: str = "") -> ReplayReport:
    """Re-execute an events log and check every digest.

    Raises ReplayMismatch at the first step whose digest differs, and
    ReplayError if the log is structurally unusable.
    """
    shaping = shaping or RewardShaping()
    world = None
    acc = None
    episode = 0
    steps = 0
    records: list[EpisodeRecord] = []

    for ev in events:
        kind = ev.get("type")
        if kind == "episode_start":
            if acc is not None and world is not None and world.terminal:
                records.append(acc.finish())
            episode = ev["episode"]
            world = init_world(world_cfg, seed=ev["seed"])
            got = state_digest(world)
            if got != ev["digest"]:
                raise ReplayMismatch(
                    step=-1,
                    message=f"episode {episode} initial digest mismatch: "
                            f"recorded {ev['digest']}, replayed {got}")
            acc = EpisodeAccumulator(episode_count=episode, seed=ev["seed"],
                                     config_name=config_name, gamma=gamma)
        elif kind == "tasks":
            if acc is None:
                raise ReplayError("tasks event before any episode_start")
            acc.on_tasks(ev["n"], ev["total"])
        elif kind == "step":
            if world is None or acc is None:
                raise ReplayError("step event before any episode_start")
            actions = [Action(steer=float(a[0]), drop=int(a[1]))
                       for a in ev["actions"]]
            sev = step(world, actions)
            acc.on_step(sev, compute_rewards(sev, shaping))
            steps += 1
            got = state_digest(world)
            if got != ev["digest"]:
                raise ReplayMismatch(
                    step=ev["step"],
                    message=f"digest mismatch at step {ev['step']} "
                            f"(episode {episode}): recorded {ev['digest']}, "
                            f"replayed {got}")
        else:
            raise ReplayError(f"unknown event type {kind!r}")

    if acc is not None and world is not None and world.terminal:
        records.append(acc.finish())
    return ReplayReport(episodes=episode, steps=steps, records=records)


def verify_run_dir(run_dir: str | Path) -> ReplayReport:
    """Verify a run directory produced by training with event recording."""
    from .config import load_config

    run_dir = Path(run_dir)
    events_path = run_dir / "events.log"
    if not events_path.exists():
        raise ReplayError(f"{events_path} does not exist; was the run recorded "
                          "with the record_events extension?")
    cfg = load_config(run_dir / "config.yaml")
    shaping = RewardShaping.from_env_parameters(cfg.env_parameters)
    return verify_events(cfg.world_config(), read_events(events_path),
                         shaping=shaping, gamma=cfg.gamma, config_name=cfg.name)
