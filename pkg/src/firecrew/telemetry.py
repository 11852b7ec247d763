"""Per-episode metrics: accumulation, JSONL persistence, stable hashing.

The record field names follow the experiment tables so downstream scripts
can consume either source unchanged. ``wall_time`` is the one field that
is allowed to differ between reruns of the same seed; the metrics hash
therefore excludes it and nothing else.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .rewards import RewardBreakdown
from .world import StepEvents


@dataclass
class EpisodeRecord:
    episode_count: int = 0
    crash_count: int = 0
    extinguishing_trees: int = 0
    extinguishing_trees_reward: float = 0.0
    fire_out_count: int = 0
    fire_too_close_to_village: int = 0
    preparing_trees: int = 0
    preparing_trees_reward: float = 0.0
    time_step_count: int = 0
    water_drop_count: int = 0
    water_pickup_count: int = 0
    episode_reward: float = 0.0
    episode_return: float = 0.0
    task_count: int = 0
    total_task_count: int = 0
    episode_length: int = 0
    seed: int = 0
    config_name: str = ""
    wall_time: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "EpisodeRecord":
        return cls(**json.loads(line))


HASH_EXCLUDED_FIELDS = ("wall_time",)


def metrics_hash(records: list[EpisodeRecord]) -> str:
    """Order-sensitive digest of a run's records, minus wall-clock noise.

    Two runs of the same configuration and seed must produce equal hashes;
    that property is load-bearing for the determinism checks.
    """
    h = hashlib.blake2b(digest_size=16)
    for rec in records:
        doc = asdict(rec)
        for name in HASH_EXCLUDED_FIELDS:
            doc.pop(name, None)
        h.update(json.dumps(doc, sort_keys=True).encode())
        h.update(b"\n")
    return h.hexdigest()


class MetricsWriter:
    """Append-only JSONL sink for episode records."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.records: list[EpisodeRecord] = []

    def write(self, rec: EpisodeRecord) -> None:
        self.records.append(rec)
        with self.path.open("a") as fh:
            fh.write(rec.to_json() + "\n")

    @staticmethod
    def read(path: str | Path) -> list[EpisodeRecord]:
        records = []
        with Path(path).open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(EpisodeRecord.from_json(line))
        return records


@dataclass
class EpisodeAccumulator:
    """Folds step events and rewards into one EpisodeRecord.

    ``time_step_count`` counts the steps on which the burn-time penalty
    applied; ``episode_length`` counts all steps.
    """

    episode_count: int
    seed: int
    config_name: str
    gamma: float
    rec: EpisodeRecord = field(init=False)
    _discount: float = field(default=1.0, init=False)
    _started: float = field(init=False)

    def __post_init__(self) -> None:
        self.rec = EpisodeRecord(episode_count=self.episode_count,
                                 seed=self.seed, config_name=self.config_name)
        self._started = time.monotonic()

    def on_step(self, events: StepEvents, breakdown: RewardBreakdown) -> None:
        rec = self.rec
        rec.crash_count += events.crashes
        rec.extinguishing_trees += events.extinguished
        rec.extinguishing_trees_reward += breakdown.extinguish
        rec.fire_out_count += 1 if events.fire_out else 0
        rec.fire_too_close_to_village += 1 if events.village_hit else 0
        rec.preparing_trees += events.prepared
        rec.preparing_trees_reward += breakdown.prepare
        rec.time_step_count += 1 if events.burning_after else 0
        rec.water_drop_count += events.drops
        rec.water_pickup_count += events.pickups
        rec.episode_reward += breakdown.total
        rec.episode_return += self._discount * breakdown.total
        self._discount *= self.gamma
        rec.episode_length += 1

    def on_tasks(self, n_assigned: int, total_so_far: int) -> None:
        self.rec.task_count += n_assigned
        self.rec.total_task_count = total_so_far

    def finish(self) -> EpisodeRecord:
        self.rec.wall_time = time.monotonic() - self._started
        return self.rec
