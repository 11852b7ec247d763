"""Timing harness comparing the kernel backends on identical workloads."""
from __future__ import annotations

import time
from dataclasses import dataclass

from . import kernels
from . import world as world_mod
from .config import WorldConfig
from .world import Action, init_world, state_digest, step


@dataclass
class BenchResult:
    backend: str
    steps: int
    seconds: float
    digest: str

    @property
    def steps_per_second(self) -> float:
        return self.steps / self.seconds if self.seconds > 0 else float("inf")


def _pilot_actions(world, tick: int) -> list[Action]:
    """State-dependent but fully deterministic flying: weave over the
    island, turn back near the boundary, drop every 60 ticks. Keeps all
    agents alive for the whole horizon so the workload is steady."""
    import math

    from .world import wrap_angle

    cfg = world.config
    acts = []
    for i, a in enumerate(world.agents):
        if max(abs(a.x), abs(a.y)) > 0.85 * cfg.env_half_extent:
            bearing = math.atan2(-a.y, -a.x)
            steer = -wrap_angle(a.heading - bearing) / cfg.max_turn_rate
            steer = min(1.0, max(-1.0, steer))
        else:
            steer = 0.35 * math.sin(0.02 * tick + 1.7 * i)
        acts.append(Action(steer=steer, drop=int(tick % 60 == 10)))
    return acts


def run_backend(backend_name: str, cfg: WorldConfig, seed: int,
                n_steps: int) -> BenchResult:
    """Step one world under the named backend and time it. The pilot is a
    pure function of world state, so both backends walk the exact same
    trajectory; the digest proves it."""
    backend = kernels.get_backend(backend_name)
    saved = world_mod.K
    world_mod.K = backend
    try:
        world = init_world(cfg, seed=seed)
        t0 = time.perf_counter()
        done = 0
        for tick in range(n_steps):
            if world.terminal:
                break
            step(world, _pilot_actions(world, tick))
            done += 1
        elapsed = time.perf_counter() - t0
        return BenchResult(backend=backend_name, steps=done, seconds=elapsed,
                           digest=state_digest(world))
    finally:
        world_mod.K = saved


def compare_backends(trees: int = 1000, steps: int = 2000,
                     seed: int = 0) -> list[BenchResult]:
    cfg = WorldConfig(tree_count=trees, episode_length=max(steps, 1),
                      seed=seed)
    names = ["reference"]
    try:
        kernels.get_backend("compiled")
        names.append("compiled")
    except ImportError:
        pass
    return [run_backend(name, cfg, seed, steps) for name in names]


def format_results(results: list[BenchResult]) -> str:
    lines = [f"{'backend':<10} {'steps':>7} {'seconds':>9} {'steps/s':>10}  digest"]
    for r in results:
        lines.append(f"{r.backend:<10} {r.steps:>7} {r.seconds:>9.3f} "
                     f"{r.steps_per_second:>10.0f}  {r.digest}")
    if len(results) == 2:
        a, b = results
        if a.digest == b.digest:
            lines.append(f"digests match; compiled speedup: "
                         f"{a.seconds / b.seconds:.2f}x")
        else:
            lines.append("WARNING: backend digests differ, file a bug")
    return "\n".join(lines)
