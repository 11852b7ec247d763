"""The training loop: rollouts, mediated overrides, updates, telemetry.

Determinism layout: the run seed feeds a SeedSequence that spawns four
independent streams (world seeds, parameter init, action sampling,
minibatch shuffling). Episode worlds get their seeds from the world
stream in order, so two runs of one config produce identical episodes,
identical metrics and identical checkpoints. Wall-clock is the only
thing allowed to differ.

Mediated overrides replace the policy's action for the tasked agent.
Those steps are excluded from the PPO buffer by default (the policy did
not choose them); segment boundaries close around the override span so
advantage estimates never mix the two control modes. Set the
``mask_overridden`` extension to False to train on them instead, rescored
under the current policy.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .config import RunConfig, serialize_config
from .controllers import MediatorPipeline, validate_tasks
from .errors import BackendError, NumericsError, StateError, Unavailable
from .gateway import AsyncCompleter, Backend, ExchangeLog, HttpBackend, MockBackend
from .mediation import Decision, MediationScheduler, Task
from .policy import (PolicyParams, action_logprob, init_params, mean_actions,
                     sample_actions)
from .ppo import AdamState, TrainHyper, gae, ppo_update
from .rewards import RewardShaping, compute_rewards
from .telemetry import EpisodeAccumulator, EpisodeRecord, MetricsWriter
from .world import (Action, WorldState, encode_all_observations, init_world,
                    snapshot, state_digest, step)

CHECKPOINT_VERSION = 1
STATE_SCHEMA_VERSION = 1


def _rng_state(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {"bit_generator": st["bit_generator"],
            "state": {"state": int(st["state"]["state"]),
                      "inc": int(st["state"]["inc"])},
            "has_uint32": int(st["has_uint32"]),
            "uinteger": int(st["uinteger"])}


def _set_rng_state(rng: np.random.Generator, doc: dict) -> None:
    rng.bit_generator.state = {
        "bit_generator": doc["bit_generator"],
        "state": {"state": int(doc["state"]["state"]),
                  "inc": int(doc["state"]["inc"])},
        "has_uint32": int(doc["has_uint32"]),
        "uinteger": int(doc["uinteger"]),
    }


@dataclass
class _Segment:
    """One agent's open run of policy-controlled transitions."""

    obs: list = field(default_factory=list)
    steer: list = field(default_factory=list)
    drop: list = field(default_factory=list)
    logprob: list = field(default_factory=list)
    value: list = field(default_factory=list)
    reward: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.obs)

    def clear(self) -> None:
        for name in ("obs", "steer", "drop", "logprob", "value", "reward"):
            getattr(self, name).clear()


class Trainer:
    """Owns one run: a config, a policy, and the episode/update loop."""

    def __init__(self, cfg: RunConfig, run_dir: str | Path | None = None,
                 backend: Backend | None = None,
                 publisher: Any = None,
                 human_strategy_source: Callable[[], str | None] | None = None):
        cfg.validate()
        self.cfg = cfg
        self.world_cfg = cfg.world_config()
        self.hyper = TrainHyper.from_run_config(cfg)
        self.shaping = RewardShaping.from_env_parameters(cfg.env_parameters)
        self.mask_overridden = bool(cfg.extensions.get("mask_overridden", True))
        self.record_events = bool(cfg.extensions.get("record_events", False))
        self.checkpoint_every = int(cfg.extensions.get("checkpoint_every", 10))
        self.publisher = publisher
        self.human_strategy_source = human_strategy_source

        ss = np.random.SeedSequence(cfg.seed)
        world_ss, policy_ss, action_ss, shuffle_ss = ss.spawn(4)
        self.world_seed_rng = np.random.Generator(np.random.PCG64(world_ss))
        self.action_rng = np.random.Generator(np.random.PCG64(action_ss))
        self.shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_ss))
        self.params = init_params(np.random.Generator(np.random.PCG64(policy_ss)))
        self.opt = AdamState.for_params(self.params)

        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.metrics_writer: MetricsWriter | None = None
        self._events_fh = None
        if self.run_dir is not None:
            self.run_dir.mkdir(parents=True, exist_ok=True)
            (self.run_dir / "checkpoints").mkdir(exist_ok=True)
            (self.run_dir / "config.yaml").write_text(serialize_config(cfg))
            self.metrics_writer = MetricsWriter(self.run_dir / "metrics.jsonl")
            if self.record_events:
                self._events_fh = (self.run_dir / "events.log").open("a")

        self.scheduler: MediationScheduler | None = None
        self.pipeline: MediatorPipeline | None = None
        self.completer: AsyncCompleter | None = None
        self.synchronous = True
        if cfg.intervention_type != "none":
            self.scheduler = MediationScheduler(
                n_agents=cfg.n_agents,
                cooldown_steps=cfg.cooldown_steps,
                arrival_radius=float(cfg.extensions.get("arrival_radius", 30.0)))
            if backend is None:
                endpoint = cfg.extensions.get("endpoint")
                if endpoint:
                    log = (ExchangeLog(self.run_dir / "gateway.jsonl")
                           if self.run_dir else None)
                    backend = HttpBackend(endpoint=endpoint, log=log)
                else:
                    backend = MockBackend(world_supplier=lambda: self.world)
            self.backend = backend
            self.pipeline = MediatorPipeline(
                kind=cfg.intervention_type, backend=backend,
                model=cfg.model or "mock", shot=cfg.shot,
                template_dir=cfg.extensions.get("template_dir"),
                max_strategy_chars=int(cfg.extensions.get("max_strategy_chars", 800)))
            if isinstance(backend, HttpBackend):
                self.synchronous = False
                self.completer = AsyncCompleter()

        self.world: WorldState | None = None
        self.step_delay = 0.0  # seconds per step; serve --throttle sets this
        self.global_step = 0
        self.update_idx = 0
        self.episode_count = 0
        self.records: list[EpisodeRecord] = []
        self.latest_trace: dict | None = None
        self.mediation_errors = 0
        self._acc: EpisodeAccumulator | None = None
        self._segments = [_Segment() for _ in range(cfg.n_agents)]
        self._rollout: dict[str, list] = {k: [] for k in
                                          ("obs", "steer", "drop", "old_logprob",
                                           "advantage", "ret")}
        self._rollout_len = 0

    # -- episode management ----------------------------------------------------

    def _begin_episode(self) -> None:
        seed = int(self.world_seed_rng.integers(0, 2 ** 63 - 1))
        self.world = init_world(self.world_cfg, seed=seed)
        self.episode_count += 1
        self._acc = EpisodeAccumulator(
            episode_count=self.episode_count, seed=seed,
            config_name=self.cfg.name, gamma=self.cfg.gamma)
        if self.scheduler is not None:
            self.scheduler.reset_episode()
        for seg in self._segments:
            seg.clear()
        self._log_event({"type": "episode_start", "episode": self.episode_count,
                         "seed": seed, "digest": state_digest(self.world)})

    def _finish_episode(self) -> None:
        assert self._acc is not None
        rec = self._acc.finish()
        self.records.append(rec)
        if self.metrics_writer is not None:
            self.metrics_writer.write(rec)
        self._acc = None

    def _log_event(self, doc: dict) -> None:
        if self._events_fh is not None:
            self._events_fh.write(json.dumps(doc) + "\n")
            self._events_fh.flush()

    # -- mediation -------------------------------------------------------------

    def _intervention_round(self) -> None:
        """Run or launch one mediation round, depending on backend mode."""
        assert self.pipeline is not None and self.scheduler is not None
        human = None
        if self.human_strategy_source is not None:
            human = self.human_strategy_source()
        if self.synchronous:
            try:
                tasks, trace = self.pipeline.propose(self.world, human)
            except (BackendError, Unavailable) as exc:
                self.mediation_errors += 1
                self.latest_trace = {"error": str(exc)}
                return
            self._assign(tasks, trace)
        else:
            assert self.completer is not None
            if self.completer.busy:
                return
            frozen = _freeze_world(self.world)
            pipeline = self.pipeline
            self.completer.submit(lambda: pipeline.propose(frozen, human))

    def _poll_async(self) -> None:
        if self.completer is None:
            return
        outcome = self.completer.poll()
        if outcome is None:
            return
        status, value = outcome
        if status == "error":
            self.mediation_errors += 1
            self.latest_trace = {"error": str(value)}
            return
        tasks, trace = value
        tasks = validate_tasks(tasks, self.world)
        self._assign(tasks, trace)

    def _assign(self, tasks: list[Task], trace: dict) -> None:
        assert self.scheduler is not None
        accepted = self.scheduler.assign(tasks, self.global_step)
        trace["accepted"] = [t.to_wire() for t in accepted]
        trace["step"] = self.global_step
        self.latest_trace = trace
        if accepted and self._acc is not None:
            self._acc.on_tasks(len(accepted), self.scheduler.total_assigned)
            self._log_event({"type": "tasks", "episode": self.episode_count,
                             "step": self.global_step, "n": len(accepted),
                             "total": self.scheduler.total_assigned})

    # -- stepping ----------------------------------------------------------------

    def _close_segment(self, i: int, bootstrap: float) -> None:
        seg = self._segments[i]
        if len(seg) == 0:
            return
        values = np.asarray(seg.value)
        adv = gae(np.asarray(seg.reward), values, bootstrap,
                  self.hyper.gamma, self.hyper.lam)
        ret = adv + values
        self._rollout["obs"].extend(seg.obs)
        self._rollout["steer"].extend(seg.steer)
        self._rollout["drop"].extend(seg.drop)
        self._rollout["old_logprob"].extend(seg.logprob)
        self._rollout["advantage"].extend(adv.tolist())
        self._rollout["ret"].extend(ret.tolist())
        self._rollout_len += len(seg)
        seg.clear()

    def _open_len(self) -> int:
        return sum(len(s) for s in self._segments)

    def _step_once(self, collect: bool = True,
                   deterministic: bool = False) -> None:
        assert self.world is not None and self._acc is not None
        world = self.world
        obs = encode_all_observations(world)
        if deterministic:
            out = mean_actions(self.params, obs)
            sampled = {"steer": out["steer"], "drop": out["drop"],
                       "logprob": np.zeros(len(world.agents)),
                       "value": out["value"],
                       "mu": out["mu"], "logits": out["logits"],
                       "log_std": out["log_std"]}
        else:
            sampled = sample_actions(self.params, obs, self.action_rng)

        n = len(world.agents)
        env_actions = [Action(steer=float(sampled["steer"][i]),
                              drop=int(sampled["drop"][i])) for i in range(n)]
        overridden = [False] * n

        if self.pipeline is not None:
            assert self.scheduler is not None
            self._poll_async()
            if self.scheduler.decide(world) is Decision.REQUEST:
                self._intervention_round()
            for i in range(n):
                ov = self.scheduler.override_action(world, i, self.global_step)
                if ov is not None:
                    env_actions[i] = ov
                    overridden[i] = True

        ev = step(world, env_actions)
        breakdown = compute_rewards(ev, self.shaping)
        reward = breakdown.total
        self._acc.on_step(ev, breakdown)

        if collect:
            for i in range(n):
                if overridden[i]:
                    if self.mask_overridden:
                        self._close_segment(i, bootstrap=float(sampled["value"][i]))
                        continue
                    lp = float(action_logprob(
                        sampled["mu"][i:i + 1], sampled["log_std"],
                        sampled["logits"][i:i + 1],
                        np.array([env_actions[i].steer]),
                        np.array([env_actions[i].drop]))[0])
                else:
                    lp = float(sampled["logprob"][i])
                seg = self._segments[i]
                seg.obs.append(obs[i])
                seg.steer.append(float(env_actions[i].steer))
                seg.drop.append(int(env_actions[i].drop))
                seg.logprob.append(lp)
                seg.value.append(float(sampled["value"][i]))
                seg.reward.append(reward)

        if self.scheduler is not None:
            self.scheduler.tick(self.global_step)
        self._log_event({"type": "step", "step": self.global_step,
                         "episode": self.episode_count,
                         "actions": [[a.steer, a.drop] for a in env_actions],
                         "digest": state_digest(world)})
        self.global_step += 1

        if self.publisher is not None and self.publisher.wants():
            self.publisher.publish(self.build_state_doc())

        if world.terminal:
            if collect:
                for i in range(n):
                    self._close_segment(i, bootstrap=0.0)
            self._finish_episode()

    # -- updates ---------------------------------------------------------------

    def _maybe_update(self) -> dict | None:
        if self._rollout_len + self._open_len() < self.hyper.train_batch_size:
            return None
        if self.world is not None and not self.world.terminal:
            next_obs = encode_all_observations(self.world)
            values = mean_actions(self.params, next_obs)["value"]
            for i in range(len(self.world.agents)):
                self._close_segment(i, bootstrap=float(values[i]))
        batch_size = self.hyper.train_batch_size
        rollout = {
            "obs": np.asarray(self._rollout["obs"])[:batch_size],
            "steer": np.asarray(self._rollout["steer"])[:batch_size],
            "drop": np.asarray(self._rollout["drop"], dtype=np.int64)[:batch_size],
            "old_logprob": np.asarray(self._rollout["old_logprob"])[:batch_size],
            "advantage": np.asarray(self._rollout["advantage"])[:batch_size],
            "ret": np.asarray(self._rollout["ret"])[:batch_size],
        }
        for key in self._rollout:
            self._rollout[key].clear()
        self._rollout_len = 0
        try:
            stats = ppo_update(self.params, self.opt, rollout, self.hyper,
                               self.shuffle_rng)
        except NumericsError:
            self.update_idx += 1
            return {"skipped": True}
        self.update_idx += 1
        if (self.run_dir is not None
                and self.update_idx % self.checkpoint_every == 0):
            self.save_checkpoint(self.run_dir / "checkpoints"
                                 / f"update_{self.update_idx:06d}.json")
        return stats

    # -- entry points ------------------------------------------------------------

    def train(self, total_steps: int | None = None,
              max_episodes: int | None = None) -> list[EpisodeRecord]:
        """Run until the step budget (or episode budget) is exhausted.

        A partial final episode contributes transitions but no record.
        """
        budget = total_steps if total_steps is not None else self.cfg.total_steps
        while self.global_step < budget:
            if max_episodes is not None and self.episode_count >= max_episodes \
                    and (self.world is None or self.world.terminal):
                break
            if self.world is None or self.world.terminal:
                self._begin_episode()
            self._step_once(collect=True)
            self._maybe_update()
            if self.step_delay:
                time.sleep(self.step_delay)
        if self.run_dir is not None:
            self.save_checkpoint(self.run_dir / "checkpoints" / "final.json")
        return self.records

    def evaluate(self, n_episodes: int,
                 deterministic: bool = True) -> list[EpisodeRecord]:
        """Run episodes without collecting or updating; returns their records."""
        start = len(self.records)
        for _ in range(n_episodes):
            self._begin_episode()
            while not self.world.terminal:
                self._step_once(collect=False, deterministic=deterministic)
        return self.records[start:]

    def close(self) -> None:
        if self._events_fh is not None:
            self._events_fh.close()
            self._events_fh = None
        if self.completer is not None:
            self.completer.close()

    # -- state for the ops surface -------------------------------------------

    def build_state_doc(self) -> dict:
        """Current world and run state, JSON-safe, for /state and the stream."""
        doc: dict[str, Any] = {
            "schema": STATE_SCHEMA_VERSION,
            "global_step": self.global_step,
            "episode": self.episode_count,
            "update_idx": self.update_idx,
            "intervention_type": self.cfg.intervention_type,
            "config_name": self.cfg.name,
        }
        if self.world is not None:
            w = self.world
            doc["world"] = {
                "step": w.step,
                "terminal": w.terminal,
                "burning": w.burning_count(),
                "env_half_extent": w.config.env_half_extent,
                "island_half_extent": w.config.island_half_extent,
                "village_center": list(w.config.village_center),
                "village_radius": w.config.village_radius,
                "trees": {
                    "x": np.round(w.tree_xy[:, 0], 2).tolist(),
                    "y": np.round(w.tree_xy[:, 1], 2).tolist(),
                    "state": w.tree_state.tolist(),
                },
                "agents": [
                    {"x": a.x, "y": a.y, "heading": a.heading,
                     "holding": a.holding, "crashed": a.crashed}
                    for a in w.agents
                ],
            }
        if self.scheduler is not None:
            doc["mediation"] = {
                "windows": list(self.scheduler.windows),
                "tasks": [t.to_wire() if t is not None else None
                          for t in self.scheduler.tasks],
                "total_assigned": self.scheduler.total_assigned,
                "errors": self.mediation_errors,
            }
        if self.latest_trace is not None:
            doc["latest_trace"] = self.latest_trace
        if self.records:
            doc["last_episode"] = json.loads(self.records[-1].to_json())
        return doc

    # -- checkpoints -----------------------------------------------------------

    def save_checkpoint(self, path: str | Path) -> None:
        doc = {
            "version": CHECKPOINT_VERSION,
            "config_name": self.cfg.name,
            "global_step": self.global_step,
            "update_idx": self.update_idx,
            "episode_count": self.episode_count,
            "params": self.params.to_jsonable(),
            "adam": self.opt.to_jsonable(),
            "rng": {
                "world_seed": _rng_state(self.world_seed_rng),
                "action": _rng_state(self.action_rng),
                "shuffle": _rng_state(self.shuffle_rng),
            },
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc))

    def load_checkpoint(self, path: str | Path) -> None:
        """Restore parameters, optimizer and RNG streams from a checkpoint.

        Resumption begins at the next episode boundary; a mid-episode world
        is intentionally not part of the checkpoint.
        """
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != CHECKPOINT_VERSION:
            raise StateError(f"unsupported checkpoint version {doc.get('version')!r}")
        self.params = PolicyParams.from_jsonable(doc["params"])
        self.opt = AdamState.from_jsonable(doc["adam"])
        self.global_step = doc["global_step"]
        self.update_idx = doc["update_idx"]
        self.episode_count = doc["episode_count"]
        _set_rng_state(self.world_seed_rng, doc["rng"]["world_seed"])
        _set_rng_state(self.action_rng, doc["rng"]["action"])
        _set_rng_state(self.shuffle_rng, doc["rng"]["shuffle"])
        self.world = None


def _freeze_world(world: WorldState) -> WorldState:
    """Deep, independent copy for a worker thread to read."""
    from .world import restore
    return restore(snapshot(world))
