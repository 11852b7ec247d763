"""Command-line entry points.

    firecrew train  --config configs/no_intervention.yaml --steps 30000
    firecrew eval   --config ... --checkpoint runs/.../final.json
    firecrew replay --run-dir runs/NO_INTERVENTION/20260814-081500
    firecrew serve  --config configs/rb_llama_3.1.yaml --port 8700
    firecrew bench  --trees 1000 --steps 2000
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .config import RunConfig, load_config
from .errors import FirecrewError, ReplayMismatch
from .gateway import HttpBackend, MockBackend
from .telemetry import metrics_hash


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg.extensions["seed"] = args.seed
    if getattr(args, "agents", None) is not None:
        cfg.extensions["n_agents"] = args.agents
    if getattr(args, "record_events", False):
        cfg.extensions["record_events"] = True
    if getattr(args, "endpoint", None):
        cfg.extensions["endpoint"] = args.endpoint
    return cfg.validate()


def _make_backend(cfg: RunConfig, args: argparse.Namespace,
                  world_supplier):
    if cfg.intervention_type == "none":
        return None
    choice = getattr(args, "backend", "auto")
    endpoint = cfg.extensions.get("endpoint")
    if choice == "mock" or (choice == "auto" and not endpoint):
        return MockBackend(world_supplier=world_supplier)
    if not endpoint:
        raise FirecrewError("--backend http needs an endpoint (flag or "
                            "`extensions.endpoint` in the config)")
    return HttpBackend(endpoint=endpoint,
                       api_key=os.environ.get("FIRECREW_API_KEY"))


def _default_run_dir(cfg: RunConfig) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    return Path("runs") / cfg.name / stamp


def cmd_train(args: argparse.Namespace) -> int:
    from .training import Trainer

    cfg = _apply_overrides(load_config(args.config), args)
    run_dir = Path(args.run_dir) if args.run_dir else _default_run_dir(cfg)
    trainer = Trainer(cfg, run_dir=run_dir)
    if cfg.intervention_type != "none":
        backend = _make_backend(cfg, args, lambda: trainer.world)
        if backend is not None:
            trainer.backend = backend
            trainer.pipeline.backend = backend
            trainer.synchronous = isinstance(backend, MockBackend)
    try:
        records = trainer.train(total_steps=args.steps)
    finally:
        trainer.close()
    print(f"run dir: {run_dir}")
    print(f"episodes: {len(records)}  steps: {trainer.global_step}  "
          f"updates: {trainer.update_idx}")
    if records:
        mean_reward = sum(r.episode_reward for r in records) / len(records)
        print(f"mean episode reward: {mean_reward:.2f}")
    print(f"metrics hash: {metrics_hash(records)}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from .training import Trainer

    cfg = _apply_overrides(load_config(args.config), args)
    trainer = Trainer(cfg, run_dir=None)
    if cfg.intervention_type != "none":
        backend = _make_backend(cfg, args, lambda: trainer.world)
        if backend is not None:
            trainer.backend = backend
            trainer.pipeline.backend = backend
            trainer.synchronous = isinstance(backend, MockBackend)
    if args.checkpoint:
        trainer.load_checkpoint(args.checkpoint)
    records = trainer.evaluate(args.episodes, deterministic=not args.sample)
    trainer.close()
    for rec in records:
        print(rec.to_json())
    mean_reward = sum(r.episode_reward for r in records) / len(records)
    print(f"mean episode reward over {len(records)} episodes: "
          f"{mean_reward:.2f}", file=sys.stderr)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    from .replay import verify_run_dir

    try:
        report = verify_run_dir(args.run_dir)
    except ReplayMismatch as exc:
        print(f"REPLAY MISMATCH: {exc}", file=sys.stderr)
        return 1
    print(f"replay ok: {report.episodes} episodes, {report.steps} steps, "
          f"all digests match")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve_run
    from .training import Trainer

    cfg = _apply_overrides(load_config(args.config), args)
    run_dir = Path(args.run_dir) if args.run_dir else _default_run_dir(cfg)
    trainer = Trainer(cfg, run_dir=run_dir)
    if cfg.intervention_type != "none":
        backend = _make_backend(cfg, args, lambda: trainer.world)
        if backend is not None:
            trainer.backend = backend
            trainer.pipeline.backend = backend
            trainer.synchronous = isinstance(backend, MockBackend)
    if args.throttle:
        trainer.step_delay = 1.0 / args.throttle
    print(f"serving on http://{args.host}:{args.port}  (run dir: {run_dir})")
    serve_run(trainer, host=args.host, port=args.port, total_steps=args.steps)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import compare_backends, format_results

    results = compare_backends(trees=args.trees, steps=args.steps,
                               seed=args.seed)
    print(format_results(results))
    if len(results) == 2 and results[0].digest != results[1].digest:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firecrew",
        description="wildfire crew simulation, training and ops tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training job")
    p.add_argument("--config", required=True)
    p.add_argument("--steps", type=int, default=None,
                   help="environment step budget (default: config total_steps)")
    p.add_argument("--run-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--agents", type=int, default=None)
    p.add_argument("--backend", choices=["auto", "mock", "http"], default="auto")
    p.add_argument("--endpoint", default=None,
                   help="chat-completions base URL for --backend http")
    p.add_argument("--record-events", action="store_true",
                   help="write a replayable events.log")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run evaluation episodes")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--sample", action="store_true",
                   help="sample actions instead of taking the mean")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--agents", type=int, default=None)
    p.add_argument("--backend", choices=["auto", "mock", "http"], default="auto")
    p.add_argument("--endpoint", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="verify a recorded run bit-exactly")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="train with the ops server attached")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--throttle", type=float, default=None,
                   help="cap environment steps per second (for live viewing)")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--run-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--agents", type=int, default=None)
    p.add_argument("--backend", choices=["auto", "mock", "http"], default="auto")
    p.add_argument("--endpoint", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--trees", type=int, default=1000)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FirecrewError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
