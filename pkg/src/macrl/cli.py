"""Command line interface: run / eval / replay / verify.

Exit codes: 0 success, 1 config error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import NumericError, rng_streams
from .harness import (
    ConfigError, build_env, build_learner, evaluate, parse_config,
    preset_config, replay_policy, run_training,
)
from . import nn


def _load_config(args) -> "RunConfig":
    overrides = {
        "seed": args.seed,
        "episodes": args.episodes,
        "out_dir": args.out_dir,
    }
    if args.preset:
        cfg = preset_config(args.preset, **overrides)
    elif args.config:
        cfg = parse_config(args.config)
        for key, v in overrides.items():
            if v is not None:
                setattr(cfg, key, v)
    else:
        raise ConfigError("one of --config or --preset is required")
    if args.algo:
        cfg.algo = args.algo
    if args.env:
        cfg.env = args.env
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="macrl",
        description="macro-action multi-agent reinforcement learning harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="run config file")
        p.add_argument("--preset", help="named preset")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--episodes", type=int, default=None)
        p.add_argument("--out-dir", dest="out_dir", default=None)
        p.add_argument("--algo", default=None)
        p.add_argument("--env", default=None)

    p_run = sub.add_parser("run", help="train a policy")
    add_common(p_run)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("--episodes", type=int, default=10)
    p_eval.add_argument("--seed", type=int, default=0)

    p_replay = sub.add_parser("replay", help="replay a checkpoint to a trace")
    p_replay.add_argument("checkpoint")
    p_replay.add_argument("--seed", type=int, default=0)
    p_replay.add_argument("--out", default=None)

    p_verify = sub.add_parser("verify", help="run the oracle suites")
    p_verify.add_argument("names", nargs="*", help="subset of checks")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_config(args)
            path = run_training(cfg)
            print(f"metrics written to {path}")
            return 0
        if args.command == "eval":
            arrays, meta = nn.load_checkpoint(args.checkpoint)
            from .harness import parse_config_text

            cfg = parse_config_text(meta["config"])
            streams = rng_streams(args.seed)
            env = build_env(cfg)
            learner = build_learner(cfg, env, streams)
            learner.load_checkpoint_arrays(arrays)
            mean, stderr = evaluate(
                learner, env, args.episodes, cfg.gamma, streams["eval"]
            )
            print(f"mean_return={mean:.6g} stderr={stderr:.6g} n={args.episodes}")
            return 0
        if args.command == "replay":
            lines = replay_policy(args.checkpoint, args.seed)
            text = "\n".join(lines) + "\n"
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8")
                print(f"trace written to {args.out}")
            else:
                sys.stdout.write(text)
            return 0
        if args.command == "verify":
            from .verify import run_all

            return 0 if run_all(args.names or None) else 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
