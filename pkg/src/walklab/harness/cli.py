"""Command-line interface.

Subcommands: train, eval, ablate-oob, ablate-safety, serve. Defaults come
from the documented config format; any key is overridable with repeated
--set section.key=value flags. Bad flags exit 2 (usage), bad configs and
checkpoints exit 1 with a diagnostic naming the problem.
"""

import argparse
import json
import sys
from pathlib import Path

from .checkpoint import CheckpointError, save_checkpoint
from .config import ConfigError, load_config, write_config
from .records import write_curves


def _add_config_args(p):
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config key (repeatable)",
    )
    p.add_argument("--seeds", default=None, help="space/comma separated seed list")
    p.add_argument("--budget", type=int, default=None, help="env steps per task")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="walklab",
        description="Safety-constrained multi-task locomotion lab on a planar walker",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a multi-seed training session")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("eval", help="deterministic rollouts from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--task", default=None)
    p.add_argument("--seed", type=int, default=1234)

    p = sub.add_parser("ablate-oob", help="out-of-workspace scheduling ablation")
    _add_config_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ablate-safety", help="safety-mode ablation")
    _add_config_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="teleop policy server (websocket)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--speed", type=float, default=1.0, help="wall-pace multiplier")
    p.add_argument("--log", default=None, help="trajectory JSONL path")

    return parser


def _config_from_args(args):
    overrides = list(args.overrides)
    if args.seeds is not None:
        overrides.append(f"harness.seeds={args.seeds.replace(',', ' ')}")
    if args.budget is not None:
        overrides.append(f"harness.steps_per_task={args.budget}")
    return load_config(args.config, overrides)


def _cmd_train(args):
    from ..tasks import training_session

    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config(out / "config.ini", cfg)

    all_records = []
    for seed in cfg.seeds:
        session_cfg = cfg.session_config(seed)
        on_episode = None
        if args.verbose:
            def on_episode(rec, _seed=seed):
                if rec.episode % 25 == 0:
                    print(
                        f"seed {_seed} ep {rec.episode:4d} [{rec.task}] "
                        f"return {rec.episode_return:8.2f} falls {rec.cum_falls} "
                        f"oob {rec.cum_oob} lambda {rec.lam:.3f}"
                    )
        state, records = training_session(session_cfg, on_episode=on_episode)
        all_records.extend(records)
        save_checkpoint(out / f"checkpoint-seed{seed}.json", cfg, state.learners)
        print(
            f"seed {seed}: steps={state.steps} episodes={state.episodes} "
            f"falls={state.falls} oob={state.oob_events} "
            f"sim_time={state.sim_time_s:.1f}s"
        )
    write_curves(out / "curves.csv", all_records)
    print(f"wrote {out / 'curves.csv'} and {len(cfg.seeds)} checkpoint(s)")
    return 0


def _cmd_eval(args):
    from .evaluate import evaluate_policy

    stats = evaluate_policy(
        args.checkpoint, episodes=args.episodes, task=args.task, seed=args.seed
    )
    print(json.dumps(stats.as_dict(), indent=2))
    return 0


def _cmd_ablate_oob(args):
    from .ablate import run_ablation_oob

    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, _ = run_ablation_oob(
        cfg, out_dir=str(out), progress=lambda c: print(
            f"{c['workspace']} {c['mode']} seed {c['seed']}: oob={c['oob']} falls={c['falls']}"
        )
    )
    for row in rows:
        print(" ".join(str(v) for v in row))
    return 0


def _cmd_ablate_safety(args):
    from .ablate import run_ablation_safety

    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, _ = run_ablation_safety(
        cfg, out_dir=str(out), progress=lambda c: print(
            f"{c['mode']} seed {c['seed']}: falls={c['falls']} "
            f"final_return={c['final_return']:.2f}"
        )
    )
    for row in rows:
        print(" ".join(str(v) for v in row))
    return 0


def _cmd_serve(args):
    from .teleop import serve_teleop

    return serve_teleop(
        args.checkpoint,
        port=args.port,
        host=args.host,
        speed=args.speed,
        log_path=args.log,
    )


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "eval": _cmd_eval,
        "ablate-oob": _cmd_ablate_oob,
        "ablate-safety": _cmd_ablate_safety,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
