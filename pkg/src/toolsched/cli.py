"""Command-line front end.

Subcommands: scenario (generate/validate), train, eval, compare, replay,
plot (trajectory/curves). Exit codes: 0 success, 1 usage error, 2 validation
error (bad configs, malformed or inconsistent artifacts), 3 runtime failure.

Output locations: train and eval write a directory (default under
$TOOLSCHED_OUT, falling back to the working directory); single-file commands
take -o as the file path.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .env import make_baseline
from .evaluation import (LearnedPolicy, compare, evaluate, format_comparison,
                         load_eval_dir, write_comparison, write_eval_dir)
from .figures import render_curves, render_trajectory
from .learner import (PpoConfig, load_checkpoint, read_curve, save_checkpoint,
                      train, write_curve)
from .trace import TraceError, read_trace, verify_trace
from .world import (ConfigError, bundled_scenario_path, load_config, random_scenario,
                    save_config, scenario_hash, validate_config)

__all__ = ["main", "build_parser"]


class CliUsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        raise CliUsageError(message)


def _out_root() -> Path:
    return Path(os.environ.get("TOOLSCHED_OUT", "."))


def _shield_flag(value: str) -> bool:
    return value == "on"


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise CliUsageError(f"--seeds expects comma-separated integers, got {text!r}")


def build_parser() -> _Parser:
    parser = _Parser(prog="toolsched",
                     description="UAV tool-scheduling simulator and learner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scn = sub.add_parser("scenario", help="generate or validate scenario files")
    scn_sub = p_scn.add_subparsers(dest="scenario_command", required=True)
    p_gen = scn_sub.add_parser("generate", help="write a randomized scenario")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--standard", type=int, default=2,
                       help="number of standard servers")
    p_gen.add_argument("--semantic", type=int, default=2,
                       help="number of semantic servers")
    p_gen.add_argument("-o", "--out", default=None, help="output JSON path")
    p_val = scn_sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("path")

    p_train = sub.add_parser("train", help="train a policy")
    p_train.add_argument("--config", default=None, help="scenario JSON")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--seeds", type=str, default=None,
                         help="comma-separated seeds; writes seed-<n> subdirectories")
    p_train.add_argument("--shield", choices=("on", "off"), default="on")
    p_train.add_argument("--steps", type=int, default=None,
                         help="total environment steps")
    p_train.add_argument("--envs", type=int, default=None,
                         help="lockstep environment count")
    p_train.add_argument("-o", "--out", default=None, help="output directory")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint or baseline")
    src = p_eval.add_mutually_exclusive_group(required=True)
    src.add_argument("--checkpoint", default=None)
    src.add_argument("--baseline", choices=("random", "greedy", "costaware"),
                     default=None)
    p_eval.add_argument("--config", default=None,
                        help="scenario JSON (default: checkpoint's world or bundled)")
    p_eval.add_argument("--episodes", type=int, default=200)
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--shield", choices=("on", "off"), default="off")
    p_eval.add_argument("--stochastic", action="store_true",
                        help="sample actions instead of taking the mode")
    p_eval.add_argument("--traces", type=int, default=8,
                        help="number of episodes to trace (0 disables)")
    p_eval.add_argument("--method", default=None, help="method label in the report")
    p_eval.add_argument("-o", "--out", default=None, help="output directory")

    p_cmp = sub.add_parser("compare", help="rank evaluation directories")
    p_cmp.add_argument("dirs", nargs="+", help="directories written by eval")
    p_cmp.add_argument("-o", "--out", default=None,
                       help="comparison CSV path (default comparison.csv)")

    p_rep = sub.add_parser("replay", help="verify and summarize a step trace")
    p_rep.add_argument("trace", help="trace JSONL path")

    p_plot = sub.add_parser("plot", help="render SVG figures")
    plot_sub = p_plot.add_subparsers(dest="plot_command", required=True)
    p_traj = plot_sub.add_parser("trajectory", help="draw one traced episode")
    p_traj.add_argument("trace", help="trace JSONL path")
    p_traj.add_argument("--config", default=None, help="scenario JSON")
    p_traj.add_argument("-o", "--out", default=None, help="output SVG path")
    p_curv = plot_sub.add_parser("curves", help="draw learning curves")
    p_curv.add_argument("curves", nargs="+", help="curve CSV paths (one per seed)")
    p_curv.add_argument("--label", default="ppo", help="label for the curve group")
    p_curv.add_argument("--baseline", action="append", default=[],
                        metavar="NAME=VALUE",
                        help="flat reference level, repeatable")
    p_curv.add_argument("-o", "--out", default=None, help="output SVG path")

    return parser


def _load_world(path_arg):
    path = bundled_scenario_path() if path_arg is None else Path(path_arg)
    cfg = load_config(path)
    validate_config(cfg)
    return cfg


def _cmd_scenario(args) -> int:
    if args.scenario_command == "generate":
        cfg = random_scenario(args.seed, args.standard, args.semantic)
        out = Path(args.out) if args.out else _out_root() / "scenario.json"
        save_config(cfg, out)
        print(f"wrote {out} (scenario {scenario_hash(cfg)})")
        return 0
    cfg = load_config(args.path)
    validate_config(cfg)
    print(f"{args.path}: valid (scenario {scenario_hash(cfg)}, "
          f"{len(cfg.servers)} servers)")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_world(args.config)
    ppo = PpoConfig()
    if args.steps is not None:
        ppo = dataclasses.replace(ppo, total_steps=args.steps)
    if args.envs is not None:
        ppo = dataclasses.replace(ppo, n_envs=args.envs)
    shield_on = _shield_flag(args.shield)
    if args.seeds is not None and args.seed is not None:
        raise CliUsageError("pass --seed or --seeds, not both")
    out_root = Path(args.out) if args.out else _out_root() / "train"

    if args.seeds is not None:
        jobs = [(seed, out_root / f"seed-{seed}") for seed in _parse_seeds(args.seeds)]
        if not jobs:
            raise CliUsageError("--seeds lists no seeds")
    else:
        seed = cfg.seed if args.seed is None else args.seed
        jobs = [(seed, out_root)]

    for seed, out_dir in jobs:
        out_dir.mkdir(parents=True, exist_ok=True)

        def progress(row):
            print(f"seed {seed} update {row.update + 1} "
                  f"steps {row.env_steps} episodes {row.n_episodes} "
                  f"mean_return {row.mean_return:.1f}", file=sys.stderr)

        result = train(cfg, ppo, shield_on=shield_on, seed=seed, progress=progress)
        save_checkpoint(out_dir / "checkpoint.json", result.net, cfg, ppo,
                        shield_on=shield_on, env_steps=result.env_steps, seed=seed)
        write_curve(out_dir / "curve.csv", result.curve)
        save_config(dataclasses.replace(cfg, seed=seed), out_dir / "scenario.json")
        print(f"seed {seed}: {result.env_steps} steps, {result.episodes} episodes "
              f"-> {out_dir}")
    return 0


def _cmd_eval(args) -> int:
    stochastic = bool(args.stochastic)
    if args.checkpoint is not None:
        net, cfg_ckpt, _, _ = load_checkpoint(args.checkpoint)
        cfg = _load_world(args.config) if args.config is not None else cfg_ckpt
        if cfg.observation_length() != net.obs_length:
            raise ConfigError(
                "scenario and checkpoint disagree on observation length "
                f"({cfg.observation_length()} vs {net.obs_length})")
        policy = LearnedPolicy(net, stochastic=stochastic)
        method = args.method or "ppo"
    else:
        cfg = _load_world(args.config)
        policy = make_baseline(args.baseline)
        method = args.method or args.baseline
        if stochastic:
            raise CliUsageError("--stochastic applies only to checkpoints")
    if args.episodes < 1:
        raise CliUsageError("--episodes must be >= 1")
    seed = cfg.seed if args.seed is None else args.seed
    out_dir = Path(args.out) if args.out else _out_root() / f"eval-{method}"
    trace_dir = out_dir / "traces" if args.traces > 0 else None

    report = evaluate(policy, cfg, args.episodes, seed, method=method,
                      shield_on=_shield_flag(args.shield), stochastic=stochastic,
                      trace_dir=trace_dir, trace_episodes=args.traces)
    write_eval_dir(out_dir, report)
    ci = "" if report.ci95 is None else f" +- {report.ci95:.1f}"
    print(f"{method}: mean return {report.mean_return:.1f}{ci} over "
          f"{report.n_episodes} episodes "
          f"(success {report.success_rate:.0%}, crash {report.crash_rate:.0%}, "
          f"timeout {report.timeout_rate:.0%}) -> {out_dir}")
    return 0


def _cmd_compare(args) -> int:
    reports = [load_eval_dir(d) for d in args.dirs]
    rows = compare(reports)
    print(format_comparison(rows))
    out = Path(args.out) if args.out else _out_root() / "comparison.csv"
    write_comparison(out, rows)
    print(f"wrote {out}")
    return 0


def _cmd_replay(args) -> int:
    records = list(read_trace(args.trace))
    problems = verify_trace(records)
    activations = sum(1 for r in records if r.final_activate and r.server_index is not None)
    overrides = sum(1 for r in records if r.overridden)
    cause = records[-1].cause if records else "Running"
    total = records[-1].cumulative_return if records else 0.0
    print(f"{args.trace}: {len(records)} steps, cause {cause}, "
          f"return {total:.3f}, {activations} activations, {overrides} overrides")
    if problems:
        for problem in problems:
            print(f"mismatch: {problem}")
        return 2
    print("replay consistent: rewards and running return re-add exactly")
    return 0


def _cmd_plot(args) -> int:
    if args.plot_command == "trajectory":
        cfg = _load_world(args.config)
        records = list(read_trace(args.trace))
        out = Path(args.out) if args.out else _out_root() / "trajectory.svg"
        render_trajectory(cfg, records, out)
    else:
        curves = [read_curve(path) for path in args.curves]
        baselines = {}
        for item in args.baseline:
            name, sep, value = item.partition("=")
            if not sep or not name:
                raise CliUsageError(f"--baseline expects NAME=VALUE, got {item!r}")
            try:
                baselines[name] = float(value)
            except ValueError:
                raise CliUsageError(f"--baseline value is not a number: {item!r}")
        out = Path(args.out) if args.out else _out_root() / "curves.svg"
        render_curves({args.label: curves}, baselines, out)
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "scenario": _cmd_scenario,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
    "replay": _cmd_replay,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError, ValueError, KeyError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
