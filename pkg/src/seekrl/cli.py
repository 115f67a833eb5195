"""Command-line entry point.

Subcommands: train, eval, compare, export, plot, parity. Every command is a
pure function of (config file, input files, seeds): reruns write byte-equal
outputs, so checksums of artifacts are meaningful.

Exit codes: 0 success, 1 configuration error, 2 I/O or input-format error,
3 failed parity/footprint check.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import dqn, evaluation, parity, plotting, tinyinfer
from .baselines import FsmPolicy, RandomPolicy
from .blob import BlobError
from .config import KNOWN_POLICIES, ConfigError, RunConfig
from .dqn import DqnPolicy
from .env import TrajectoryStep, make_episode_factory, run_episode
from .tinyinfer import KernelError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_CHECK = 3

FOOTPRINT_BUDGET_BYTES = 20_992

TRAJECTORY_COLUMNS = list(TrajectoryStep._fields)


class TrajectoryFormatError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A002 - argparse API
        raise ConfigError(message)


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig.default()
    if not Path(path).exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return RunConfig.from_file(path)


def _out_dir(args, rc: RunConfig) -> Path:
    out = Path(args.out if args.out else rc.io["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _build_policy(name: str, rc: RunConfig, blob_path: str | None):
    if name == "dqn":
        if blob_path is None:
            raise ConfigError("policy 'dqn' needs --blob pointing at trained weights")
        return DqnPolicy(dqn.load(blob_path))
    if name == "fsm":
        return FsmPolicy(
            front_threshold=rc.eval["fsm_front_threshold"],
            turn_min_deg=rc.eval["fsm_turn_min_deg"],
            turn_max_deg=rc.eval["fsm_turn_max_deg"],
            yaw_rate_deg=rc.env["yaw_rate_deg"],
            dt=rc.env["dt"],
            laser_max_range=rc.env["laser_max_range"],
            normalized_lasers=rc.env["normalize_lasers"],
        )
    if name == "random":
        return RandomPolicy()
    raise ConfigError(f"unknown policy {name!r} (choose from {KNOWN_POLICIES})")


def cmd_train(args) -> int:
    rc = _load_config(args.config)
    train_config = rc.train_config()
    if args.steps is not None:
        train_config = replace(train_config, total_steps=args.steps)
    if args.seed is not None:
        train_config = replace(train_config, seed=args.seed)
    template = rc.episode_template()
    env_factory = make_episode_factory(
        template, rc.train["episode_seed_base"], rc.train["obstacle_counts"]
    )
    eval_factory = make_episode_factory(
        template, rc.train["snapshot_seed_base"], rc.train["snapshot_obstacle_counts"]
    )
    verbosity = rc.io["verbosity"]

    def progress(stats, epsilon):
        if verbosity >= 1 and stats.episode % 50 == 0:
            print(
                f"episode {stats.episode:5d}  steps {stats.steps:3d}  "
                f"outcome {stats.outcome.value:<9s}  return {stats.total_reward:9.1f}  "
                f"rolling_success {stats.rolling_success:.3f}  "
                f"rolling_steps {stats.rolling_mean_steps:6.1f}  epsilon {epsilon:.3f}"
            )

    net, log = dqn.train(env_factory, train_config, eval_factory, progress)

    out = _out_dir(args, rc)
    blob_path = out / "policy.blob"
    dqn.save(net, blob_path)
    log.to_csv(out / "trainlog.csv")
    print(f"wrote {blob_path}")
    print(f"wrote {out / 'trainlog.csv'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    rc = _load_config(args.config)
    policy = _build_policy(args.policy, rc, args.blob)
    n = args.episodes if args.episodes is not None else rc.eval["episodes"]
    base = args.seed_base if args.seed_base is not None else rc.eval["seed_base"]
    records, summary = evaluation.evaluate(
        policy, n, rc.episode_template(), base,
        obstacle_counts=rc.eval["obstacle_counts"], workers=args.workers,
    )
    out = _out_dir(args, rc)
    records_path = out / f"records_{args.policy}.csv"
    evaluation.records_to_csv(records, records_path)
    print(evaluation.format_comparison([(args.policy, summary)]))
    print(f"wrote {records_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    rc = _load_config(args.config)
    names = args.policies.split(",") if args.policies else list(rc.eval["policies"])
    names = [n.strip() for n in names if n.strip()]
    if len(names) < 2:
        raise ConfigError("compare needs at least two policies")
    policies = [(name, _build_policy(name, rc, args.blob)) for name in names]
    n = args.episodes if args.episodes is not None else rc.eval["episodes"]
    base = args.seed_base if args.seed_base is not None else rc.eval["seed_base"]
    rows = evaluation.compare(
        policies, n, rc.episode_template(), base,
        obstacle_counts=rc.eval["obstacle_counts"], workers=args.workers,
    )
    print(evaluation.format_comparison(rows))
    out = _out_dir(args, rc)
    csv_path = out / "comparison.csv"
    evaluation.comparison_to_csv(rows, csv_path)
    print(f"wrote {csv_path}")
    return EXIT_OK


def _write_trajectory(rows, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            writer.writerow(
                [row.step, repr(row.x), repr(row.y), repr(row.heading), row.action,
                 repr(row.reward), repr(row.c), repr(row.c_f), repr(row.s1), repr(row.s2),
                 repr(row.l_front), repr(row.l_right), repr(row.l_back), repr(row.l_left),
                 repr(row.distance)]
            )


def read_trajectory(path) -> list[dict]:
    """Parse an exported trajectory log; report malformed rows by number."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != TRAJECTORY_COLUMNS:
            raise TrajectoryFormatError(f"{path}: missing or wrong header row")
        for i, row in enumerate(reader, start=2):
            try:
                rows.append(
                    {
                        "step": int(row["step"]),
                        "x": float(row["x"]),
                        "y": float(row["y"]),
                        "action": int(row["action"]),
                        "reward": float(row["reward"]),
                        "distance": float(row["distance"]),
                    }
                )
            except (TypeError, ValueError, KeyError) as exc:
                raise TrajectoryFormatError(f"{path}: malformed row {i}: {exc}") from exc
    if not rows:
        raise TrajectoryFormatError(f"{path}: log contains no steps")
    return rows


def cmd_export(args) -> int:
    rc = _load_config(args.config)
    policy = _build_policy(args.policy, rc, args.blob)
    n = args.episodes if args.episodes is not None else rc.eval["export_episodes"]
    base = args.seed_base if args.seed_base is not None else rc.eval["seed_base"]
    factory = make_episode_factory(
        rc.episode_template(), base, rc.eval["obstacle_counts"]
    )
    out = _out_dir(args, rc)
    for i in range(n):
        record = run_episode(policy, factory(i), collect_trajectory=True)
        traj_path = out / f"episode_{i:05d}.csv"
        scene_path = out / f"episode_{i:05d}.scene.json"
        _write_trajectory(record.trajectory, traj_path)
        with open(scene_path, "w") as fh:
            json.dump(record.scene, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {traj_path} ({record.outcome.value}, {record.steps} steps)")
    return EXIT_OK


def _sidecar_scene(traj_path: Path) -> Path:
    name = traj_path.name
    if name.endswith(".csv"):
        name = name[: -len(".csv")]
    return traj_path.with_name(name + ".scene.json")


def cmd_plot(args) -> int:
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for traj in args.trajectories:
        traj_path = Path(traj)
        rows = read_trajectory(traj_path)
        scene_path = Path(args.scene) if args.scene else _sidecar_scene(traj_path)
        if not scene_path.exists():
            raise FileNotFoundError(f"scene file not found: {scene_path}")
        with open(scene_path) as fh:
            scene = json.load(fh)
        svg = plotting.render_trajectory_svg(scene, [(r["x"], r["y"]) for r in rows])
        svg_path = (out or traj_path.parent) / (traj_path.stem + ".svg")
        with open(svg_path, "w") as fh:
            fh.write(svg)
        print(f"wrote {svg_path}")
    return EXIT_OK


def cmd_parity(args) -> int:
    net = dqn.load(args.blob)
    ctx = tinyinfer.load_file(args.blob)
    report = parity.run_parity(net, ctx, args.cases, args.seed)
    fp = tinyinfer.footprint(ctx)
    fp_ok = fp < FOOTPRINT_BUDGET_BYTES
    print(f"cases:               {report.cases}")
    print(f"max Q deviation:     {report.max_deviation:.3e}")
    print(f"off-tie cases:       {report.off_tie_cases}")
    print(f"off-tie mismatches:  {report.off_tie_mismatches}")
    print(f"footprint bytes:     {fp} (budget {FOOTPRINT_BUDGET_BYTES})")
    if args.throughput:
        rate = tinyinfer.measure_throughput(ctx)
        print(f"throughput:          {rate:,.0f} calls/s")
    ok = report.passed and fp_ok
    print(f"parity: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK


def _build_parser() -> _Parser:
    parser = _Parser(prog="seekrl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=False):
        p.add_argument("--config", help="YAML run configuration (defaults apply if omitted)")
        p.add_argument("--out", help="output directory (default: io.out_dir)")
        if workers:
            p.add_argument("--workers", type=int, default=1, help="parallel evaluation workers")

    p = sub.add_parser("train", help="train the policy and write weights plus a training log")
    common(p)
    p.add_argument("--steps", type=int, help="override train.total_steps")
    p.add_argument("--seed", type=int, help="override train.seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate one policy over seeded episodes")
    common(p, workers=True)
    p.add_argument("--policy", required=True, choices=KNOWN_POLICIES)
    p.add_argument("--blob", help="trained weight file (required for dqn)")
    p.add_argument("--episodes", type=int, help="override eval.episodes")
    p.add_argument("--seed-base", type=int, help="override eval.seed_base")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="paired-seed comparison table across policies")
    common(p, workers=True)
    p.add_argument("--policies", help="comma-separated subset (default: eval.policies)")
    p.add_argument("--blob", help="trained weight file (required when dqn is listed)")
    p.add_argument("--episodes", type=int, help="override eval.episodes")
    p.add_argument("--seed-base", type=int, help="override eval.seed_base")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export", help="roll episodes and write trajectory logs plus scene files")
    common(p)
    p.add_argument("--policy", required=True, choices=KNOWN_POLICIES)
    p.add_argument("--blob", help="trained weight file (required for dqn)")
    p.add_argument("--episodes", type=int, help="number of episodes to export")
    p.add_argument("--seed-base", type=int, help="override eval.seed_base")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("plot", help="render exported trajectories to SVG")
    p.add_argument("trajectories", nargs="+", help="trajectory CSV files from export")
    p.add_argument("--scene", help="explicit scene JSON (default: per-file sidecar)")
    p.add_argument("--out", help="output directory (default: next to each input)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("parity", help="check kernel/trainer agreement and the memory budget")
    p.add_argument("--blob", required=True, help="trained weight file")
    p.add_argument("--cases", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--throughput", action="store_true",
        help="also measure infer() throughput (timing output varies between runs)",
    )
    p.set_defaults(func=cmd_parity)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlobError, KernelError, TrajectoryFormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
