"""Batch evaluation and navigation metrics.

Policies are scored over a common block of episode seeds (paired comparison:
every policy sees the identical arenas, source positions, and sensor-noise
streams), and summarized by success rate, mean steps and traveled distance
over the successful runs, path length over all runs, and SPL:

    SPL = (1/N) * sum_i  S_i * (l_i - 1) / max(p_i, l_i - 1)

where l_i is the straight-line start-to-source distance, p_i the traveled
path length, and S_i the success indicator. The 1 m subtraction accounts for
episodes terminating at the success radius rather than at the source itself;
l is never obstacle-aware, which makes the metric a conservative estimate.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .env import EpisodeConfig, Policy, RunRecord, make_episode_factory, run_episode


@dataclass(frozen=True, slots=True)
class Summary:
    n: int
    success_rate: float
    mean_steps: float
    mean_distance: float
    spl: float
    mean_path_all: float


def spl(records: Sequence[RunRecord]) -> float:
    """Success weighted by normalized inverse path length, in [0, 1]."""
    if not records:
        raise ValueError("cannot compute SPL over zero records")
    total = 0.0
    for r in records:
        if r.shortest_path <= 1.0:
            raise ValueError(
                f"degenerate spawn: straight-line distance {r.shortest_path} is not > 1 m"
            )
        if r.success:
            ideal = r.shortest_path - 1.0
            total += ideal / max(r.path_length, ideal)
    return total / len(records)


def summarize(records: Sequence[RunRecord]) -> Summary:
    if not records:
        raise ValueError("cannot summarize zero records")
    n = len(records)
    wins = [r for r in records if r.success]
    mean_steps = sum(r.steps for r in wins) / len(wins) if wins else math.nan
    mean_distance = sum(r.path_length for r in wins) / len(wins) if wins else math.nan
    return Summary(
        n=n,
        success_rate=len(wins) / n,
        mean_steps=mean_steps,
        mean_distance=mean_distance,
        spl=spl(records),
        mean_path_all=sum(r.path_length for r in records) / n,
    )


def _run_one(task: tuple[Policy, EpisodeConfig]) -> RunRecord:
    policy, config = task
    return run_episode(policy, config)


def evaluate(
    policy: Policy,
    n_episodes: int,
    template: EpisodeConfig,
    base_seed: int,
    obstacle_counts: Sequence[int] | None = None,
    workers: int = 1,
) -> tuple[list[RunRecord], Summary]:
    """Score a policy over episodes seeded base_seed .. base_seed + n - 1.

    Episode i uses obstacle_counts[i % len] when counts are given, so a
    (0, 3) pair alternates empty and lightly cluttered rooms. Results are
    reduced in seed order regardless of worker count.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be at least 1")
    factory = make_episode_factory(template, base_seed, obstacle_counts)
    configs = [factory(i) for i in range(n_episodes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, [(policy, c) for c in configs], chunksize=8))
    else:
        records = [run_episode(policy, c) for c in configs]
    return records, summarize(records)


def compare(
    policies: Sequence[tuple[str, Policy]],
    n_episodes: int,
    template: EpisodeConfig,
    base_seed: int,
    obstacle_counts: Sequence[int] | None = None,
    workers: int = 1,
) -> list[tuple[str, Summary]]:
    """Evaluate several policies on the identical seed block."""
    if len(policies) < 2:
        raise ValueError("compare needs at least two policies")
    rows = []
    for name, policy in policies:
        _, summary = evaluate(policy, n_episodes, template, base_seed, obstacle_counts, workers)
        rows.append((name, summary))
    return rows


def _fmt(value: float, digits: int = 3) -> str:
    if math.isnan(value):
        return "-"
    return f"{value:.{digits}f}"


def format_comparison(rows: Iterable[tuple[str, Summary]]) -> str:
    header = f"{'policy':<10} {'n':>5} {'success':>8} {'steps':>8} {'distance':>9} {'SPL':>6} {'path(all)':>10}"
    lines = [header, "-" * len(header)]
    for name, s in rows:
        lines.append(
            f"{name:<10} {s.n:>5d} {s.success_rate:>8.3f} {_fmt(s.mean_steps, 2):>8} "
            f"{_fmt(s.mean_distance, 2):>9} {s.spl:>6.3f} {s.mean_path_all:>10.2f}"
        )
    return "\n".join(lines)


def comparison_to_csv(rows: Iterable[tuple[str, Summary]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["policy", "n", "success_rate", "mean_steps", "mean_distance", "spl", "mean_path_all"]
        )
        for name, s in rows:
            writer.writerow(
                [name, s.n, repr(s.success_rate), repr(s.mean_steps),
                 repr(s.mean_distance), repr(s.spl), repr(s.mean_path_all)]
            )


def records_to_csv(records: Sequence[RunRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["seed", "outcome", "success", "steps", "path_length", "shortest_path", "total_reward"]
        )
        for r in records:
            writer.writerow(
                [r.seed, r.outcome.value, int(r.success), r.steps,
                 repr(r.path_length), repr(r.shortest_path), repr(r.total_reward)]
            )
