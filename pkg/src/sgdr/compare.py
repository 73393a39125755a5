"""Side-by-side runs of two schedules over several seeds.

Both configs must agree on everything except the schedule (and snapshot
policy). Curves are medians over seeds, taken per epoch. The recommended
solution's error (the incumbent) is reported next to the raw per-epoch
error, because between restarts SGDR recommends the last period end rather
than the current iterate.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import ConfigError, TrainConfig, config_to_dict
from .trainer import TrainRecord, incumbent_errors, train

__all__ = ["SeedRun", "Comparison", "config_diff", "first_epoch_at_or_below", "compare"]

_FREE_KEYS = ("master_seed", "snapshot_policy")


@dataclass
class SeedRun:
    schedule: str
    seed: int
    errors: List[float]
    incumbent_errors: List[float]

    @property
    def final_error(self) -> float:
        return self.errors[-1]

    @property
    def final_incumbent_error(self) -> float:
        return self.incumbent_errors[-1]


@dataclass
class Comparison:
    names: tuple
    runs: Dict[str, List[SeedRun]]
    threshold: float

    def median_curve(self, name: str, incumbent: bool = True) -> np.ndarray:
        rows = [r.incumbent_errors if incumbent else r.errors for r in self.runs[name]]
        return np.median(np.array(rows), axis=0)

    def first_epochs(self, name: str) -> List[Optional[int]]:
        return [first_epoch_at_or_below(r.incumbent_errors, self.threshold) for r in self.runs[name]]


def config_diff(a: TrainConfig, b: TrainConfig) -> List[str]:
    """Settings that differ between two configs, ignoring schedule, seed and snapshot policy."""
    da, db = config_to_dict(a), config_to_dict(b)
    out = []
    for key in da:
        if key.startswith("schedule.") or key in _FREE_KEYS:
            continue
        if da[key] != db[key]:
            out.append(f"{key}: {da[key]!r} != {db[key]!r}")
    return out


def first_epoch_at_or_below(errors: Sequence[float], threshold: float) -> Optional[int]:
    """1-based epoch of the first error <= ``threshold``, or None."""
    for i, e in enumerate(errors, start=1):
        if e <= threshold + 1e-12:
            return i
    return None


def _run(args) -> SeedRun:
    name, config, seed = args
    cfg = dataclasses.replace(config, master_seed=seed)
    records: List[TrainRecord] = train(cfg).records
    return SeedRun(name, seed, [r.test_error for r in records], incumbent_errors(records))


def compare(
    baseline: TrainConfig,
    candidate: TrainConfig,
    seeds: Sequence[int],
    threshold: Optional[float] = None,
    names: tuple = ("baseline", "sgdr"),
    jobs: int = 1,
) -> Comparison:
    """Train both configs for each seed.

    ``threshold`` defaults to the baseline's median final incumbent error,
    which turns "first epoch at or below threshold" into "how early does each
    schedule match the baseline's end result".
    """
    diff = config_diff(baseline, candidate)
    if diff:
        raise ConfigError("configs differ outside the schedule: " + "; ".join(diff))
    if baseline.total_epochs != candidate.total_epochs:
        raise ConfigError("configs differ in total_epochs")
    if not seeds:
        raise ConfigError("need at least one seed")
    tasks = [(names[i], cfg, int(s)) for s in seeds for i, cfg in enumerate((baseline, candidate))]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run, tasks))
    else:
        results = [_run(t) for t in tasks]
    runs = {n: sorted((r for r in results if r.schedule == n), key=lambda r: r.seed) for n in names}
    if threshold is None:
        threshold = float(np.median([r.final_incumbent_error for r in runs[names[0]]]))
    return Comparison(names, runs, threshold)
