"""Deterministic training loop with warm restarts, snapshots and incumbents.

Per batch the loop takes one momentum step at the schedule's current rate and
then advances the schedule by ``1 / batches_per_epoch``. When that advance
reports a restart, the parameters as they stand (trained at the bottom of the
annealing curve) become a snapshot and the new incumbent.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import __version__
from .config import TrainConfig, config_to_dict, derive_seed, snapshot_keep
from .data import BatchPlan, Dataset, batches, train_test_split
from .model import MlpModel, MlpSpec, backward, forward, init, loss, save_snapshot
from .optimizer import MomentumState, momentum_step, reset_velocity

__all__ = [
    "DivergenceError",
    "TrainRecord",
    "Snapshot",
    "Incumbent",
    "TrainResult",
    "Trainer",
    "evaluate",
    "split_dataset",
    "train",
    "run_training",
    "incumbent_errors",
    "RECORD_FIELDS",
    "float_precision",
]

RECORD_FIELDS = (
    "epoch",
    "mean_lr",
    "train_data_loss",
    "train_reg_loss",
    "test_loss",
    "test_error",
    "restarted_this_epoch",
    "is_incumbent_update",
)


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, batch: int, value: float):
        super().__init__(f"non-finite training loss {value} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class TrainRecord:
    epoch: int
    mean_lr: float
    train_data_loss: float
    train_reg_loss: float
    test_loss: float
    test_error: float
    restarted_this_epoch: bool
    is_incumbent_update: bool


@dataclass(frozen=True)
class Snapshot:
    params: np.ndarray
    epoch: int
    restart_index: int
    partial: bool = False


@dataclass(frozen=True)
class Incumbent:
    params: np.ndarray
    epoch: int


@dataclass
class TrainResult:
    records: List[TrainRecord]
    snapshots: List[Snapshot]
    incumbent: Incumbent
    spec: MlpSpec
    restart_epochs: List[int] = field(default_factory=list)
    partial: bool = False


def float_precision() -> int:
    raw = os.environ.get("WRB_OUT_PRECISION", "")
    if not raw:
        return 12
    try:
        p = int(raw)
    except ValueError:
        raise ValueError(f"WRB_OUT_PRECISION must be an integer, got {raw!r}") from None
    if not 1 <= p <= 17:
        raise ValueError(f"WRB_OUT_PRECISION must be in [1, 17], got {p}")
    return p


def evaluate(model: MlpModel, dataset: Dataset) -> Tuple[float, float]:
    """Mean cross-entropy and argmax error rate; ties go to the lowest class."""
    if dataset.num_classes > model.spec.layer_sizes[-1]:
        raise ValueError(f"dataset has {dataset.num_classes} classes but model outputs {model.spec.layer_sizes[-1]}")
    probs = forward(model, dataset.inputs)
    err = float(np.mean(np.argmax(probs, axis=1) != dataset.labels))
    return loss(model, dataset.inputs, dataset.labels), err


class Trainer:
    """One SGD run, stepped an epoch at a time.

    ``recommend`` gives the latest parameters until the first restart and
    afterwards the parameters saved at the most recent period end. It never
    looks at held-out metrics.
    """

    def __init__(self, config: TrainConfig, train_set: Dataset, test_set: Dataset):
        self.config = config
        self.train_set = train_set
        self.test_set = test_set
        sizes = (train_set.dim, *config.model.hidden, max(train_set.num_classes, test_set.num_classes))
        self.spec = MlpSpec(sizes, config.model.activation, derive_seed(config.master_seed, 1))
        self.model = init(self.spec)
        opt = config.optimizer
        self.state = MomentumState(self.model.params.size, opt.momentum, opt.weight_decay, opt.dampening)
        self.schedule = config.schedule.build()
        self.batch_seed = derive_seed(config.master_seed, 2)
        self.batches_per_epoch = math.ceil(len(train_set) / config.batch_size)
        self.keep = snapshot_keep(config.snapshot_policy)
        self.epoch = 0
        self.elapsed = 0.0
        self.records: List[TrainRecord] = []
        self.snapshots: List[Snapshot] = []
        self.restart_epochs: List[int] = []
        self._boundary: Optional[Incumbent] = None
        self._restarts = 0

    def _capture(self, partial: bool = False) -> None:
        if self.keep == 0:
            return
        self.snapshots.append(Snapshot(self.model.params.copy(), self.epoch, self._restarts, partial))
        # last_m counts period-end snapshots only; a partial terminal one rides along.
        if not partial and self.keep is not None and len(self.snapshots) > self.keep:
            del self.snapshots[0]

    def run_epoch(self) -> TrainRecord:
        cfg = self.config
        self.epoch += 1
        plan = BatchPlan(min(cfg.batch_size, len(self.train_set)), self.batch_seed, self.epoch - 1)
        delta = 1.0 / self.batches_per_epoch
        wd = cfg.optimizer.weight_decay
        lr_sum = data_sum = reg_sum = 0.0
        seen = 0
        restarted_now = False
        for b, (xb, yb) in enumerate(batches(self.train_set, plan)):
            lr = self.schedule.lr
            report, grad = backward(self.model, xb, yb, wd)
            if not (math.isfinite(report.data_loss) and math.isfinite(report.reg_loss)):
                raise DivergenceError(self.epoch, b, report.data_loss)
            params = momentum_step(self.model.params, grad, self.state, lr)
            if not np.all(np.isfinite(params)):
                raise DivergenceError(self.epoch, b, float("nan"))
            self.model.params = params
            lr_sum += lr
            data_sum += report.data_loss * len(yb)
            reg_sum += report.reg_loss * len(yb)
            seen += len(yb)
            # Time is recomputed from integer counts so an epoch advances it by exactly 1.
            self.elapsed = (self.epoch - 1) + (b + 1) / self.batches_per_epoch
            if self.schedule.advance(delta).restarted:
                restarted_now = True
                self._restarts += 1
                self.restart_epochs.append(self.epoch)
                self._capture()
                self._boundary = Incumbent(self.model.params.copy(), self.epoch)
                if cfg.reset_velocity_on_restart:
                    reset_velocity(self.state)
        test_loss, test_error = evaluate(self.model, self.test_set)
        rec = TrainRecord(
            epoch=self.epoch,
            mean_lr=lr_sum / self.batches_per_epoch,
            train_data_loss=data_sum / seen,
            train_reg_loss=reg_sum / seen,
            test_loss=test_loss,
            test_error=test_error,
            restarted_this_epoch=restarted_now,
            is_incumbent_update=self._boundary is None or restarted_now,
        )
        self.records.append(rec)
        return rec

    def recommend(self) -> Incumbent:
        if self.epoch == 0:
            raise RuntimeError("recommend called before any epoch was trained")
        if self._boundary is None:
            return Incumbent(self.model.params.copy(), self.epoch)
        return self._boundary

    def finish(self) -> bool:
        """Take the terminal snapshot; returns True if the run ended mid-period.

        Schedules without restarts treat the whole budget as one period, so
        their terminal snapshot is complete. A mid-period terminal snapshot
        does not move the incumbent.
        """
        if self.restart_epochs and self.restart_epochs[-1] == self.epoch:
            return False
        partial = self.schedule.kind == "cosine"
        self._capture(partial=partial)
        return partial


def split_dataset(config: TrainConfig) -> Tuple[Dataset, Dataset]:
    """The ``(train, held_out)`` pair a run of ``config`` uses."""
    dataset = config.data.load(config.master_seed)
    return train_test_split(dataset, config.data.test_fraction, derive_seed(config.master_seed, 4))


def train(
    config: TrainConfig,
    on_record: Optional[Callable[[TrainRecord], None]] = None,
    datasets: Optional[Tuple[Dataset, Dataset]] = None,
) -> TrainResult:
    """Run ``config`` to completion and return records, snapshots and the incumbent.

    ``on_record`` is called after every epoch, so records written through it
    survive a :class:`DivergenceError`.
    """
    train_set, test_set = datasets if datasets is not None else split_dataset(config)
    trainer = Trainer(config, train_set, test_set)
    for _ in range(config.total_epochs):
        rec = trainer.run_epoch()
        if on_record is not None:
            on_record(rec)
    partial = trainer.finish()
    return TrainResult(
        trainer.records, trainer.snapshots, trainer.recommend(), trainer.spec, trainer.restart_epochs, partial
    )


def _fmt(value, precision: int) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.{precision}g}"


def record_row(rec: TrainRecord, precision: int) -> List[str]:
    return [_fmt(getattr(rec, name), precision) for name in RECORD_FIELDS]


def read_records(path) -> List[TrainRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append(
            TrainRecord(
                epoch=int(r["epoch"]),
                mean_lr=float(r["mean_lr"]),
                train_data_loss=float(r["train_data_loss"]),
                train_reg_loss=float(r["train_reg_loss"]),
                test_loss=float(r["test_loss"]),
                test_error=float(r["test_error"]),
                restarted_this_epoch=r["restarted_this_epoch"] == "1",
                is_incumbent_update=r["is_incumbent_update"] == "1",
            )
        )
    return out


def incumbent_errors(records: List[TrainRecord]) -> List[float]:
    """Held-out error of the recommended solution after each epoch.

    Between restarts this repeats the error recorded at the last period end.
    """
    out, current = [], None
    for rec in records:
        if rec.is_incumbent_update:
            current = rec.test_error
        out.append(current)
    return out


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_training(config: TrainConfig, out_dir) -> TrainResult:
    """Train and write ``records.csv``, snapshots, ``incumbent.txt`` and ``meta.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    precision = float_precision()
    started = time.time()
    records_path = out_dir / "records.csv"
    with open(records_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_FIELDS)
        fh.flush()

        def on_record(rec):
            writer.writerow(record_row(rec, precision))
            fh.flush()

        result = train(config, on_record)

    files = ["records.csv"]
    for snap in result.snapshots:
        name = f"snapshot_{snap.epoch}.txt"
        save_snapshot(out_dir / name, result.spec, snap.params)
        files.append(name)
    save_snapshot(out_dir / "incumbent.txt", result.spec, result.incumbent.params)
    files.append("incumbent.txt")
    ended = time.time()
    meta = {
        "artifact_version": __version__,
        "config": config_to_dict(config),
        "layer_sizes": list(result.spec.layer_sizes),
        "start_time": started,
        "end_time": ended,
        "wall_time_seconds": ended - started,
        "restart_epochs": result.restart_epochs,
        "snapshots": [
            {"file": f"snapshot_{s.epoch}.txt", "epoch": s.epoch, "restart_index": s.restart_index, "partial": s.partial}
            for s in result.snapshots
        ],
        "incumbent_epoch": result.incumbent.epoch,
        "partial": result.partial,
        "files": files + ["meta.json"],
    }
    _atomic_write(out_dir / "meta.json", json.dumps(meta, indent=2, default=list) + "\n")
    return result
