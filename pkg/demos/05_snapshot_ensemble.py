"""
Snapshot ensembles for free
===========================

One SGDR run keeps the parameters reached at the end of each period. Those
snapshots sit in different low-rate basins, and averaging their softmax
outputs is an ensemble that cost no extra training.
"""
import tempfile
from pathlib import Path

from sgdr.config import DataConfig, ModelConfig, ScheduleConfig, TrainConfig
from sgdr.ensemble import ensemble_evaluate
from sgdr.model import load_snapshot
from sgdr.trainer import evaluate, run_training, split_dataset

config = TrainConfig(
    schedule=ScheduleConfig(kind="cosine", eta_max=0.05, t0=1, t_mult=2),
    model=ModelConfig(hidden=(16, 16), activation="tanh"),
    data=DataConfig(kind="spirals", per_arm=300, noise=0.15),
    total_epochs=63,
    batch_size=32,
    snapshot_policy="last_m:3",
)

with tempfile.TemporaryDirectory() as tmp:
    result = run_training(config, tmp)
    _, held_out = split_dataset(config)
    files = sorted(Path(tmp).glob("snapshot_*.txt"), key=lambda p: int(p.stem.split("_")[1]))
    print("restarts after epochs", result.restart_epochs)
    for path in files:
        loss, err = evaluate(load_snapshot(path), held_out)
        print(f"  {path.name:16s} loss {loss:.4f}  error {err:.3f}")
    for m in (1, 2, 3):
        loss, err = ensemble_evaluate([str(p) for p in files[-m:]], held_out)
        print(f"last {m} snapshots averaged: loss {loss:.4f}  error {err:.3f}")
