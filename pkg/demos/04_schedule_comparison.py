"""
Step decay versus warm restarts on two spirals
==============================================

Three seeds of each schedule on the same data, model and budget. Between
restarts SGDR recommends the parameters from the last period end, so the
"recommended" column is the one to read for anytime performance.

Takes a few seconds.
"""
import dataclasses

import numpy as np

from sgdr.compare import compare
from sgdr.config import DataConfig, ModelConfig, ScheduleConfig, TrainConfig

common = dict(
    model=ModelConfig(hidden=(32, 32), activation="relu"),
    data=DataConfig(kind="spirals", num_arms=2, per_arm=500, noise=0.1),
    total_epochs=63,
    batch_size=32,
    snapshot_policy="none",
)
step = TrainConfig(schedule=ScheduleConfig(kind="step", eta0=0.05, drop_factor=0.2, milestones=(30, 45, 55)), **common)
sgdr = dataclasses.replace(step, schedule=ScheduleConfig(kind="cosine", eta_max=0.05, t0=1, t_mult=2))

result = compare(step, sgdr, seeds=[0, 1, 2], names=("step", "sgdr"))

print("epoch  step   sgdr (current)  sgdr (recommended)")
raw = result.median_curve("sgdr", incumbent=False)
rec = result.median_curve("sgdr")
base = result.median_curve("step")
for e in (1, 3, 7, 15, 20, 31, 40, 50, 63):
    print(f"{e:5d}  {base[e - 1]:.3f}  {raw[e - 1]:.3f}           {rec[e - 1]:.3f}")

print(f"\nthreshold (step's median final error): {result.threshold:.3f}")
print("first epoch at or below it, per seed:")
for name in result.names:
    print(f"  {name:5s}", result.first_epochs(name))
print("final errors:", {n: [round(r.final_incumbent_error, 3) for r in result.runs[n]] for n in result.names})
print("median final:", {n: float(np.median([r.final_incumbent_error for r in result.runs[n]])) for n in result.names})
