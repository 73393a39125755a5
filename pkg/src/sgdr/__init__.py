"""SGD with warm restarts: cosine-annealing restart schedules, heavy-ball
momentum SGD, snapshot ensembles and a deterministic desk-scale trainer."""

__version__ = "0.1.0"

from .schedule import (  # noqa: E402
    ConstantSchedule,
    CosineRestartSchedule,
    ScheduleEvent,
    StepDecaySchedule,
    cosine_lr,
    dump_curve,
    make_schedule,
    step_decay_lr,
)
from .optimizer import MomentumState, momentum_step, reset_velocity, sgd_step  # noqa: E402
from .model import MlpModel, MlpSpec, backward, finite_diff_grad, forward, init  # noqa: E402
from .data import BatchPlan, Dataset, batches, load_csv, make_blobs, make_spirals, save_csv  # noqa: E402

__all__ = [
    "ConstantSchedule",
    "CosineRestartSchedule",
    "ScheduleEvent",
    "StepDecaySchedule",
    "cosine_lr",
    "dump_curve",
    "make_schedule",
    "step_decay_lr",
    "MomentumState",
    "momentum_step",
    "reset_velocity",
    "sgd_step",
    "MlpModel",
    "MlpSpec",
    "backward",
    "finite_diff_grad",
    "forward",
    "init",
    "BatchPlan",
    "Dataset",
    "batches",
    "load_csv",
    "make_blobs",
    "make_spirals",
    "save_csv",
]
