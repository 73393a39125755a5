"""Learning-rate schedules advanced at batch granularity.

Three schedules share one small protocol: a ``lr`` property giving the rate
in effect for the next batch, and ``advance(delta)`` which moves the clock
forward by ``delta`` epochs and returns a :class:`ScheduleEvent`.

* :class:`CosineRestartSchedule` -- cosine annealing with warm restarts.
* :class:`StepDecaySchedule` -- multiply by a fixed factor at milestone epochs.
* :class:`ConstantSchedule` -- a fixed rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

__all__ = [
    "ScheduleEvent",
    "CosineRestartSchedule",
    "StepDecaySchedule",
    "ConstantSchedule",
    "cosine_lr",
    "step_decay_lr",
    "make_schedule",
    "dump_curve",
]

# Relative slack used to decide that an accumulated t_cur has reached t_i.
# Summing 1/steps_per_epoch is inexact in binary, so a boundary that should
# land exactly on t_i can fall a few ulps short.
_BOUNDARY_RTOL = 1e-9


@dataclass(frozen=True)
class ScheduleEvent:
    lr: float
    restarted: bool = False


def cosine_lr(eta_min: float, eta_max: float, t_cur: float, t_i: float) -> float:
    """Cosine-annealed rate at ``t_cur`` epochs into a period of ``t_i`` epochs.

    Decays from ``eta_max`` at ``t_cur == 0`` to ``eta_min`` at ``t_cur == t_i``.
    """
    if not t_i > 0:
        raise ValueError(f"period t_i must be positive, got {t_i}")
    if not 0 <= t_cur <= t_i:
        raise ValueError(f"t_cur={t_cur} outside [0, {t_i}]")
    if eta_min > eta_max:
        raise ValueError(f"eta_min={eta_min} exceeds eta_max={eta_max}")
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + math.cos(math.pi * t_cur / t_i))


def step_decay_lr(eta0: float, drop_factor: float, milestones: Sequence[int], epoch: int) -> float:
    """``eta0 * drop_factor**k`` with ``k`` the number of milestones <= ``epoch``."""
    k = sum(1 for m in milestones if m <= epoch)
    return eta0 * drop_factor**k


@dataclass
class CosineRestartSchedule:
    """Cosine annealing restarted every ``t_i`` epochs, ``t_i = t0 * t_mult**i``.

    ``t_cur`` is a real number of epochs, so it moves in fractional steps of
    ``1 / steps_per_epoch`` when advanced once per batch. Overshoot past a
    period boundary carries into the next period.

    ``restart_decay`` scales ``eta_max`` by ``restart_decay**restart_index``
    (floored at ``eta_min``); the default of 1.0 keeps the range fixed.
    """

    eta_min: float = 0.0
    eta_max: float = 0.05
    t0: float = 10.0
    t_mult: float = 2.0
    restart_decay: float = 1.0
    t_cur: float = field(default=0.0, init=False)
    restart_index: int = field(default=0, init=False)

    kind = "cosine"

    def __post_init__(self):
        if not 0 <= self.eta_min <= self.eta_max:
            raise ValueError(f"need 0 <= eta_min <= eta_max, got {self.eta_min}, {self.eta_max}")
        if not self.t0 > 0:
            raise ValueError(f"t0 must be positive, got {self.t0}")
        if not self.t_mult >= 1:
            raise ValueError(f"t_mult must be >= 1, got {self.t_mult}")
        if not 0 < self.restart_decay <= 1:
            raise ValueError(f"restart_decay must be in (0, 1], got {self.restart_decay}")

    @property
    def t_i(self) -> float:
        return self.t0 * self.t_mult**self.restart_index

    @property
    def current_eta_max(self) -> float:
        return max(self.eta_min, self.eta_max * self.restart_decay**self.restart_index)

    @property
    def lr(self) -> float:
        return cosine_lr(self.eta_min, self.current_eta_max, self.t_cur, self.t_i)

    def advance(self, delta: float) -> ScheduleEvent:
        if not delta > 0:
            raise ValueError(f"delta must be positive, got {delta}")
        t_cur = self.t_cur + delta
        restarted = False
        # A single large delta may cross several short periods.
        while t_cur >= self.t_i * (1.0 - _BOUNDARY_RTOL):
            t_cur = max(0.0, t_cur - self.t_i)
            if t_cur <= self.t_i * _BOUNDARY_RTOL:
                t_cur = 0.0
            self.restart_index += 1
            if self.restart_index > 10_000 or math.isinf(self.t_i):
                raise OverflowError(f"restart_index overflow at {self.restart_index} restarts")
            restarted = True
        self.t_cur = t_cur
        return ScheduleEvent(self.lr, restarted)

    def restart_epochs(self, total_epochs: float) -> List[float]:
        """Cumulative epochs at which restarts fall, up to and including ``total_epochs``."""
        out, k, t = [], 0, 0.0
        while True:
            t += self.t0 * self.t_mult**k
            if t > total_epochs * (1 + _BOUNDARY_RTOL):
                return out
            out.append(t)
            k += 1


@dataclass
class StepDecaySchedule:
    """Piecewise-constant rate dropped by ``drop_factor`` at each milestone epoch.

    The epoch index is the integer part of the elapsed time, so the drop at
    milestone ``m`` takes effect on the first batch after ``m`` full epochs.
    """

    eta0: float = 0.1
    drop_factor: float = 0.2
    milestones: Tuple[int, ...] = (60, 120, 160)
    elapsed: float = field(default=0.0, init=False)

    kind = "step"

    def __post_init__(self):
        self.milestones = tuple(int(m) for m in self.milestones)
        if any(b <= a for a, b in zip(self.milestones, self.milestones[1:])):
            raise ValueError(f"milestones must be strictly increasing, got {list(self.milestones)}")
        if not 0 < self.drop_factor < 1:
            raise ValueError(f"drop_factor must be in (0, 1), got {self.drop_factor}")
        if not self.eta0 >= 0:
            raise ValueError(f"eta0 must be non-negative, got {self.eta0}")

    @property
    def epoch(self) -> int:
        return int(math.floor(self.elapsed * (1 + _BOUNDARY_RTOL)))

    @property
    def lr(self) -> float:
        return step_decay_lr(self.eta0, self.drop_factor, self.milestones, self.epoch)

    def advance(self, delta: float) -> ScheduleEvent:
        if not delta > 0:
            raise ValueError(f"delta must be positive, got {delta}")
        self.elapsed += delta
        return ScheduleEvent(self.lr, False)


@dataclass
class ConstantSchedule:
    value: float = 0.1

    kind = "const"

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise ValueError(f"constant lr must be finite and >= 0, got {self.value}")

    @property
    def lr(self) -> float:
        return self.value

    def advance(self, delta: float) -> ScheduleEvent:
        if not delta > 0:
            raise ValueError(f"delta must be positive, got {delta}")
        return ScheduleEvent(self.value, False)


Schedule = Union[CosineRestartSchedule, StepDecaySchedule, ConstantSchedule]


def make_schedule(kind: str, **params) -> Schedule:
    """Build a fresh schedule by kind name (``cosine``, ``step`` or ``const``).

    Unknown parameters for the chosen kind are ignored so a single flat
    parameter set can describe any schedule.
    """
    if kind == "cosine":
        keys = ("eta_min", "eta_max", "t0", "t_mult", "restart_decay")
        return CosineRestartSchedule(**{k: params[k] for k in keys if params.get(k) is not None})
    if kind == "step":
        keys = ("eta0", "drop_factor", "milestones")
        return StepDecaySchedule(**{k: params[k] for k in keys if params.get(k) is not None})
    if kind == "const":
        value = params.get("value")
        if value is None:
            value = params.get("eta0", params.get("eta_max"))
        return ConstantSchedule() if value is None else ConstantSchedule(value)
    raise ValueError(f"unknown schedule kind {kind!r}; expected cosine, step or const")


def dump_curve(schedule: Schedule, total_epochs: int, steps_per_epoch: int) -> List[Tuple[float, float, bool]]:
    """Per-batch ``(epoch_time, lr, restarted)`` trace of a fresh schedule.

    Row ``k`` is the rate used by batch ``k``, which starts at epoch time
    ``k / steps_per_epoch``. ``restarted`` marks the batch that opens a new
    period, so a boundary landing exactly on ``total_epochs`` is not listed.
    """
    if total_epochs <= 0 or steps_per_epoch <= 0:
        raise ValueError("total_epochs and steps_per_epoch must be positive")
    delta = 1.0 / steps_per_epoch
    rows = []
    restarted = False
    for k in range(total_epochs * steps_per_epoch):
        rows.append((k / steps_per_epoch, schedule.lr, restarted))
        restarted = schedule.advance(delta).restarted
    return rows
