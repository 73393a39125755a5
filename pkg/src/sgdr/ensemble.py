"""Snapshot ensembles: uniform averages of member softmax outputs.

File-backed members are summed in lexicographic path order so results do not
depend on the order in which paths were given.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from .data import Dataset
from .model import MlpModel, forward, load_snapshot

__all__ = [
    "EnsembleSpec",
    "load_members",
    "ensemble_predict",
    "ensemble_evaluate",
    "probability_metrics",
    "sweep",
]

Member = Union[str, Path, MlpModel]


@dataclass(frozen=True)
class EnsembleSpec:
    members: Tuple[str, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        object.__setattr__(self, "members", tuple(sorted(str(m) for m in self.members)))


def _check_compatible(models: Sequence[MlpModel], names: Sequence[str]) -> None:
    ref = models[0].spec
    for model, name in zip(models, names):
        s = model.spec
        if s.layer_sizes != ref.layer_sizes or s.activation != ref.activation:
            raise ValueError(
                f"incompatible ensemble member {name}: {list(s.layer_sizes)} {s.activation} "
                f"vs {list(ref.layer_sizes)} {ref.activation} in {names[0]}"
            )


def load_members(spec: Union[EnsembleSpec, Sequence[Member]]) -> List[MlpModel]:
    """Resolve members to models; paths are loaded in sorted order, models kept in given order."""
    if isinstance(spec, EnsembleSpec):
        items: List[Member] = list(spec.members)
    else:
        items = list(spec)
        if not items:
            raise ValueError("an ensemble needs at least one member")
        if all(not isinstance(m, MlpModel) for m in items):
            items = sorted(items, key=str)
    models = [m if isinstance(m, MlpModel) else load_snapshot(m) for m in items]
    names = [f"member {i}" if isinstance(m, MlpModel) else str(m) for i, m in enumerate(items)]
    _check_compatible(models, names)
    return models


def ensemble_predict(spec: Union[EnsembleSpec, Sequence[Member]], inputs) -> np.ndarray:
    """Row-wise arithmetic mean of member class probabilities."""
    models = load_members(spec)
    total = forward(models[0], inputs)
    for model in models[1:]:
        total = total + forward(model, inputs)
    return total / len(models)


def probability_metrics(probs: np.ndarray, labels) -> Tuple[float, float]:
    """Cross-entropy of given probabilities and argmax error (lowest-index tie-break)."""
    labels = np.asarray(labels)
    p_true = probs[np.arange(labels.size), labels]
    ce = float(-np.mean(np.log(np.maximum(p_true, np.finfo(np.float64).tiny))))
    err = float(np.mean(np.argmax(probs, axis=1) != labels))
    return ce, err


def ensemble_evaluate(spec: Union[EnsembleSpec, Sequence[Member]], dataset: Dataset) -> Tuple[float, float]:
    models = load_members(spec)
    if dataset.num_classes > models[0].spec.layer_sizes[-1]:
        raise ValueError(f"dataset has {dataset.num_classes} classes but members output {models[0].spec.layer_sizes[-1]}")
    return probability_metrics(ensemble_predict(models, dataset.inputs), dataset.labels)


def sweep(
    runs: Sequence[Sequence[Member]],
    dataset: Dataset,
    n_values: Sequence[int] = (1, 2, 3, 4),
    m_values: Sequence[int] = (1, 2, 3),
) -> List[Tuple[int, int, int, float, float]]:
    """Error table over ensembles of the first N runs with each run's last M snapshots.

    ``runs[i]`` lists one run's snapshots in chronological order. Returns rows
    ``(N, M, n_members, loss, error)``; combinations needing more runs or
    snapshots than available are skipped.
    """
    loaded = [load_members(run) for run in runs]
    rows = []
    for n in n_values:
        if n > len(loaded):
            continue
        for m in m_values:
            if any(m > len(run) for run in loaded[:n]):
                continue
            members = [model for run in loaded[:n] for model in run[-m:]]
            ce, err = ensemble_evaluate(members, dataset)
            rows.append((n, m, len(members), ce, err))
    return rows
