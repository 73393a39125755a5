"""Synthetic classification datasets, CSV ingestion and seeded mini-batches."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Tuple

import numpy as np

__all__ = [
    "Dataset",
    "BatchPlan",
    "make_blobs",
    "make_spirals",
    "batches",
    "epoch_permutation",
    "train_test_split",
    "load_csv",
    "save_csv",
]


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.asarray(self.labels).astype(np.int64)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)
        if x.shape[0] == 0:
            raise ValueError("dataset is empty")
        if y.shape != (x.shape[0],):
            raise ValueError(f"{x.shape[0]} inputs but labels of shape {y.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("dataset inputs contain NaN or Inf")
        if y.min() < 0 or y.max() >= self.num_classes:
            raise ValueError(f"labels must lie in [0, {self.num_classes})")

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.labels[idx], self.num_classes)


@dataclass(frozen=True)
class BatchPlan:
    batch_size: int = 128
    seed: int = 0
    epoch_index: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def make_blobs(num_classes: int, per_class: int, dim: int = 2, spread: float = 1.0, seed: int = 0) -> Dataset:
    """Isotropic Gaussian clusters around centers drawn from U(-10, 10)^dim."""
    if min(num_classes, per_class, dim) < 1 or spread < 0:
        raise ValueError("num_classes, per_class and dim must be positive and spread non-negative")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-10.0, 10.0, size=(num_classes, dim))
    labels = np.repeat(np.arange(num_classes), per_class)
    inputs = centers[labels] + spread * rng.standard_normal((labels.size, dim))
    return Dataset(inputs, labels, num_classes)


def make_spirals(
    num_arms: int = 2,
    per_arm: int = 500,
    noise: float = 0.1,
    seed: int = 0,
    turns: float = 1.0,
    scale: float = 2.0,
) -> Dataset:
    """Interleaved 2-D spiral arms, one class per arm.

    Points sit at radius ``r`` in (0, 1], area-uniform, and at angle
    ``2*pi*turns*r`` plus the arm's phase offset ``2*pi*k/num_arms``. ``noise``
    is the standard deviation of isotropic Gaussian jitter in those unit-radius
    coordinates; the result is then multiplied by ``scale`` so features have
    roughly unit variance. With two arms, one turn and ``noise=0.1`` the arms
    overlap slightly (about 1-2% irreducible error).
    """
    if num_arms < 2:
        raise ValueError(f"need at least 2 arms, got {num_arms}")
    if per_arm < 1 or noise < 0 or turns <= 0 or scale <= 0:
        raise ValueError("per_arm, turns and scale must be positive and noise non-negative")
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for k in range(num_arms):
        r = np.sqrt(rng.uniform(0.0025, 1.0, size=per_arm))
        theta = 2 * np.pi * turns * r + 2 * np.pi * k / num_arms
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        xs.append(scale * (pts + noise * rng.standard_normal(pts.shape)))
        ys.append(np.full(per_arm, k))
    return Dataset(np.concatenate(xs), np.concatenate(ys), num_arms)


def epoch_permutation(n: int, seed: int, epoch_index: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(epoch_index)]))
    return rng.permutation(n)


def batches(dataset: Dataset, plan: BatchPlan) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Yield ``ceil(N / batch_size)`` batches of a per-epoch seeded permutation.

    The final short batch is kept.
    """
    n = len(dataset)
    if plan.batch_size > n:
        raise ValueError(f"batch_size {plan.batch_size} exceeds dataset size {n}")
    perm = epoch_permutation(n, plan.seed, plan.epoch_index)
    for start in range(0, n, plan.batch_size):
        idx = perm[start : start + plan.batch_size]
        yield dataset.inputs[idx], dataset.labels[idx]


def train_test_split(dataset: Dataset, test_fraction: float = 0.2, seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Seeded split holding out ``round(test_fraction * N)`` samples."""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(dataset)
    n_test = int(round(test_fraction * n))
    if n_test < 1 or n_test >= n:
        raise ValueError(f"cannot hold out {n_test} of {n} samples")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5917]))
    perm = rng.permutation(n)
    return dataset.subset(np.sort(perm[n_test:])), dataset.subset(np.sort(perm[:n_test]))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(path) -> Dataset:
    """Read rows of feature columns followed by an integer label column.

    A first row that is not entirely numeric is treated as a header.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0][1])
    if width < 2:
        raise ValueError(f"{path}: line {rows[0][0]}: need at least one feature and a label")
    feats, labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise ValueError(f"{path}: line {lineno}: expected {width} columns, got {len(row)}")
        try:
            values = [float(c) for c in row[:-1]]
            label_f = float(row[-1])
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: non-numeric value") from None
        if label_f != int(label_f) or label_f < 0:
            raise ValueError(f"{path}: line {lineno}: label {row[-1]!r} is not a non-negative integer")
        feats.append(values)
        labels.append(int(label_f))
    num_classes = max(labels) + 1
    if num_classes < 2:
        raise ValueError(f"{path}: need >= 2 classes, found labels only in [0, {num_classes})")
    return Dataset(np.array(feats), np.array(labels), num_classes)


def save_csv(dataset: Dataset, path, header: bool = True) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{j}" for j in range(dataset.dim)] + ["label"])
        for row, label in zip(dataset.inputs, dataset.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    return path
