"""Fully-connected softmax classifier with exact gradients.

Parameters live in one flat float64 vector. For each layer in order the
weight matrix of shape ``(fan_in, fan_out)`` is stored row-major, followed
by its bias of length ``fan_out``. Hidden layers use ``tanh`` or ``relu``;
the output layer is a softmax over ``d_out`` classes and the loss is mean
cross-entropy in nats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

__all__ = [
    "MlpSpec",
    "MlpModel",
    "LossReport",
    "init",
    "n_params",
    "forward",
    "backward",
    "loss",
    "finite_diff_grad",
    "max_relative_error",
    "save_snapshot",
    "load_snapshot",
]

ACTIVATIONS = ("tanh", "relu")
SNAPSHOT_MAGIC = "mlp-v1"


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: Tuple[int, ...]
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError(f"need at least input and output sizes, got {list(sizes)}")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {list(sizes)}")
        if sizes[-1] < 2:
            raise ValueError(f"classifier needs d_out >= 2, got {sizes[-1]}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")


@dataclass
class MlpModel:
    spec: MlpSpec
    params: np.ndarray

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64).reshape(-1)
        expected = n_params(self.spec.layer_sizes)
        if self.params.size != expected:
            raise ValueError(f"expected {expected} parameters for {list(self.spec.layer_sizes)}, got {self.params.size}")

    def layers(self, params: np.ndarray | None = None) -> List[Tuple[np.ndarray, np.ndarray]]:
        """``(W, b)`` views into ``params`` (defaults to the model's own)."""
        return _unpack(self.spec.layer_sizes, self.params if params is None else params)

    def with_params(self, params: np.ndarray) -> "MlpModel":
        return MlpModel(self.spec, np.array(params, dtype=np.float64))


@dataclass(frozen=True)
class LossReport:
    data_loss: float
    reg_loss: float = 0.0
    error_rate: float = field(default=0.0)

    @property
    def total(self) -> float:
        return self.data_loss + self.reg_loss


def n_params(layer_sizes: Sequence[int]) -> int:
    return sum(a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))


def _unpack(layer_sizes, params):
    out, offset = [], 0
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        w = params[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = params[offset : offset + fan_out]
        offset += fan_out
        out.append((w, b))
    return out


def init(spec: MlpSpec) -> MlpModel:
    """Glorot-uniform weights and zero biases drawn from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    chunks = []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return MlpModel(spec, np.concatenate(chunks))


def _act(z, activation):
    return np.tanh(z) if activation == "tanh" else np.maximum(z, 0.0)


def _check_inputs(model: MlpModel, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != model.spec.layer_sizes[0]:
        raise ValueError(f"inputs of shape {x.shape} do not match d_in={model.spec.layer_sizes[0]}")
    return x


def _check_labels(model: MlpModel, labels, n: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ValueError(f"labels of shape {y.shape} do not match {n} inputs")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == np.round(y)):
            raise ValueError("labels must be integer class indices")
        y = y.astype(np.int64)
    d_out = model.spec.layer_sizes[-1]
    if n and (y.min() < 0 or y.max() >= d_out):
        raise ValueError(f"labels must lie in [0, {d_out}), got range [{y.min()}, {y.max()}]")
    return y


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _forward_cache(model, x, params=None):
    acts, pres = [x], []
    layers = model.layers(params)
    for i, (w, b) in enumerate(layers):
        z = acts[-1] @ w + b
        pres.append(z)
        acts.append(z if i == len(layers) - 1 else _act(z, model.spec.activation))
    return acts, pres


def forward(model: MlpModel, inputs) -> np.ndarray:
    """Class probabilities, one row per input."""
    x = _check_inputs(model, inputs)
    acts, _ = _forward_cache(model, x)
    return _softmax(acts[-1])


def _error_rate(logits_or_probs, labels) -> float:
    if labels.size == 0:
        return 0.0
    # argmax returns the first maximum, i.e. ties go to the lowest class index.
    return float(np.mean(np.argmax(logits_or_probs, axis=1) != labels))


def loss(model: MlpModel, inputs, labels, params: np.ndarray | None = None) -> float:
    """Mean cross-entropy of ``model`` (or of ``params`` in its layout)."""
    x = _check_inputs(model, inputs)
    y = _check_labels(model, labels, x.shape[0])
    acts, _ = _forward_cache(model, x, params)
    logp = _log_softmax(acts[-1])
    return float(-np.mean(logp[np.arange(y.size), y]))


def backward(model: MlpModel, inputs, labels, weight_decay: float = 0.0) -> Tuple[LossReport, np.ndarray]:
    """Loss report and exact gradient of the mean cross-entropy.

    ``weight_decay`` only affects ``reg_loss = 0.5 * wd * ||params||**2`` in the
    report; its gradient is applied by the optimizer.
    """
    x = _check_inputs(model, inputs)
    y = _check_labels(model, labels, x.shape[0])
    n = x.shape[0]
    acts, pres = _forward_cache(model, x)
    logits = acts[-1]
    logp = _log_softmax(logits)
    data_loss = float(-np.mean(logp[np.arange(n), y]))

    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n

    layers = model.layers()
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        grads[i] = ((acts[i].T @ delta).reshape(-1), delta.sum(axis=0))
        if i:
            da = delta @ w.T
            if model.spec.activation == "tanh":
                delta = da * (1.0 - acts[i] ** 2)
            else:
                delta = da * (pres[i - 1] > 0)
    grad = np.concatenate([part for gw, gb in grads for part in (gw, gb)])
    reg = 0.5 * weight_decay * float(model.params @ model.params) if weight_decay else 0.0
    return LossReport(data_loss, reg, _error_rate(logits, y)), grad


def _ext_loss(model, x, y, params):
    acts, _ = _forward_cache(model, x, params)
    return -np.mean(_log_softmax(acts[-1])[np.arange(y.size), y])


def _relu_pattern(model, x, params):
    _, pres = _forward_cache(model, x, params)
    return [z > 0 for z in pres[:-1]]


def finite_diff_grad(model: MlpModel, inputs, labels, epsilon: float = 1e-5) -> np.ndarray:
    """Central-difference estimate of the mean cross-entropy gradient.

    The loss is evaluated in ``np.longdouble``: in float64 the quotient is
    quantized to about ``ulp(loss) / (2 * epsilon)``, which swamps small
    gradient coordinates. On platforms where longdouble is plain double this
    degrades to a float64 estimate.

    For relu networks, coordinates whose perturbation flips any hidden unit
    across the kink are returned as NaN rather than a misleading estimate.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    x = _check_inputs(model, inputs)
    y = _check_labels(model, labels, x.shape[0])
    xl = x.astype(np.longdouble)
    base = model.params.astype(np.longdouble)
    eps = np.longdouble(epsilon)
    relu = model.spec.activation == "relu"
    pattern = _relu_pattern(model, x, base) if relu else None
    out = np.empty_like(base)
    for i in range(base.size):
        plus = base.copy()
        minus = base.copy()
        plus[i] += eps
        minus[i] -= eps
        if relu:
            flips = any(
                np.any(p != q) or np.any(p != r)
                for p, q, r in zip(pattern, _relu_pattern(model, x, plus), _relu_pattern(model, x, minus))
            )
            if flips:
                out[i] = np.nan
                continue
        out[i] = (_ext_loss(model, xl, y, plus) - _ext_loss(model, xl, y, minus)) / (2 * eps)
    return out.astype(np.float64)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """``max |a - n| / (|n| + floor)`` over coordinates where ``numeric`` is defined."""
    keep = ~np.isnan(numeric)
    if not np.any(keep):
        return 0.0
    a, n = analytic[keep], numeric[keep]
    return float(np.max(np.abs(a - n) / (np.abs(n) + floor)))


def save_snapshot(path, model_or_spec, params: np.ndarray | None = None) -> Path:
    """Write parameters in the ``mlp-v1`` text format (17 significant digits)."""
    if isinstance(model_or_spec, MlpModel):
        spec = model_or_spec.spec
        params = model_or_spec.params if params is None else params
    else:
        spec = model_or_spec
    params = np.asarray(params, dtype=np.float64)
    if params.size != n_params(spec.layer_sizes):
        raise ValueError("parameter count does not match the layer sizes")
    header = f"{SNAPSHOT_MAGIC} {'-'.join(map(str, spec.layer_sizes))} {spec.activation}\n"
    body = "".join(f"{v:.17g}\n" for v in params)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + body)
    return path


def load_snapshot(path) -> MlpModel:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty snapshot file")
    parts = lines[0].split()
    if len(parts) != 3 or parts[0] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: bad header {lines[0]!r}, expected '{SNAPSHOT_MAGIC} <sizes> <activation>'")
    try:
        sizes = tuple(int(s) for s in parts[1].split("-"))
    except ValueError:
        raise ValueError(f"{path}: bad layer sizes {parts[1]!r}") from None
    spec = MlpSpec(sizes, parts[2])
    try:
        params = np.array([float(v) for v in lines[1:] if v.strip()], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if params.size != n_params(sizes):
        raise ValueError(f"{path}: expected {n_params(sizes)} parameters, found {params.size}")
    return MlpModel(spec, params)
