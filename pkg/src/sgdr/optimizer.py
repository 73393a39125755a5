"""Plain SGD and heavy-ball momentum SGD on flat float64 parameter vectors.

Weight decay is coupled L2: ``weight_decay * x`` is added to the gradient
before the velocity update. Nesterov momentum is deliberately absent.
"""
from __future__ import annotations

import numpy as np

__all__ = ["as_parameter_vector", "sgd_step", "MomentumState", "momentum_step", "reset_velocity"]


def as_parameter_vector(values) -> np.ndarray:
    """Copy ``values`` into a 1-D float64 array, rejecting non-finite entries."""
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameter vector contains non-finite entries")
    return arr


def _check_shapes(x: np.ndarray, grad: np.ndarray) -> None:
    if x.shape != grad.shape:
        raise ValueError(f"length mismatch: parameters {x.shape} vs gradient {grad.shape}")


def sgd_step(x: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    """Return ``x - lr * grad`` as a new array."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    _check_shapes(x, grad)
    return x - lr * grad


class MomentumState:
    """Velocity buffer and hyperparameters for :func:`momentum_step`.

    Defaults (momentum 0.9, weight decay 5e-4, dampening 0) follow the
    common wide-ResNet CIFAR recipe. ``dampening`` scales the gradient term
    by ``1 - dampening``; it is kept for completeness and defaults to 0.
    """

    def __init__(self, n: int, mu: float = 0.9, weight_decay: float = 5e-4, dampening: float = 0.0):
        if not 0 <= mu < 1:
            raise ValueError(f"momentum must be in [0, 1), got {mu}")
        if weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {weight_decay}")
        if not 0 <= dampening <= 1:
            raise ValueError(f"dampening must be in [0, 1], got {dampening}")
        self.velocity = np.zeros(int(n), dtype=np.float64)
        self.mu = float(mu)
        self.weight_decay = float(weight_decay)
        self.dampening = float(dampening)

    def __repr__(self):
        return (
            f"MomentumState(n={self.velocity.size}, mu={self.mu}, "
            f"weight_decay={self.weight_decay}, dampening={self.dampening})"
        )


def momentum_step(x: np.ndarray, grad: np.ndarray, state: MomentumState, lr: float) -> np.ndarray:
    """One heavy-ball step; mutates ``state.velocity`` and returns the new parameters.

    ``v <- mu * v - lr * (1 - dampening) * (grad + weight_decay * x)``, then ``x + v``.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    _check_shapes(x, grad)
    if state.velocity.shape != x.shape:
        raise ValueError(f"length mismatch: parameters {x.shape} vs velocity {state.velocity.shape}")
    g = grad + state.weight_decay * x if state.weight_decay else grad
    if state.dampening:
        g = (1.0 - state.dampening) * g
    if state.mu:
        state.velocity = state.mu * state.velocity - lr * g
    else:
        # Keeps the mu == 0 path bit-identical to sgd_step: x + (-lr*g) == x - lr*g.
        state.velocity = -(lr * g)
    return x + state.velocity


def reset_velocity(state: MomentumState) -> MomentumState:
    state.velocity = np.zeros_like(state.velocity)
    return state
