"""
Heavy-ball momentum by hand
===========================

Two steps on f(x) = x**2 / 2, whose gradient is x itself, then the effect of
weight decay and of velocity on a badly conditioned quadratic.
"""
import numpy as np

from sgdr import MomentumState, momentum_step, sgd_step

state = MomentumState(1, mu=0.9, weight_decay=0.0)
x = np.array([1.0])
for i in range(2):
    x = momentum_step(x, x, state, lr=0.1)
    print(f"step {i + 1}: x = {float(x[0])!r}  velocity = {float(state.velocity[0])!r}")

# Weight decay adds wd * x to the gradient, so from rest with a zero loss
# gradient the parameters shrink by (1 - lr * wd).
state = MomentumState(3, mu=0.9, weight_decay=0.1)
x = np.array([1.0, -2.0, 4.0])
print("\nshrink from rest:", momentum_step(x, np.zeros(3), state, lr=0.5), "expected", x * (1 - 0.5 * 0.1))

# Curvatures 1 and 100: plain SGD must use lr < 0.02 and then crawls along the
# flat axis. Momentum with the same rate gets far closer in the same steps.
h = np.array([1.0, 100.0])
start = np.array([1.0, 1.0])
plain, heavy = start.copy(), start.copy()
state = MomentumState(2, mu=0.9, weight_decay=0.0)
for _ in range(200):
    plain = sgd_step(plain, h * plain, 0.015)
    heavy = momentum_step(heavy, h * heavy, state, 0.015)
print(f"\nafter 200 steps  sgd |x| = {np.linalg.norm(plain):.2e}   momentum |x| = {np.linalg.norm(heavy):.2e}")
