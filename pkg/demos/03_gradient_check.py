"""
Checking backprop against finite differences
============================================

The MLP's analytic gradient is compared with central differences for a tanh
and a relu network. For relu, coordinates whose perturbation crosses a kink
have no meaningful difference quotient and come back as NaN.
"""
import numpy as np

from sgdr import MlpSpec, backward, finite_diff_grad, init
from sgdr.model import max_relative_error

rng = np.random.default_rng(0)
x = rng.normal(size=(16, 3))
y = rng.integers(0, 3, size=16)

for activation in ("tanh", "relu"):
    model = init(MlpSpec((3, 12, 12, 3), activation, seed=4))
    report, grad = backward(model, x, y)
    numeric = finite_diff_grad(model, x, y, epsilon=1e-5)
    skipped = int(np.isnan(numeric).sum())
    print(f"{activation}: loss {report.data_loss:.4f}, {grad.size} parameters, "
          f"max relative error {max_relative_error(grad, numeric):.1e}, {skipped} kink coordinates skipped")

# Duplicating every row of the batch leaves the mean loss, and so the
# gradient, unchanged.
model = init(MlpSpec((3, 12, 3), seed=1))
_, g1 = backward(model, x, y)
_, g2 = backward(model, np.vstack([x, x]), np.concatenate([y, y]))
print("duplicated batch, largest gradient change:", np.abs(g1 - g2).max())
