"""
Learning-rate schedules
=======================

Cosine annealing with warm restarts next to the classic step decay, printed
as a coarse text plot, one row per epoch.
"""
from sgdr import CosineRestartSchedule, StepDecaySchedule, dump_curve

EPOCHS = 31
STEPS = 10

# Periods of 1, 2, 4, 8 and 16 epochs: restarts after epochs 1, 3, 7 and 15.
cosine = dump_curve(CosineRestartSchedule(eta_min=0.0, eta_max=0.05, t0=1, t_mult=2), EPOCHS, STEPS)
step = dump_curve(StepDecaySchedule(eta0=0.05, drop_factor=0.2, milestones=(10, 20, 28)), EPOCHS, STEPS)


def bar(lr, width=40, top=0.05):
    return "#" * round(width * lr / top)


print("epoch  cosine   step")
for k in range(0, EPOCHS * STEPS, STEPS):
    t, lr_c, restarted = cosine[k]
    _, lr_s, _ = step[k]
    mark = "  <- restart" if restarted else ""
    print(f"{t:5.0f}  {lr_c:.4f}  {lr_s:.4f}  |{bar(lr_c):<40}|{mark}")

# The rate is recomputed every batch, so inside one epoch it keeps falling.
print("\nwithin epoch 4 (period 4..7):", [round(lr, 4) for _, lr, _ in cosine[4 * STEPS : 5 * STEPS]])
