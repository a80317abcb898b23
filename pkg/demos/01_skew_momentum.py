"""
Momentum on a rotation-like resolvent
=====================================

The resolvent of a skew matrix is nonexpansive with the origin as its only
fixed point. It is also a mild contraction (factor ``1/sqrt(1 + tau^2)``),
so plain relaxed iteration stalls for a few thousand steps and then
converges linearly. The momentum scheme has no such phase: ``k * residual``
shrinks steadily, and how fast depends on the interpolation parameter
``eta``. The table prints ``k * residual`` for each run.
"""

import numpy as np

from fastkm import ScheduleParams, run_fast_km, run_km, skew_resolvent_op

T = skew_resolvent_op(d=10, tau=0.1)
x0 = np.ones(10)
n = 10_000
checkpoints = [10, 100, 1000, 5000, 9999]

# Plain relaxed iteration with theta = 1/2.
km = run_km(T, x0, 0.5, n)

# The momentum scheme with alpha = 4 and sigma = alpha, for three values of eta.
runs = {"km": km}
for eta in (0.1, 0.5, 0.9):
    p = ScheduleParams(alpha=4.0, sigma=4.0, eta=eta)
    runs[f"eta={eta}"] = run_fast_km(T, x0, x0, p, n)

print("k".rjust(6) + "".join(name.rjust(14) for name in runs))
for k in checkpoints:
    row = "".join(f"{runs[name].residual[k] * k:14.3e}" for name in runs)
    print(f"{k:6d}{row}")

# At alpha = 2 every eta gives theta = 1, so the iterates do not depend on eta.
a = run_fast_km(T, x0, x0, ScheduleParams(alpha=2.0, sigma=2.0, eta=0.1), 500)
b = run_fast_km(T, x0, x0, ScheduleParams(alpha=2.0, sigma=2.0, eta=0.9), 500)
print("alpha = 2 residuals identical across eta:", np.array_equal(a.residual, b.residual))
