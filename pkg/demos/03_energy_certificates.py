"""
Energy decay and explicit bounds
================================

For ``lambda = alpha - 1`` and ``sigma >= alpha - 1`` the discrete energy
never increases, and its first value ``E_1`` gives explicit bounds on the
squared residual and on the gap function at every step. This script
records the energy along a run and prints how much room the bounds leave.
"""

import numpy as np

from fastkm import ScheduleParams, explicit_residual_bound, run_fast_km, skew_resolvent_op

T = skew_resolvent_op(10, 0.1)
x0 = np.ones(10)
z_star = np.zeros(10)

for eta in (0.1, 0.5, 0.9):
    alpha = 4.0
    p = ScheduleParams(alpha=alpha, sigma=alpha, eta=eta)
    tr = run_fast_km(T, x0, x0, p, 10_000, z_star=z_star, energy_lambda=alpha - 1.0)
    E = tr.energy
    t = tr.k - 1.0 + p.sigma
    bounds = explicit_residual_bound(E[0], eta, t, alpha)
    print(f"eta={eta}: E_1={E[0]:.4f}, final energy {E[-1]:.3e}, "
          f"largest step increase {np.max(np.diff(E)):.2e}")
    print(f"   residual^2 / bound at most {np.max(tr.residual**2 / bounds.residual_sq):.3f}, "
          f"gap / bound at most {np.max(tr.gap / bounds.gap):.3f}")

# With alpha = 2, eta = 1/2 and sigma = 1 the bound reads ||x - Tx|| <= 2 ||T(x^-1)|| / k.
p = ScheduleParams(alpha=2.0, sigma=1.0, eta=0.5)
tr = run_fast_km(T, x0, x0, p, 10_000)
k = np.arange(1, 10_000)
print("optimal Halpern case, max residual * k / (2 ||T x0||):",
      f"{np.max(tr.residual[1:] * k / (2 * np.linalg.norm(T(x0)))):.4f}")
