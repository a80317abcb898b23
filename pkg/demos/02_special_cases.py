"""
Special cases: anchoring, the prior scheme and a cocoercive method
==================================================================

With ``theta = 1`` the momentum scheme is an anchored (Halpern-type)
iteration towards a fixed anchor. With ``theta = alpha/2`` and
``sigma = alpha + 1`` it is an earlier relaxed scheme written with one index
shift. For a cocoercive operator ``G`` a known momentum method is the
scheme applied to ``I - (gamma/L) G``. All three are checked numerically.
"""

import warnings

import numpy as np

from fastkm import (
    ParameterWarning,
    HalpernForm,
    ScheduleParams,
    TranDinhParams,
    run_anchored_halpern,
    run_fast_km,
    run_trandinh_direct,
    skew_resolvent_op,
    trandinh_map,
)
from fastkm.iteration import effective_weights

# theta = 1 sits on the edge of the fast-rate range, which the library flags.
warnings.simplefilter("ignore", ParameterWarning)

T = skew_resolvent_op(10, 0.1)
x = np.ones(10)

# Anchored form: same iterates, written as x+ = eps_k v + (1 - eps_k) T x.
for alpha, sigma in [(2.0, 1.0), (3.0, 2.0), (5.0, 17.0)]:
    p = ScheduleParams(alpha=alpha, sigma=sigma, theta=1.0)
    fast = run_fast_km(T, x, x, p, 500, snapshot_every=1)
    anchor = HalpernForm.from_initial(T, x, x, alpha, sigma)
    anch = run_anchored_halpern(T, anchor, x, 500, snapshot_every=1)
    diff = max(np.linalg.norm(fast.iterate(k) - anch.iterate(k)) for k in range(501))
    print(f"anchored form, alpha={alpha:g} sigma={sigma:g}: max difference {diff:.1e}")

# Prior scheme: weights of x^k, x^k - x^(k-1), T x^k, T x^k - T x^(k-1).
alpha, s = 4.0, 0.5
p = ScheduleParams(alpha=alpha, sigma=alpha + 1.0, theta=alpha / 2.0, s=s)
for k in (0, 10, 100):
    K = k + 1
    prior = (1 - s * alpha / (2 * (K + alpha)), (1 - s) * K / (K + alpha),
             s * alpha / (2 * (K + alpha)), s * K / (K + alpha))
    print(f"k={k:3d} weights {np.round(effective_weights(k, p), 6)} prior {np.round(prior, 6)}")

# Cocoercive method with G = a symmetric positive semidefinite matrix of norm 1.
rng = np.random.default_rng(0)
B = rng.standard_normal((3, 3))
A = B @ B.T
A /= np.linalg.norm(A, 2)


def G(v):
    return A @ v


x_m1, x0 = rng.standard_normal(3), rng.standard_normal(3)
for omega in (1.0, 2.0, 5.0):
    tp = TranDinhParams(omega=omega)
    params, Top = trandinh_map(tp, G)
    direct = run_trandinh_direct(G, tp, x_m1, x0, 300)
    fast = run_fast_km(Top, x_m1, x0, params, 300, snapshot_every=1)
    diff = max(np.abs(direct.iterate(k) - fast.iterate(k)).max() for k in range(301))
    print(f"cocoercive method, omega={omega:g}: alpha={params.alpha:g}, theta={params.theta:g}, "
          f"sigma={params.sigma:g}, max difference {diff:.1e}")
