"""Fast Krasnoselskii-Mann iteration, its baselines and parameter mappings.

The momentum scheme is

    x^{k+1} = x^k + theta_k (T x^k - x^k) + alpha_k (T x^k - T x^{k-1}),

with ``theta_k = theta / (k + sigma)`` and ``alpha_k = 1 - alpha / (k + sigma)``,
started from two points ``x^{-1}, x^0``. Only one new evaluation of ``T`` is
needed per step because ``T x^{k-1}`` is carried over.
"""

import math
import time
import warnings
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .diagnostics import (
    IterationTrace,
    LyapunovState,
    TraceRecord,
    gap_function,
    lyapunov_energy,
)
from .exceptions import ParameterError, ParameterWarning, ShapeError
from .operators import as_vector, averaged_map, dot

__all__ = [
    "ScheduleParams",
    "theta_from_eta",
    "cooling_alpha",
    "schedule_coeffs",
    "effective_weights",
    "fast_km_step",
    "run_km",
    "run_fast_km",
    "HalpernForm",
    "run_anchored_halpern",
    "TranDinhParams",
    "trandinh_map",
    "run_trandinh_direct",
    "km_reference",
]

COOLING_MODES = ("none", "linear", "log")


def theta_from_eta(eta, alpha) -> float:
    """Relaxation ``theta = (1 - eta) + eta (alpha - 1)``.

    Evaluated as ``1 + eta (alpha - 2)``, which is the same number in exact
    arithmetic and returns exactly 1 at ``alpha = 2`` for every ``eta``.
    """
    if not 0 <= eta <= 1:
        raise ParameterError(f"eta must lie in [0, 1], got {eta}")
    if alpha < 2:
        raise ParameterError(f"alpha must be >= 2, got {alpha}")
    return 1.0 + eta * (alpha - 2.0)


def cooling_alpha(k, alpha0, alpha_max, maxit, mode="linear") -> float:
    """Momentum parameter grown from ``alpha0`` to ``alpha_max`` by step ``maxit // 2``."""
    if alpha_max < alpha0:
        raise ParameterError("alpha_max must be >= alpha0")
    if maxit < 2:
        raise ParameterError("maxit must be >= 2")
    half = maxit // 2
    if mode == "linear":
        frac = min(1.0, k / half)
    elif mode == "log":
        frac = min(1.0, math.log1p(k) / math.log1p(half))
    else:
        raise ParameterError(f"unknown cooling mode {mode!r}")
    if k >= half:
        return float(alpha_max)
    return alpha0 + (alpha_max - alpha0) * frac


@dataclass(frozen=True)
class ScheduleParams:
    """Parameter bundle of the fast iteration.

    Give either ``theta`` or ``eta``; when ``eta`` is given ``theta`` is
    derived from it. ``s`` relaxes the operator to ``(1 - s) I + s T``.
    With ``cooling`` set to ``"linear"`` or ``"log"`` the momentum parameter
    follows :func:`cooling_alpha` (``alpha_max`` defaults to ``100 alpha``)
    and, if ``eta`` is set, ``theta`` is recomputed at every step. ``sigma``
    is never changed by cooling.
    """

    alpha: float
    sigma: float
    theta: Optional[float] = None
    eta: Optional[float] = None
    s: float = 1.0
    cooling: str = "none"
    alpha_max: Optional[float] = None
    maxit: Optional[int] = None

    def __post_init__(self):
        if self.alpha < 2:
            raise ParameterError(f"alpha must be >= 2, got {self.alpha}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.s <= 2:
            raise ParameterError(f"s must lie in (0, 2], got {self.s}")
        if self.cooling not in COOLING_MODES:
            raise ParameterError(f"cooling must be one of {COOLING_MODES}, got {self.cooling!r}")
        if self.eta is not None:
            theta = theta_from_eta(self.eta, self.alpha)
            if self.theta is not None and self.theta != theta:
                raise ParameterError("give theta or eta, not conflicting values of both")
            object.__setattr__(self, "theta", theta)
        if self.theta is None:
            raise ParameterError("one of theta or eta is required")
        if self.theta <= 0:
            raise ParameterError(f"theta must be positive, got {self.theta}")
        if self.cooling != "none":
            if self.maxit is None or self.maxit < 2:
                raise ParameterError("cooling needs maxit >= 2")
            if self.alpha_max is None:
                object.__setattr__(self, "alpha_max", 100.0 * self.alpha)
            if self.alpha_max < self.alpha:
                raise ParameterError("alpha_max must be >= alpha")
        lo, hi = 1.0, self.alpha - 1.0
        if self.theta < lo or self.theta > hi:
            warnings.warn(
                f"theta={self.theta} lies outside [1, alpha-1]=[1, {hi}]", ParameterWarning, stacklevel=3
            )
        elif self.theta in (lo, hi) and self.alpha > 2:
            warnings.warn(
                f"theta={self.theta} sits on the boundary of [1, {hi}]; fast rates are not guaranteed",
                ParameterWarning,
                stacklevel=3,
            )

    def alpha_at(self, k) -> float:
        if self.cooling == "none":
            return self.alpha
        return cooling_alpha(k, self.alpha, self.alpha_max, self.maxit, self.cooling)

    def theta_at(self, k) -> float:
        if self.cooling == "none" or self.eta is None:
            return self.theta
        return 1.0 + self.eta * (self.alpha_at(k) - 2.0)

    def as_dict(self):
        return asdict(self)


def schedule_coeffs(k, p: ScheduleParams):
    """Return ``(theta_k, alpha_k, t_k)`` at step ``k``; negative ``alpha_k`` is kept."""
    a = p.alpha_at(k)
    th = p.theta_at(k)
    denom = k + p.sigma
    return th / denom, 1.0 - a / denom, k - 1 + p.sigma


def effective_weights(k, p: ScheduleParams):
    """Weights of ``x^k``, ``x^k - x^{k-1}``, ``T x^k``, ``T x^k - T x^{k-1}`` in one step.

    Here ``T`` is the unrelaxed operator; the step acts with ``(1-s)I + sT``.
    """
    th, ak, _ = schedule_coeffs(k, p)
    s = p.s
    return (1.0 - s * th, (1.0 - s) * ak, s * th, s * ak)


def fast_km_step(x, Tx, Tx_prev, theta_k, alpha_k):
    """One momentum step. A fixed point with ``Tx == Tx_prev == x`` is returned unchanged."""
    return x + theta_k * (Tx - x) + alpha_k * (Tx - Tx_prev)


def _counted(T):
    box = [0]

    def wrapped(x):
        box[0] += 1
        return T(x)

    return wrapped, box


def _drive(
    T,
    x0,
    n,
    step,
    *,
    x_m1=None,
    z_star=None,
    lyap: Optional[LyapunovState] = None,
    inner: Callable = dot,
    residual_fn: Optional[Callable] = None,
    variance_fn: Optional[Callable] = None,
    snapshot_every: int = 0,
    monitor: Optional[Callable] = None,
    tol: Optional[float] = None,
    metadata=None,
):
    """Shared loop: evaluate ``T`` once per step, record a row, then update.

    ``step(k, x, Tx, Tx_prev)`` returns ``x^{k+1}``. ``monitor(k, x, Tx)``
    may return a dict of extra per-row values.
    """
    if n < 0:
        raise ParameterError("iteration budget must be nonnegative")
    x = as_vector(x0).copy()
    if x_m1 is not None:
        x_m1 = as_vector(x_m1)
        if x_m1.shape != x.shape:
            raise ShapeError(f"x_m1 shape {x_m1.shape} differs from x0 shape {x.shape}")
    if z_star is not None:
        z_star = as_vector(z_star)
        if z_star.shape != x.shape:
            raise ShapeError(f"z_star shape {z_star.shape} differs from x0 shape {x.shape}")
    Tc, calls = _counted(T)
    trace = IterationTrace(metadata)
    t_start = time.perf_counter()
    Tx_prev = Tc(x_m1) if x_m1 is not None else None
    if snapshot_every:
        trace.snapshots[0] = x.copy()
    steps = 0
    for k in range(n):
        Tx = as_vector(Tc(x))
        if Tx.shape != x.shape:
            raise ShapeError(f"operator changed shape {x.shape} -> {Tx.shape}")
        if residual_fn is None:
            d = x - Tx
            res = math.sqrt(max(inner(d, d), 0.0))
        else:
            res = residual_fn(x, Tx)
        gap = gap_function(x, Tx, z_star, inner) if z_star is not None else None
        energy = None
        if lyap is not None and Tx_prev is not None:
            energy = lyapunov_energy(k + 1, x, Tx, Tx_prev, lyap)
        var = variance_fn() if variance_fn is not None else None
        extras = monitor(k, x, Tx) if monitor is not None else None
        trace.append(TraceRecord(k, res, gap, energy, var), extras)
        if tol is not None and res <= tol:
            trace.metadata["stopped_early"] = k
            break
        x_next = step(k, x, Tx, Tx_prev)
        Tx_prev = Tx
        x = x_next
        steps = k + 1
        if snapshot_every and (k + 1) % snapshot_every == 0:
            trace.snapshots[k + 1] = x.copy()
    trace.x_final = x
    trace.snapshots[steps] = x.copy()
    trace.metadata["T_evaluations"] = calls[0]
    trace.metadata["wall_time"] = time.perf_counter() - t_start
    return trace


def run_km(T, x0, theta, n, *, z_star=None, inner=dot, snapshot_every=0, monitor=None, tol=None):
    """Plain relaxed iteration ``x^{k+1} = x^k + theta (T x^k - x^k)`` with ``theta`` in (0, 1)."""
    if not 0 < theta < 1:
        raise ParameterError(f"theta must lie in (0, 1), got {theta}")

    def step(k, x, Tx, _):
        return x + theta * (Tx - x)

    return _drive(
        T, x0, n, step, z_star=z_star, inner=inner, snapshot_every=snapshot_every,
        monitor=monitor, tol=tol, metadata={"solver": "km", "theta": theta},
    )


def run_fast_km(
    T,
    x_m1,
    x0,
    p: ScheduleParams,
    n,
    *,
    z_star=None,
    energy_lambda=None,
    inner=dot,
    residual_fn=None,
    variance_fn=None,
    snapshot_every=0,
    monitor=None,
    tol=None,
):
    """Run ``n`` steps of the fast iteration; ``T`` is evaluated exactly ``n + 1`` times.

    Parameters
    ----------
    T : callable
        Nonexpansive operator. When ``p.s != 1`` the step uses ``(1-s)I + sT``.
    x_m1, x0 : ndarray
        The two starting points ``x^{-1}`` and ``x^0``.
    p : ScheduleParams
    n : int
        Iteration budget.
    z_star : ndarray, optional
        Fixed point used for the gap function and the energy.
    energy_lambda : float, optional
        When given together with ``z_star`` and ``p.eta``, the energy
        ``E_{k+1}`` with this weight is recorded on row ``k``. The energy is
        defined for the relaxed operator and for constant ``alpha``.
    inner : callable
        Inner product used for residuals, gaps and energies.
    snapshot_every : int
        Keep ``x^k`` for every ``k`` divisible by this value (0 keeps only
        the final iterate).
    monitor : callable, optional
        ``monitor(k, x, Tx) -> dict`` of extra values recorded per row.
    tol : float, optional
        Stop as soon as the residual drops to ``tol``. Off by default.
    """
    Ts = averaged_map(T, p.s) if p.s != 1 else T
    lyap = None
    if energy_lambda is not None:
        if z_star is None or p.eta is None:
            raise ParameterError("the energy needs z_star and eta")
        if p.cooling != "none":
            raise ParameterError("the energy is only defined for a constant alpha")
        lyap = LyapunovState(energy_lambda, p.eta, p.alpha, p.sigma, as_vector(z_star), inner)

    def step(k, x, Tx, Tx_prev):
        th, ak, _ = schedule_coeffs(k, p)
        return fast_km_step(x, Tx, Tx_prev, th, ak)

    meta = {"solver": "fast_km", "params": p.as_dict()}
    if p.cooling != "none":
        meta["alpha_schedule"] = "alpha(k) per cooling_alpha"
    return _drive(
        Ts, x0, n, step, x_m1=x_m1, z_star=z_star, lyap=lyap, inner=inner,
        residual_fn=residual_fn, variance_fn=variance_fn, snapshot_every=snapshot_every,
        monitor=monitor, tol=tol, metadata=meta,
    )


@dataclass(frozen=True)
class HalpernForm:
    """Anchor ``v`` and parameters of the anchored iteration.

    ``x^{k+1} = eps_k v + (1 - eps_k) T x^k`` with ``eps_k = (alpha - 1)/(k + sigma)``.
    """

    v: np.ndarray
    alpha: float
    sigma: float

    @classmethod
    def from_initial(cls, T, x_m1, x0, alpha, sigma):
        """Anchor reproducing the ``theta = 1`` momentum run started at ``x^{-1}, x^0``."""
        if alpha < 2:
            raise ParameterError("alpha must be >= 2")
        Tm1 = as_vector(T(as_vector(x_m1)))
        t0 = sigma - 1.0
        v = (t0 / (alpha - 1.0)) * (as_vector(x0) - Tm1) + Tm1
        return cls(v, float(alpha), float(sigma))

    def eps(self, k):
        return (self.alpha - 1.0) / (k + self.sigma)


def run_anchored_halpern(T, h: HalpernForm, x0, n, *, z_star=None, snapshot_every=0, monitor=None):
    """Anchored iteration towards ``h.v``; equals the ``theta = 1`` momentum run."""
    if h.alpha < 2 or h.sigma <= 0:
        raise ParameterError("need alpha >= 2 and sigma > 0")
    v = as_vector(h.v)

    def step(k, x, Tx, _):
        e = h.eps(k)
        return e * v + (1.0 - e) * Tx

    return _drive(
        T, x0, n, step, z_star=z_star, snapshot_every=snapshot_every, monitor=monitor,
        metadata={"solver": "halpern", "alpha": h.alpha, "sigma": h.sigma},
    )


@dataclass(frozen=True)
class TranDinhParams:
    """Parameters of the momentum method for a ``1/L``-cocoercive operator ``G``."""

    omega: float
    gamma_bar: float = 1.0
    Lconst: float = 1.0

    def __post_init__(self):
        if self.omega < 0.5:
            raise ParameterError(f"omega must be >= 1/2, got {self.omega}")
        if not 0 < self.gamma_bar <= 2:
            raise ParameterError(f"gamma_bar must lie in (0, 2], got {self.gamma_bar}")
        if self.Lconst <= 0:
            raise ParameterError("Lconst must be positive")


def trandinh_map(tp: TranDinhParams, G=None):
    """Map the cocoercive method onto the fast iteration.

    Returns ``(ScheduleParams(alpha=2w+1, theta=w, sigma=2w+2), T)`` where
    ``T = I - (gamma_bar / L) G``; ``T`` is None when ``G`` is not given.
    For ``omega < 1`` the relaxation falls below 1 and a warning is issued.
    """
    w = tp.omega
    p = ScheduleParams(alpha=2 * w + 1, theta=w, sigma=2 * w + 2, s=1.0)
    if G is None:
        return p, None
    c = tp.gamma_bar / tp.Lconst

    def T(x):
        return x - c * G(x)

    return p, T


def run_trandinh_direct(G, tp: TranDinhParams, x_m1, x0, n, *, snapshot_every=1):
    """Direct form of the cocoercive method; serves as an equivalence oracle.

    ``x^{k+1} = x^k + tb_k (x^k - x^{k-1}) - eb_k (G x^k - gb_k G x^{k-1})`` with
    ``tb_k = (k+1)/(k+2w+2)``, ``eb_k = (gamma/L)(k+w+1)/(k+2w+2)`` and
    ``gb_k = (gamma/L) tb_k / eb_k``.
    """
    w = tp.omega
    c = tp.gamma_bar / tp.Lconst
    x_prev = as_vector(x_m1).copy()
    x = as_vector(x0).copy()
    G_prev = as_vector(G(x_prev))
    trace = IterationTrace({"solver": "trandinh_direct", "omega": w})
    trace.snapshots[0] = x.copy()
    for k in range(n):
        Gx = as_vector(G(x))
        tb = (k + 1.0) / (k + 2 * w + 2.0)
        eb = c * (k + w + 1.0) / (k + 2 * w + 2.0)
        gb = c * tb / eb
        trace.append(TraceRecord(k, float(np.linalg.norm(c * Gx))))
        x_next = x + tb * (x - x_prev) - eb * (Gx - gb * G_prev)
        x_prev, x, G_prev = x, x_next, Gx
        if snapshot_every and (k + 1) % snapshot_every == 0:
            trace.snapshots[k + 1] = x.copy()
    trace.x_final = x
    trace.snapshots[n] = x.copy()
    return trace


def km_reference(T, x0, n=10**6, theta=0.5):
    """High-iteration plain run used to produce reference fixed points.

    Stops early only when an update leaves the iterate bitwise unchanged,
    in which case further steps would reproduce the same point.
    Returns ``(x, iterations_used)``.
    """
    x = as_vector(x0).copy()
    for k in range(n):
        x_next = x + theta * (T(x) - x)
        if np.array_equal(x_next, x):
            return x, k
        x = x_next
    return x, n
