"""Continuous-time second-order model with a linear monotone map ``Q``.

The system

    x'' + (alpha/t) x' + beta(t) Q x' + b(t) Q x = 0,
    b(t) = (1 - eta) beta'(t) + theta beta(t) / t,  theta = 1 + eta (alpha - 2),

is integrated as a first-order system in ``(x, v = x')`` with classical
fixed-step RK4. States may be ``(d,)`` vectors or ``(d, m)`` batches of
``m`` independent trajectories sharing the same coefficients.

Planar examples identify ``a + ib`` with ``(a, b)``; the rotation
``(x1, x2) -> (-x2, x1)`` is multiplication by ``i``.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .exceptions import ParameterError, ShapeError
from .operators import LinearMap, MatrixMap, as_vector

__all__ = [
    "ConstantBeta",
    "PowerBeta",
    "DynamicsSpec",
    "Trajectory",
    "rotation_map",
    "ode_rhs",
    "integrate_rk4",
    "rotation_closed_form",
    "rotation_closed_form_velocity",
    "tikhonov_anchor",
    "integrate_tikhonov_flow",
]

MODES = ("theta_one", "theta_alpha_minus_one")


@dataclass(frozen=True)
class ConstantBeta:
    beta0: float = 1.0

    def value(self, t, alpha):
        return self.beta0

    def deriv(self, t, alpha):
        return 0.0


@dataclass(frozen=True)
class PowerBeta:
    """``beta(t) = beta0 t^(alpha - 2 - eps)``; ``eps = 0`` saturates the growth condition."""

    beta0: float = 1.0
    eps: float = 0.0

    def exponent(self, alpha):
        return alpha - 2.0 - self.eps

    def value(self, t, alpha):
        return self.beta0 * t ** self.exponent(alpha)

    def deriv(self, t, alpha):
        e = self.exponent(alpha)
        if e == 0:
            return 0.0
        return self.beta0 * e * t ** (e - 1.0)


def rotation_map() -> MatrixMap:
    return MatrixMap([[0.0, -1.0], [1.0, 0.0]])


def _as_map(Q):
    if isinstance(Q, LinearMap):
        return Q
    return MatrixMap(Q)


@dataclass(frozen=True)
class DynamicsSpec:
    """Coefficients and initial data of the second-order model.

    ``Q`` must be monotone; this is checked on the symmetric part whenever
    the map can be densified cheaply (dimension up to 500).
    """

    Q: Union[LinearMap, np.ndarray]
    alpha: float
    eta: float
    beta: Union[ConstantBeta, PowerBeta]
    t0: float
    x0: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        Q = _as_map(self.Q)
        object.__setattr__(self, "Q", Q)
        if self.alpha < 2:
            raise ParameterError("alpha must be >= 2")
        if not 0 <= self.eta <= 1:
            raise ParameterError("eta must lie in [0, 1]")
        if self.t0 <= 0:
            raise ParameterError("t0 must be positive")
        if isinstance(self.beta, PowerBeta) and not 0 <= self.beta.eps <= self.alpha - 2:
            raise ParameterError(f"eps must lie in [0, alpha-2] = [0, {self.alpha - 2}]")
        x0 = as_vector(self.x0)
        v0 = as_vector(self.v0)
        if x0.shape != v0.shape or x0.shape[0] != Q.input_dim:
            raise ShapeError("x0 and v0 must share a shape whose leading size is dim(Q)")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "v0", v0)
        if Q.input_dim <= 500:
            A = Q.to_dense()
            if np.linalg.eigvalsh(0.5 * (A + A.T)).min() < -1e-12 * max(1.0, np.abs(A).max()):
                raise ParameterError("Q must be monotone")

    @property
    def theta(self):
        return 1.0 + self.eta * (self.alpha - 2.0)

    def b(self, t):
        return (1.0 - self.eta) * self.beta.deriv(t, self.alpha) + self.theta * self.beta.value(t, self.alpha) / t


class Trajectory(NamedTuple):
    t: np.ndarray
    x: np.ndarray
    v: Optional[np.ndarray]
    q_norm: np.ndarray


def ode_rhs(spec: DynamicsSpec, t, x, v):
    """First-order reduction: ``(x', v') = (v, -(alpha/t) v - beta Q v - b Q x)``."""
    if t <= 0:
        raise ParameterError(f"time must be positive, got {t}")
    Q = spec.Q
    beta = spec.beta.value(t, spec.alpha)
    dv = -(spec.alpha / t) * v - beta * Q.apply(v) - spec.b(t) * Q.apply(x)
    return v, dv


def _qnorm(Q, x):
    return np.linalg.norm(Q.apply(x), axis=0)


def _system_matrices(spec: DynamicsSpec, Qd, t):
    """Batch of ``A(t)`` with ``(x, v)' = A(t) (x, v)`` for an array of times."""
    d = Qd.shape[0]
    t = np.asarray(t, dtype=float)
    beta = np.broadcast_to(np.asarray(spec.beta.value(t, spec.alpha), dtype=float), t.shape)
    b = np.broadcast_to(np.asarray(spec.b(t), dtype=float), t.shape)
    A = np.zeros(t.shape + (2 * d, 2 * d))
    eye = np.eye(d)
    A[..., :d, d:] = eye
    A[..., d:, :d] = -b[..., None, None] * Qd
    A[..., d:, d:] = -(spec.alpha / t)[..., None, None] * eye - beta[..., None, None] * Qd
    return A


def integrate_rk4(spec: DynamicsSpec, t_end, h, sample_every=1, chunk=20000) -> Trajectory:
    """Classical RK4 with step ``h`` from ``spec.t0`` to ``t_end``.

    The step count is ``round((t_end - t0)/h)`` and the times are
    ``t0 + i h``. Every ``sample_every``-th state is returned, plus the last.

    The model is linear in ``(x, v)``, so one RK4 step is the matrix
    ``P = I + h/6 (K1 + 2 K2 + 2 K3 + K4)`` with ``K1 = A(t)``,
    ``K2 = A(t + h/2)(I + h/2 K1)``, ``K3 = A(t + h/2)(I + h/2 K2)`` and
    ``K4 = A(t + h)(I + h K3)``. These step matrices are built in batches of
    ``chunk`` steps and applied in sequence, which is the same scheme as the
    stage-by-stage form evaluated with :func:`ode_rhs`.
    """
    if h <= 0:
        raise ParameterError("h must be positive")
    if t_end <= spec.t0:
        raise ParameterError("t_end must exceed t0")
    Qd = spec.Q.to_dense()
    d = Qd.shape[0]
    if d > 64:
        raise ParameterError("the batched integrator is meant for small planar systems (dim <= 64)")
    n = int(round((t_end - spec.t0) / h))
    t0 = spec.t0
    state = np.concatenate([spec.x0, spec.v0], axis=0)
    I = np.eye(2 * d)
    ts, ss = [t0], [state.copy()]
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        tk = t0 + np.arange(lo, hi) * h
        A0 = _system_matrices(spec, Qd, tk)
        A1 = _system_matrices(spec, Qd, tk + 0.5 * h)
        A2 = _system_matrices(spec, Qd, tk + h)
        K1 = A0
        K2 = A1 @ (I + 0.5 * h * K1)
        K3 = A1 @ (I + 0.5 * h * K2)
        K4 = A2 @ (I + h * K3)
        P = I + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        for j in range(hi - lo):
            state = P[j] @ state
            i = lo + j + 1
            if i % sample_every == 0 or i == n:
                ts.append(t0 + i * h)
                ss.append(state)
    S = np.array(ss)
    X = S[:, :d]
    V = S[:, d:]
    return Trajectory(np.array(ts), X, V, np.linalg.norm(np.einsum("ij,nj...->ni...", Qd, X), axis=1))


def _complex_solution(mode, c1, c2, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ParameterError("t must be positive")
    e = np.exp(-1j * t)
    if mode == "theta_one":
        z = c1 * (1 - 1j * t) / t**2 + c2 * e / t**2
        dz = c1 * (-1j / t**2 - 2 * (1 - 1j * t) / t**3) + c2 * e * (-1j / t**2 - 2 / t**3)
    elif mode == "theta_alpha_minus_one":
        z = c1 / t**2 + c2 * (1 + 1j * t) * e / t**2
        dz = -2 * c1 / t**3 + c2 * e * (1 / t - 2 * (1 + 1j * t) / t**3)
    else:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    return z, dz


def rotation_closed_form(mode, c1, c2, t):
    """Exact planar solution for ``alpha = 3``, ``beta = 1`` in the two edge cases.

    ``theta_one`` (``eta = 0``): ``c1 (1 - it)/t^2 + c2 e^{-it}/t^2``.
    ``theta_alpha_minus_one`` (``eta = 1``): ``c1/t^2 + c2 (1 + it) e^{-it}/t^2``.
    Returns shape ``(2,)`` for scalar ``t`` and ``(len(t), 2)`` otherwise.
    """
    z, _ = _complex_solution(mode, c1, c2, t)
    return np.stack([np.real(z), np.imag(z)], axis=-1)


def rotation_closed_form_velocity(mode, c1, c2, t):
    """Time derivative of :func:`rotation_closed_form`, in the same layout."""
    _, dz = _complex_solution(mode, c1, c2, t)
    return np.stack([np.real(dz), np.imag(dz)], axis=-1)


def tikhonov_anchor(Q, alpha, beta0, t0, x0, v0):
    """Anchor ``v = t0/(alpha-1) (x'(t0) + beta(t0) Q x(t0)) + x(t0)`` with ``beta = beta0 t^(alpha-2)``."""
    Q = _as_map(Q)
    x0 = as_vector(x0)
    beta_t0 = beta0 * t0 ** (alpha - 2.0)
    return (t0 / (alpha - 1.0)) * (as_vector(v0) + beta_t0 * Q.apply(x0)) + x0


def integrate_tikhonov_flow(Q, alpha, beta0, t0, anchor, x0, t_end, h, sample_every=1) -> Trajectory:
    """RK4 for ``x' = -beta0 t^(alpha-2) Q x - ((alpha-1)/t)(x - anchor)``.

    The returned ``v`` field holds ``x'`` at the sampled states.
    """
    Q = _as_map(Q)
    if alpha <= 1:
        raise ParameterError("alpha must exceed 1")
    if h <= 0 or t0 <= 0 or t_end <= t0:
        raise ParameterError("need h > 0 and t_end > t0 > 0")
    anchor = as_vector(anchor)
    x = as_vector(x0).copy()

    Qa = Q.matrix.__matmul__ if isinstance(Q, MatrixMap) else Q.apply

    def f(t, y):
        return -beta0 * t ** (alpha - 2.0) * Qa(y) - ((alpha - 1.0) / t) * (y - anchor)

    n = int(round((t_end - t0) / h))
    ts, xs, ds = [t0], [x.copy()], [f(t0, x)]
    for i in range(n):
        t = t0 + i * h
        k1 = f(t, x)
        k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = f(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % sample_every == 0 or i + 1 == n:
            tn = t0 + (i + 1) * h
            ts.append(tn)
            xs.append(x)
            ds.append(f(tn, x))
    X = np.array(xs)
    return Trajectory(np.array(ts), X, np.array(ds), np.array([_qnorm(Q, xi) for xi in X]))
