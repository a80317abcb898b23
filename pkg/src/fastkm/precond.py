"""Degenerate preconditioned proximal-point systems in reduced coordinates.

A :class:`ResolventSystem` wraps one application of a preconditioned
resolvent ``J`` acting on a reduced variable (``u = (x, y)`` for PDHG, ``w``
for Douglas-Rachford, ``w`` of shape ``(N-1, d)`` for the graph splitting).
Each evaluation also hands back the shadow points computed on the way,
which are the actual solution estimates.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import ParameterError, ParameterWarning, ShapeError
from .iteration import ScheduleParams, run_fast_km
from .operators import LinearMap, as_vector, dot, estimate_operator_norm

__all__ = [
    "ResolventSystem",
    "PdhgProblem",
    "build_pdhg",
    "moreau_prox_conjugate",
    "build_drs",
    "path_graph_Z",
    "GraphDrsSpec",
    "build_graph_drs",
    "run_fast_ppp",
    "variance",
]


@dataclass(frozen=True)
class ResolventSystem:
    """Reduced-variable resolvent oracle.

    Parameters
    ----------
    reduced_shape : tuple
        Shape of the iterate the resolvent acts on.
    resolvent : callable
        ``w -> (J(w), shadows)``.
    inner : callable
        Semi-inner product ``<a, b>_M`` expressed in reduced coordinates.
    lambda1 : float, optional
        Smallest nonzero eigenvalue of the graph Laplacian (graph splitting only).
    known_solution : ndarray, optional
        A reduced fixed point, when one is available in closed form.
    unpack : callable, optional
        Splits a reduced vector into its named blocks.
    """

    reduced_shape: tuple
    resolvent: Callable
    inner: Callable = field(default=dot)
    lambda1: Optional[float] = None
    known_solution: Optional[np.ndarray] = None
    unpack: Optional[Callable] = None
    name: str = ""

    @property
    def reduced_dim(self) -> int:
        return int(np.prod(self.reduced_shape))

    def J(self, w):
        return self.resolvent(w)[0]

    def seminorm_sq(self, a, b) -> float:
        d = as_vector(a) - as_vector(b)
        return self.inner(d, d)


@dataclass(frozen=True)
class PdhgProblem:
    """Saddle problem ``min_x max_y f(x) + <Lx, y> - g*(y)`` with PDHG steps.

    ``prox_f`` and ``prox_gstar`` use the ``prox(v, tau)`` convention.
    ``x_shape`` and ``y_shape`` give the block shapes seen by the proxes;
    ``L`` always acts on flattened vectors. On construction the product
    ``tau1 tau2 ||L||^2`` is estimated and stored in ``step_product``; a
    value of 1 or more triggers a warning but is not rejected.
    """

    prox_f: Callable
    prox_gstar: Callable
    L: LinearMap
    tau1: float
    tau2: float
    x_shape: Optional[tuple] = None
    y_shape: Optional[tuple] = None
    step_product: float = field(init=False, default=math.nan)

    def __post_init__(self):
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ParameterError(f"step sizes must be positive, got tau1={self.tau1}, tau2={self.tau2}")
        if self.x_shape is None:
            object.__setattr__(self, "x_shape", (self.L.input_dim,))
        if self.y_shape is None:
            object.__setattr__(self, "y_shape", (self.L.output_dim,))
        if int(np.prod(self.x_shape)) != self.L.input_dim or int(np.prod(self.y_shape)) != self.L.output_dim:
            raise ShapeError("block shapes do not match the linear map")
        nrm = estimate_operator_norm(self.L, iters=200)
        prod = self.tau1 * self.tau2 * nrm * nrm
        object.__setattr__(self, "step_product", prod)
        if prod >= 1:
            warnings.warn(
                f"tau1*tau2*||L||^2 = {prod:.4g} >= 1; the metric is not positive definite",
                ParameterWarning,
                stacklevel=3,
            )

    @property
    def step_condition_ok(self) -> bool:
        return self.step_product < 1


def build_pdhg(p: PdhgProblem) -> ResolventSystem:
    """One primal-dual sweep as a resolvent on ``u = (x, y)`` stored flat.

    ``x+ = prox_f(x - tau1 L^T y)``, ``y+ = prox_g*(y + tau2 L(2 x+ - x))``.
    The metric is ``<a, b>_M = <ax, bx>/tau1 - <L ax, by> - <L bx, ay> + <ay, by>/tau2``.
    """
    nx = p.L.input_dim
    ny = p.L.output_dim
    L = p.L
    t1, t2 = p.tau1, p.tau2

    def unpack(u):
        u = as_vector(u)
        return u[:nx].reshape(p.x_shape), u[nx:].reshape(p.y_shape)

    def pack(x, y):
        return np.concatenate([np.ravel(x), np.ravel(y)])

    def resolvent(u):
        x, y = unpack(u)
        xf = np.ravel(x)
        xp = as_vector(p.prox_f((xf - t1 * np.ravel(L.apply_adjoint(np.ravel(y)))).reshape(p.x_shape), t1))
        xbar = 2.0 * np.ravel(xp) - xf
        yp = as_vector(p.prox_gstar((np.ravel(y) + t2 * np.ravel(L.apply(xbar))).reshape(p.y_shape), t2))
        return pack(xp, yp), (xp.reshape(p.x_shape), yp.reshape(p.y_shape))

    def inner(a, b):
        a = as_vector(a)
        b = as_vector(b)
        ax, ay = a[:nx], a[nx:]
        bx, by = b[:nx], b[nx:]
        return (
            dot(ax, bx) / t1
            - dot(np.ravel(L.apply(ax)), by)
            - dot(np.ravel(L.apply(bx)), ay)
            + dot(ay, by) / t2
        )

    return ResolventSystem((nx + ny,), resolvent, inner, unpack=unpack, name="pdhg")


def moreau_prox_conjugate(prox_g):
    """Prox of the conjugate: ``prox_{tau g*}(y) = y - tau prox_{g/tau}(y / tau)``."""

    def prox_gstar(y, tau):
        if tau <= 0:
            raise ParameterError(f"tau must be positive, got {tau}")
        y = as_vector(y)
        return y - tau * as_vector(prox_g(y / tau, 1.0 / tau))

    return prox_gstar


def build_drs(JA1, JA2) -> ResolventSystem:
    """Douglas-Rachford in its reduced form on a single block ``w``.

    ``x1 = JA1(w)``, ``x2 = JA2(2 x1 - w)``, ``J(w) = w + x2 - x1``. The
    reduced metric is the plain Euclidean one.
    """

    def resolvent(w):
        w = as_vector(w)
        x1 = as_vector(JA1(w))
        x2 = as_vector(JA2(2.0 * x1 - w))
        return w + x2 - x1, (x1, x2)

    return ResolventSystem(None, resolvent, dot, name="drs")


def path_graph_Z(N) -> np.ndarray:
    """Incidence-type matrix of the path graph: ``Z[j, j] = 1``, ``Z[j+1, j] = -1``."""
    if N < 2:
        raise ParameterError(f"N must be >= 2, got {N}")
    Z = np.zeros((N, N - 1))
    idx = np.arange(N - 1)
    Z[idx, idx] = 1.0
    Z[idx + 1, idx] = -1.0
    return Z


@dataclass(frozen=True)
class GraphDrsSpec:
    """Data of the graph splitting for ``0 in sum_i A_i(x)``.

    ``proxes[i](v, tau)`` evaluates the resolvent of ``tau A_i``. ``Z`` and
    ``Zhat`` are ``N x (N-1)``; ``Zhat`` may be None, meaning zero.
    """

    proxes: Sequence[Callable]
    Z: np.ndarray
    Zhat: Optional[np.ndarray] = None
    tau: float = 1.0

    def __post_init__(self):
        Z = np.array(self.Z, dtype=float)
        N = len(self.proxes)
        if Z.shape != (N, N - 1):
            raise ShapeError(f"Z must have shape {(N, N - 1)}, got {Z.shape}")
        Zh = np.zeros_like(Z) if self.Zhat is None else np.array(self.Zhat, dtype=float)
        if Zh.shape != Z.shape:
            raise ShapeError("Zhat must have the shape of Z")
        if self.tau <= 0:
            raise ParameterError("tau must be positive")
        ones = np.ones(N)
        scale = max(1.0, np.abs(Z).max())
        if np.abs(Z.T @ ones).max() > 1e-12 * scale * N:
            raise ParameterError("Z^T 1 must vanish")
        if np.linalg.matrix_rank(Z) != N - 1:
            raise ParameterError("Z must have rank N-1")
        if np.abs(Zh.T @ ones).max() > 1e-12 * max(1.0, np.abs(Zh).max()) * N:
            raise ParameterError("Zhat^T 1 must vanish")
        d = np.diag(Z @ Z.T + Zh @ Zh.T)
        if np.any(d <= 0):
            raise ParameterError("every diagonal entry of L + Lhat must be positive")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "Zhat", Zh)


def build_graph_drs(spec: GraphDrsSpec) -> ResolventSystem:
    """Graph splitting as a resolvent on ``w`` of shape ``(N-1, d)``.

    The shadows ``x_1 .. x_N`` come from a forward substitution:
    ``x_i = J_{(tau/d_i) A_i}((Zw)_i / d_i - (2/d_i) sum_{h<i} (L + Lhat)_{hi} x_h)``,
    and ``J(w) = w - Z^T X``.
    """
    Z = spec.Z
    S = Z @ Z.T + spec.Zhat @ spec.Zhat.T
    dvec = np.diag(S).copy()
    N = Z.shape[0]
    lam = np.sort(np.linalg.eigvalsh(Z @ Z.T))
    lambda1 = float(lam[1])
    proxes = list(spec.proxes)
    tau = spec.tau
    lower = [np.nonzero(S[:i, i])[0] for i in range(N)]

    def resolvent(w):
        w = as_vector(w)
        if w.ndim != 2 or w.shape[0] != N - 1:
            raise ShapeError(f"w must have shape (N-1, d) = ({N - 1}, d), got {w.shape}")
        Zw = Z @ w
        X = np.empty((N, w.shape[1]))
        for i in range(N):
            acc = Zw[i].copy()
            for h in lower[i]:
                acc -= 2.0 * S[h, i] * X[h]
            X[i] = proxes[i](acc / dvec[i], tau / dvec[i])
        return w - Z.T @ X, X

    return ResolventSystem(None, resolvent, dot, lambda1=lambda1, name="graph_drs")


def variance(points) -> float:
    """Mean squared deviation ``(1/N) sum_i ||x_i - mean||^2`` of N equally sized blocks."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = X.reshape(X.shape[0], -1)
    if X.shape[0] < 1:
        raise ShapeError("need at least one block")
    dev = X - X.mean(axis=0)
    return float(np.sum(dev * dev) / X.shape[0])


def run_fast_ppp(
    sys: ResolventSystem,
    p: ScheduleParams,
    w_m1,
    w0,
    n,
    *,
    z_star=None,
    energy_lambda=None,
    snapshot_every=0,
    monitor=None,
    keep_shadows=False,
):
    """Fast iteration on ``I + s (J - I)`` in reduced coordinates.

    Row ``k`` of the trace holds the reduced residual ``||w^k - J(w^k)||_M``
    and, for graph systems, the variance of the shadows of ``J(w^k)``.

    Parameters
    ----------
    monitor : callable, optional
        ``monitor(k, w, Jw, shadows) -> dict`` evaluated after each resolvent.
    keep_shadows : bool
        Keep the shadows of every step in ``trace.metadata["shadow_history"]``.
    """
    w0 = as_vector(w0)
    w_m1 = as_vector(w_m1)
    if w0.shape != w_m1.shape:
        raise ShapeError("w_m1 and w0 must share a shape")
    if sys.reduced_shape is not None and w0.size != sys.reduced_dim:
        raise ShapeError(f"expected {sys.reduced_dim} reduced entries, got {w0.size}")
    last = {}
    history = []

    def J(w):
        nxt, sh = sys.resolvent(w)
        last["Jw"] = nxt
        last["shadows"] = sh
        return nxt

    def residual_fn(w, _):
        return math.sqrt(max(sys.seminorm_sq(w, last["Jw"]), 0.0))

    def shadow_variance():
        return variance(last["shadows"])

    variance_fn = shadow_variance if sys.lambda1 is not None else None

    def mon(k, w, _):
        if keep_shadows:
            history.append(last["shadows"])
        if monitor is None:
            return None
        return monitor(k, w, last["Jw"], last["shadows"])

    trace = run_fast_km(
        J, w_m1, w0, p, n, z_star=z_star, energy_lambda=energy_lambda, inner=sys.inner,
        residual_fn=residual_fn, variance_fn=variance_fn, snapshot_every=snapshot_every,
        monitor=mon,
    )
    trace.shadows = last.get("shadows") if n > 0 else None
    trace.metadata["system"] = sys.name
    if keep_shadows:
        trace.metadata["shadow_history"] = history
    return trace
