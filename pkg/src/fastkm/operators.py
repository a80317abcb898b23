"""Vector algebra, linear maps and proximal building blocks.

Vectors are plain float64 ``numpy`` arrays. Any array shape is allowed and
is treated as an element of R^n with n = ``a.size``; inner products and
norms always act on the flattened entries.

Proximal maps follow the calling convention ``prox(v, tau)`` and return
``argmin_x f(x) + ||x - v||^2 / (2 tau)``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import ParameterError, ShapeError

__all__ = [
    "as_vector",
    "dot",
    "norm",
    "LinearMap",
    "MatrixMap",
    "FunctionMap",
    "NonexpansiveOp",
    "estimate_operator_norm",
    "soft_threshold",
    "group_soft_threshold",
    "prox_half_sq_dist",
    "project_ball",
    "skew_resolvent_op",
    "averaged_map",
]


def as_vector(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def dot(a, b) -> float:
    """Euclidean inner product of two equally shaped arrays."""
    a = as_vector(a)
    b = as_vector(b)
    _check_same_shape(a, b)
    return float(np.dot(a.ravel(), b.ravel()))


def norm(a) -> float:
    a = as_vector(a)
    return float(np.sqrt(np.dot(a.ravel(), a.ravel())))


class LinearMap:
    """A linear map between flat coordinate spaces.

    Subclasses implement :meth:`apply` and :meth:`apply_adjoint`. Inputs may
    carry any shape whose size equals ``input_dim``; outputs are returned
    flat unless the subclass says otherwise.
    """

    input_dim: int
    output_dim: int

    def apply(self, x):
        raise NotImplementedError

    def apply_adjoint(self, y):
        raise NotImplementedError

    def __call__(self, x):
        return self.apply(x)

    @property
    def T(self):
        return _AdjointMap(self)

    def to_dense(self) -> np.ndarray:
        """Materialize the map column by column. Only meant for small maps."""
        cols = []
        for i in range(self.input_dim):
            e = np.zeros(self.input_dim)
            e[i] = 1.0
            cols.append(np.ravel(self.apply(e)))
        return np.column_stack(cols) if cols else np.zeros((self.output_dim, 0))


class _AdjointMap(LinearMap):
    def __init__(self, base):
        self.base = base
        self.input_dim = base.output_dim
        self.output_dim = base.input_dim

    def apply(self, x):
        return self.base.apply_adjoint(x)

    def apply_adjoint(self, y):
        return self.base.apply(y)


class MatrixMap(LinearMap):
    """Dense matrix backed map. ``apply`` also accepts (n, m) batches."""

    def __init__(self, matrix):
        self.matrix = np.array(matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ShapeError("matrix must be two-dimensional")
        self.output_dim, self.input_dim = self.matrix.shape
        self.matrix.setflags(write=False)

    def apply(self, x):
        x = as_vector(x)
        if x.shape[0] != self.input_dim:
            raise ShapeError(f"expected leading dimension {self.input_dim}, got {x.shape}")
        return self.matrix @ x

    def apply_adjoint(self, y):
        y = as_vector(y)
        if y.shape[0] != self.output_dim:
            raise ShapeError(f"expected leading dimension {self.output_dim}, got {y.shape}")
        return self.matrix.T @ y

    def to_dense(self):
        return np.array(self.matrix)


class FunctionMap(LinearMap):
    """Closure backed map; the caller guarantees linearity and adjointness."""

    def __init__(self, apply, apply_adjoint, input_dim, output_dim):
        self._apply = apply
        self._adjoint = apply_adjoint
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)

    def apply(self, x):
        return self._apply(as_vector(x))

    def apply_adjoint(self, y):
        return self._adjoint(as_vector(y))


@dataclass(frozen=True)
class NonexpansiveOp:
    """A (claimed) nonexpansive operator ``T`` on R^dim.

    Calling the object evaluates ``T``. ``known_fixed_point`` is optional
    metadata used by tests and diagnostics.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    dim: int
    known_fixed_point: Optional[np.ndarray] = None
    name: str = ""

    def __call__(self, x):
        return self.eval(x)


def estimate_operator_norm(L, iters=100, seed=0) -> float:
    """Lower estimate of ``||L||`` by power iteration on ``L^T L``.

    The returned value ``||L v_k||`` (with ``v_k`` normalized) is
    nondecreasing in ``iters`` and converges to the largest singular value.
    """
    if iters < 1:
        raise ParameterError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(L.input_dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        Lv = np.ravel(L.apply(v))
        est = float(np.linalg.norm(Lv))
        if est == 0.0:
            return 0.0
        w = np.ravel(L.apply_adjoint(Lv))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(np.ravel(L.apply(v))))


def soft_threshold(v, tau):
    """Proximal map of ``tau * ||.||_1``."""
    if tau < 0:
        raise ParameterError(f"tau must be nonnegative, got {tau}")
    v = as_vector(v)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def group_soft_threshold(sigma, tau):
    """Proximal map of ``tau * sum_i ||sigma_i||_2`` over the rows of ``sigma``.

    Rows with zero norm stay at zero.
    """
    if tau < 0:
        raise ParameterError(f"tau must be nonnegative, got {tau}")
    sigma = as_vector(sigma)
    if sigma.ndim != 2:
        raise ShapeError("group_soft_threshold expects an (n, m) array")
    row_norms = np.sqrt(np.sum(sigma * sigma, axis=1, keepdims=True))
    safe = np.where(row_norms > 0, row_norms, 1.0)
    scale = np.where(row_norms > 0, np.maximum(0.0, 1.0 - tau / safe), 0.0)
    return scale * sigma


def prox_half_sq_dist(x, project, tau):
    """Proximal map of ``tau/2 * dist(., C)^2`` given the projection onto C."""
    if tau < 0:
        raise ParameterError(f"tau must be nonnegative, got {tau}")
    x = as_vector(x)
    return (x + tau * project(x)) / (1.0 + tau)


def project_ball(x, center, radius):
    """Euclidean projection onto the closed ball B(center, radius)."""
    if radius <= 0:
        raise ParameterError("radius must be positive")
    x = as_vector(x)
    center = as_vector(center)
    diff = x - center
    dist = norm(diff)
    if dist <= radius:
        return x
    return center + (radius / dist) * diff


def skew_resolvent_op(d, tau) -> NonexpansiveOp:
    """Resolvent ``(I + tau*S)^{-1}`` of the block skew matrix ``S = [[0, I], [-I, 0]]``.

    Uses the closed form ``(1 + tau^2)^{-1} [[I, -tau I], [tau I, I]]``.
    The origin is the unique fixed point.
    """
    if d <= 0 or d % 2:
        raise ParameterError(f"dimension must be a positive even integer, got {d}")
    if tau <= 0:
        raise ParameterError("tau must be positive")
    h = d // 2
    c = 1.0 / (1.0 + tau * tau)

    def T(x):
        x = as_vector(x)
        a, b = x[:h], x[h:]
        return np.concatenate([c * (a - tau * b), c * (tau * a + b)])

    return NonexpansiveOp(T, d, known_fixed_point=np.zeros(d), name=f"skew_resolvent(d={d}, tau={tau})")


def averaged_map(T, s) -> NonexpansiveOp:
    """Relaxed operator ``x -> (1 - s) x + s T(x)`` with ``s`` in (0, 2].

    For ``s > 1`` the result is nonexpansive only when ``T`` is firmly
    nonexpansive; that is the caller's responsibility.
    """
    if not 0 < s <= 2:
        raise ParameterError(f"step s must lie in (0, 2], got {s}")
    if s == 1:
        return T if isinstance(T, NonexpansiveOp) else NonexpansiveOp(T, -1)

    def Ts(x):
        return (1.0 - s) * x + s * T(x)

    dim = getattr(T, "dim", -1)
    fp = getattr(T, "known_fixed_point", None)
    return NonexpansiveOp(Ts, dim, known_fixed_point=fp, name=f"averaged(s={s})")
