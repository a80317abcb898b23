"""Test problems: skew toy, l1/ball splitting toy, Beckmann transport, geometric median.

Grid conventions for the transport problem: nodes of the ``p x p`` grid are
numbered row-major (``index = i p + j``); a flux field is an ``(n, 2)``
array with ``n = p^2`` whose first column is the component along ``i``.
``Div = -Grad^T`` with forward differences and homogeneous Neumann
boundary, so fluxes leaving the grid (``i = p-1`` for the first
component, ``j = p-1`` for the second) do not enter the divergence.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ParameterError, ShapeError
from .operators import (
    LinearMap,
    as_vector,
    group_soft_threshold,
    prox_half_sq_dist,
    project_ball,
    skew_resolvent_op,
    soft_threshold,
)
from .precond import GraphDrsSpec, PdhgProblem, build_drs, moreau_prox_conjugate, path_graph_Z

__all__ = [
    "DivergenceMap",
    "build_div",
    "skew_toy",
    "l1_ball_toy",
    "l1_ball_solution",
    "l1_ball_proxes",
    "BeckmannProblem",
    "two_bump_marginals",
    "gen_beckmann",
    "beckmann_reference",
    "gen_median",
    "median_points",
    "subgradient_residual",
]


class DivergenceMap(LinearMap):
    """Stencil form of the discrete divergence on a ``p x p`` grid.

    ``(Div s)_{ij} = sx_{ij} - sx_{i-1,j} + sy_{ij} - sy_{i,j-1}`` with
    out-of-range terms and the boundary-leaving fluxes treated as zero.
    ``apply_adjoint`` returns ``-Grad u`` as a flat ``2n`` vector.
    """

    def __init__(self, p):
        if p < 2:
            raise ParameterError(f"grid size p must be >= 2, got {p}")
        self.p = int(p)
        self.n = self.p * self.p
        self.input_dim = 2 * self.n
        self.output_dim = self.n

    def apply(self, sigma):
        p = self.p
        s = as_vector(sigma)
        if s.size != 2 * self.n:
            raise ShapeError(f"flux must have {2 * self.n} entries, got {s.size}")
        s = s.reshape(p, p, 2)
        sx = s[:, :, 0].copy()
        sy = s[:, :, 1].copy()
        sx[-1, :] = 0.0
        sy[:, -1] = 0.0
        out = sx + sy
        out[1:, :] -= sx[:-1, :]
        out[:, 1:] -= sy[:, :-1]
        return out.ravel()

    def grad(self, u):
        """Forward-difference gradient, zero on the far boundary; shape ``(n, 2)``."""
        p = self.p
        u = as_vector(u)
        if u.size != self.n:
            raise ShapeError(f"node field must have {self.n} entries, got {u.size}")
        u = u.reshape(p, p)
        g = np.zeros((p, p, 2))
        g[:-1, :, 0] = u[1:, :] - u[:-1, :]
        g[:, :-1, 1] = u[:, 1:] - u[:, :-1]
        return g.reshape(self.n, 2)

    def apply_adjoint(self, u):
        return -self.grad(u).ravel()


def build_div(p) -> DivergenceMap:
    return DivergenceMap(p)


def skew_toy(d=10, tau=0.1):
    """Resolvent of the block skew matrix; the origin is the only fixed point."""
    return skew_resolvent_op(d, tau)


L1_WEIGHT = 1e-3
BALL_CENTER = np.array([1.0, 1.0])


def l1_ball_proxes(weight=L1_WEIGHT, center=BALL_CENTER, radius=1.0, step=1.0):
    """Resolvents of ``weight |.|_1`` and of ``0.5 dist(., B(center, radius))^2``."""
    center = as_vector(center)

    def J1(w):
        return soft_threshold(w, weight * step)

    def J2(x):
        return prox_half_sq_dist(x, lambda z: project_ball(z, center, radius), step)

    return J1, J2


def l1_ball_toy(weight=L1_WEIGHT):
    """Planar Douglas-Rachford toy coupling an l1 penalty with a ball distance."""
    J1, J2 = l1_ball_proxes(weight)
    sys = build_drs(J1, J2)
    w_star, _ = l1_ball_solution(weight)
    return replace(sys, known_solution=w_star, name="l1_ball_toy")


def l1_ball_solution(weight=L1_WEIGHT):
    """Closed-form reduced fixed point and primal solution of the toy.

    The minimizer of ``weight |x|_1 + 0.5 dist(x, B((1,1), 1))^2`` lies on
    the diagonal at ``x* = (1 - 1/sqrt 2 - weight)(1, 1)`` and the reduced
    fixed point is ``w* = x* + weight (1, 1)``.
    """
    c = 1.0 - 1.0 / np.sqrt(2.0)
    x_star = (c - weight) * np.ones(2)
    return x_star + weight * np.ones(2), x_star


@dataclass(frozen=True)
class BeckmannProblem(PdhgProblem):
    """Minimal-flow transport problem wired as a primal-dual saddle problem."""

    mu: np.ndarray = field(default=None)
    nu: np.ndarray = field(default=None)
    p: int = 0

    @property
    def rhs(self):
        return (self.mu - self.nu).ravel()

    def objective(self, sigma):
        s = as_vector(sigma).reshape(-1, 2)
        return float(np.sum(np.sqrt(np.sum(s * s, axis=1))))

    def feasibility(self, sigma):
        return float(np.linalg.norm(self.L.apply(sigma) - self.rhs))

    def gstar_value(self, y):
        return float(np.dot(self.rhs, np.ravel(y)))


def two_bump_marginals(p, patch=3):
    """Normalized indicators of ``patch x patch`` squares at opposite grid corners."""
    if patch > p:
        raise ParameterError("patch larger than the grid")
    mu = np.zeros((p, p))
    mu[:patch, :patch] = 1.0
    nu = np.zeros((p, p))
    nu[-patch:, -patch:] = 1.0
    return mu / mu.sum(), nu / nu.sum()


def gen_beckmann(p=20, mu_mode="two_points", seed=0, tau1=1e-3, tau2=None, mu=None, nu=None):
    """Transport instance ``min ||s||_{2,1}`` subject to ``Div s = mu - nu``.

    ``tau2`` defaults to ``0.1 / tau1``. Explicit ``mu`` and ``nu`` override
    ``mu_mode``; ``"random"`` draws uniform weights from ``default_rng(seed)``.
    """
    if mu is None or nu is None:
        if mu_mode == "two_points":
            mu, nu = two_bump_marginals(p)
        elif mu_mode == "random":
            rng = np.random.default_rng(seed)
            mu = rng.random((p, p))
            nu = rng.random((p, p))
            mu /= mu.sum()
            nu /= nu.sum()
        else:
            raise ParameterError(f"unknown marginal mode {mu_mode!r}")
    mu = np.asarray(mu, dtype=float).reshape(p, p)
    nu = np.asarray(nu, dtype=float).reshape(p, p)
    for name, m in (("mu", mu), ("nu", nu)):
        if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-12:
            raise ParameterError(f"{name} must be a nonnegative vector summing to 1")
    if tau2 is None:
        tau2 = 0.1 / tau1
    b = (mu - nu).ravel()
    n = p * p

    def prox_f(s, tau):
        return group_soft_threshold(np.reshape(s, (n, 2)), tau)

    def prox_g(_, tau):
        return b

    return BeckmannProblem(
        prox_f=prox_f,
        prox_gstar=moreau_prox_conjugate(prox_g),
        L=build_div(p),
        tau1=tau1,
        tau2=tau2,
        x_shape=(n, 2),
        y_shape=(n,),
        mu=mu,
        nu=nu,
        p=p,
    )


def beckmann_reference(problem: BeckmannProblem):
    """High-accuracy saddle point from a conic interior-point solve.

    Returns ``(sigma*, y*, objective)``; ``y*`` is the multiplier of the
    divergence constraint, which is a saddle point of
    ``||s||_{2,1} + <Div s - (mu - nu), y>``. Needs the optional ``cvxpy``.
    """
    import cvxpy as cp
    from scipy import sparse

    p = problem.p
    n = p * p
    D = sparse.csr_matrix(problem.L.to_dense())
    s = cp.Variable(2 * n)
    con = [D @ s == problem.rhs]
    obj = cp.sum(cp.norm(cp.reshape(s, (n, 2), order="C"), 2, axis=1))
    prob = cp.Problem(cp.Minimize(obj), con)
    prob.solve(solver=cp.CLARABEL)
    if prob.status != "optimal":
        raise RuntimeError(f"reference solve ended with status {prob.status}")
    return np.asarray(s.value).reshape(n, 2), np.asarray(con[0].dual_value), float(prob.value)


def median_points(N, d, seed=0):
    return np.random.default_rng(seed).standard_normal((N, d))


def gen_median(N=20, d=10, seed=0, points=None, Z=None):
    """Graph splitting for ``min_x sum_i ||x - x_i||`` with standard normal samples.

    Each term has the shifted soft-threshold resolvent
    ``v -> x_i + max(0, 1 - tau/||v - x_i||)(v - x_i)``.
    """
    if points is None:
        if N < 2:
            raise ParameterError("need at least two points")
        points = median_points(N, d, seed)
    points = np.asarray(points, dtype=float)
    N, d = points.shape
    if N < 2:
        raise ParameterError("need at least two points")

    def make(c):
        def prox(v, tau):
            r = v - c
            nr = np.linalg.norm(r)
            if nr <= tau:
                return c.copy()
            return c + (1.0 - tau / nr) * r

        return prox

    spec = GraphDrsSpec([make(points[i].copy()) for i in range(N)], path_graph_Z(N) if Z is None else Z, None, 1.0)
    return spec, points


def subgradient_residual(x, points) -> float:
    """Norm of ``sum_i (x - x_i)/||x - x_i||`` over points distinct from ``x``."""
    r = as_vector(x)[None, :] - np.asarray(points, dtype=float)
    nr = np.linalg.norm(r, axis=1)
    keep = nr > 0
    return float(np.linalg.norm((r[keep] / nr[keep, None]).sum(axis=0)))
