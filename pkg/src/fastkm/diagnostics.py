"""Convergence measures, iteration traces and the discrete Lyapunov energy.

Conventions
-----------
A trace row with index ``k`` describes the iterate ``x^k``: its residual
``||x^k - T(x^k)||``, its gap value and, for momentum runs, the energy
``E_{k+1}`` which is the first energy computable once ``T(x^k)`` is known.
Row ``k`` is written during step ``k``, the step that produces ``x^{k+1}``.
A run with budget ``n`` therefore has rows ``0 .. n-1`` and stores ``x^n``
as ``x_final``.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .exceptions import HistoryError, ParameterError, ShapeError
from .operators import as_vector, dot

__all__ = [
    "TraceRecord",
    "IterationTrace",
    "CSV_COLUMNS",
    "residual",
    "gap_function",
    "primal_dual_gap",
    "LyapunovState",
    "lyapunov_energy",
    "ExplicitBounds",
    "explicit_residual_bound",
    "rate_slope",
]

CSV_COLUMNS = ("k", "residual", "residual_times_k", "gap", "energy", "variance")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    residual: float
    gap: Optional[float] = None
    energy: Optional[float] = None
    variance: Optional[float] = None


def _fmt(value):
    if value is None:
        return ""
    return repr(float(value))


class IterationTrace:
    """Append-only record of a solver run.

    Attributes
    ----------
    records : list of TraceRecord
        One row per step, with strictly increasing ``k``.
    extras : dict
        Named per-row series produced by monitors (for example feasibility
        of a primal iterate). Each list is aligned with ``records``.
    snapshots : dict
        ``{k: x^k}`` for the thinned set of retained iterates. The final
        iterate is always retained.
    x_final : ndarray or None
        The last produced iterate.
    shadows : tuple or None
        Shadow points of the last resolvent evaluation, for splitting runs.
    metadata : dict
        Free-form run description (parameters, problem id, wall time).
    """

    def __init__(self, metadata=None):
        self.records = []
        self.extras = {}
        self.snapshots = {}
        self.x_final = None
        self.shadows = None
        self.metadata = dict(metadata or {})

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, record: TraceRecord, extras=None):
        if self.records and record.k <= self.records[-1].k:
            raise ValueError(f"trace index must increase: {record.k} after {self.records[-1].k}")
        if not record.residual >= 0:
            raise ValueError(f"residual must be nonnegative, got {record.residual}")
        row = len(self.records)
        self.records.append(record)
        for name, value in (extras or {}).items():
            series = self.extras.setdefault(name, [None] * row)
            series.append(value)
        for series in self.extras.values():
            if len(series) < row + 1:
                series.append(None)

    def _column(self, name):
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records], dtype=float)

    @property
    def k(self):
        return np.array([r.k for r in self.records], dtype=np.int64)

    @property
    def residual(self):
        return self._column("residual")

    @property
    def gap(self):
        return self._column("gap")

    @property
    def energy(self):
        return self._column("energy")

    @property
    def variance(self):
        return self._column("variance")

    def extra(self, name):
        return np.array([np.nan if v is None else v for v in self.extras[name]], dtype=float)

    def iterate(self, k):
        """Return the retained snapshot ``x^k``; raises ``KeyError`` if thinned out."""
        return self.snapshots[k]

    def to_csv(self, target=None):
        """Write the trace with the fixed column layout.

        Floats use ``repr`` so the text round-trips exactly; missing values
        are empty fields. Returns the CSV text when ``target`` is None.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            writer.writerow([
                str(r.k),
                _fmt(r.residual),
                _fmt(r.k * r.residual),
                _fmt(r.gap),
                _fmt(r.energy),
                _fmt(r.variance),
            ])
        text = buf.getvalue()
        if target is None:
            return text
        with open(target, "w", newline="") as fh:
            fh.write(text)
        return text


def residual(x, Tx, inner: Callable = dot) -> float:
    """Fixed-point residual ``||x - Tx||`` in the norm induced by ``inner``."""
    x = as_vector(x)
    Tx = as_vector(Tx)
    if x.shape != Tx.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {Tx.shape}")
    d = x - Tx
    return math.sqrt(max(inner(d, d), 0.0))


def gap_function(x, Tx, z_star, inner: Callable = dot) -> float:
    """``<x - Tx, Tx - z*> + 0.5 ||x - Tx||^2``.

    Nonnegative whenever ``T`` is nonexpansive and ``z*`` is a fixed point,
    because ``(I - T)/2`` is firmly nonexpansive.
    """
    x = as_vector(x)
    Tx = as_vector(Tx)
    q = x - Tx
    return inner(q, Tx - as_vector(z_star)) + 0.5 * inner(q, q)


def primal_dual_gap(f_value, gstar_value, L, x, y, x_star, y_star) -> float:
    """Primal-dual gap ``Lag(x, y*) - Lag(x*, y)``.

    The Lagrangian is ``Lag(x, y) = f(x) + <Lx, y> - g*(y)``. ``f_value`` and
    ``gstar_value`` are callables returning function values.
    """
    lag_x = f_value(x) + dot(np.ravel(L.apply(np.ravel(x))), y_star) - gstar_value(y_star)
    lag_y = f_value(x_star) + dot(np.ravel(L.apply(np.ravel(x_star))), y) - gstar_value(y)
    return float(lag_x - lag_y)


@dataclass(frozen=True)
class LyapunovState:
    """Parameters of the discrete energy ``E_k``.

    Parameters
    ----------
    lam : float
        Energy weight in ``[0, alpha - 1]``.
    eta : float
        Interpolation parameter in ``(0, 1)``; ``theta = 1 + eta (alpha - 2)``.
    alpha, sigma : float
        Schedule parameters of the run being measured.
    z_star : ndarray
        A fixed point of the operator.
    inner : callable
        Inner product; swap in an M-inner product for preconditioned systems.
    """

    lam: float
    eta: float
    alpha: float
    sigma: float
    z_star: np.ndarray
    inner: Callable = field(default=dot)

    def __post_init__(self):
        if not 0 <= self.lam <= self.alpha - 1:
            raise ParameterError(f"lambda must lie in [0, alpha-1], got {self.lam}")
        if not 0 < self.eta < 1:
            raise ParameterError(f"eta must lie in (0, 1), got {self.eta}")

    def t(self, k):
        return k - 1 + self.sigma

    @property
    def c(self):
        return self.lam * (self.alpha - 1 - self.lam)


def lyapunov_energy(k, x_prev, z_k, z_km1, st: LyapunovState) -> float:
    """Energy ``E_k`` from the window ``x^{k-1}``, ``z^k = T(x^{k-1})``, ``z^{k-1} = T(x^{k-2})``.

    ``E_k = d_k <Q, z^k - z*> + (d_k + xi_k)/2 ||Q||^2 + c/2 ||z^{k-1} - z*||^2 + 1/2 ||v^k||^2``
    with ``Q = x^{k-1} - z^k``, ``d_k = eta lam t_{k-1}``,
    ``xi_k = (1 - eta) eta t_{k-1}^2``, ``c = lam (alpha - 1 - lam)`` and
    ``v^k = lam (z^{k-1} - z*) + t_{k-1} (z^k - z^{k-1} + (1 - eta) Q)``.
    """
    if k < 1:
        raise HistoryError("the energy is defined for k >= 1")
    if x_prev is None or z_k is None or z_km1 is None:
        raise HistoryError(f"energy at k={k} needs x^(k-1), T(x^(k-1)) and T(x^(k-2))")
    ip = st.inner
    zs = st.z_star
    t = st.t(k - 1)
    Q = x_prev - z_k
    delta = st.eta * st.lam * t
    xi = (1.0 - st.eta) * st.eta * t * t
    v = st.lam * (z_km1 - zs) + t * (z_k - z_km1 + (1.0 - st.eta) * Q)
    QQ = ip(Q, Q)
    return (
        delta * ip(Q, z_k - zs)
        + 0.5 * (delta + xi) * QQ
        + 0.5 * st.c * ip(z_km1 - zs, z_km1 - zs)
        + 0.5 * ip(v, v)
    )


class ExplicitBounds(NamedTuple):
    residual_sq: float
    gap: Optional[float]


def explicit_residual_bound(E1, eta, t_km1, alpha=None) -> ExplicitBounds:
    """Non-asymptotic bounds driven by the first energy ``E_1``.

    Returns ``2 E1 / (eta (1 - eta) t^2)`` for the squared residual at
    ``x^{k-1}`` and, when ``alpha`` is given, ``E1 / (eta (alpha - 1) t)``
    for the gap function at the same iterate. ``t = t_{k-1}`` may be an
    array, in which case both bounds are arrays of the same shape.
    """
    if not 0 < eta < 1:
        raise ParameterError(f"eta must lie strictly inside (0, 1), got {eta}")
    if np.any(np.asarray(t_km1) <= 0):
        raise ParameterError(f"t must be positive, got {t_km1}")
    res = 2.0 * E1 / (eta * (1.0 - eta) * t_km1 * t_km1)
    gap = None
    if alpha is not None:
        if alpha <= 1:
            raise ParameterError("alpha must exceed 1 for the gap bound")
        gap = E1 / (eta * (alpha - 1.0) * t_km1)
    return ExplicitBounds(res, gap)


def rate_slope(ks, values, window) -> float:
    """Least-squares slope of ``log(value)`` against ``log(k)`` on ``[k_lo, k_hi]``."""
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (ks >= lo) & (ks <= hi)
    if mask.sum() < 10:
        raise ParameterError(f"need at least 10 points in window {window}, got {int(mask.sum())}")
    v = values[mask]
    if np.any(~(v > 0)):
        raise ParameterError("rate_slope needs strictly positive values")
    kk = ks[mask]
    if np.any(kk <= 0):
        raise ParameterError("rate_slope needs positive indices")
    slope, _ = np.polyfit(np.log(kk), np.log(v), 1)
    return float(slope)
