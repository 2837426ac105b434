"""Tomographic cumulants and the nongaussianity parameter of optical tomograms.

For an optical tomogram ``w(X, theta)`` the cumulant generating function is
``g(t, theta) = ln int w(X, theta) e^{tX} dX``. Subtracting its first two
cumulants gives the deviation

    C(t, theta) = g(t, theta) - t K1(theta) - t^2 K2(theta) / 2,

which vanishes identically for Gaussian states, and the scalar

    Ch = int_0^inf int_0^2pi C(t, theta) e^{-t} dtheta dt.
"""

import json
from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np
from numpy.polynomial.laguerre import laggauss
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from ._validation import DomainError

__all__ = [
    "MGFDivergenceError",
    "mgf",
    "cumulant_generating",
    "moments_to_cumulants",
    "central_moments",
    "cumulants",
    "gaussianity_deviation",
    "nongaussianity",
    "cumulant_report",
    "CumulantReport",
    "NongaussianityResult",
    "GAUSSIAN_CH_TOL",
]

GAUSSIAN_CH_TOL = 1e-6
TAIL_RATIO = 1e-12
GRID_POINTS = 4001
MAX_ORDER = 8


class MGFDivergenceError(ArithmeticError):
    """The tilted integrand does not decay inside the integration window."""


def _window_grid(tom, theta, t, n=GRID_POINTS, width=12.0):
    """Grid and log-integrand ``ln w + tX`` centred on the tilted peak."""
    tail = tom.tail_variance(theta)
    spread = np.sqrt(max(tom.variance(theta), tail))
    half = width * spread + 2.0
    center = tom.mean(theta) + t * tail
    for _ in range(8):
        X = np.linspace(center - half, center + half, n)
        f = tom.logpdf(X, theta) + t * X
        k = int(np.argmax(f))
        if n // 8 < k < n - n // 8:
            break
        center = X[k]
    if not np.isfinite(f[k]):
        raise MGFDivergenceError(f"tomogram vanishes on the integration window at t={t}")
    edge = max(f[0], f[-1])
    if edge > f[k] + np.log(TAIL_RATIO):
        raise MGFDivergenceError(
            f"integrand at the window edge is {np.exp(edge - f[k]):.2g} of its peak at t={t}, theta={theta}"
        )
    return X, f


def _log_weights(X):
    h = X[1] - X[0]
    lw = np.full(X.size, np.log(h))
    lw[0] = lw[-1] = np.log(h / 2)
    return lw


def cumulant_generating(tom, t, theta):
    """``g(t, theta) = ln int w(X, theta) e^{tX} dX``, evaluated in log space."""
    if t == 0:
        return 0.0
    X, f = _window_grid(tom, theta, t)
    return float(logsumexp(f + _log_weights(X)) - _log_norm(tom, theta))


def _log_norm(tom, theta):
    X, f = _window_grid(tom, theta, 0.0)
    return float(logsumexp(f + _log_weights(X)))


def mgf(tom, t, theta):
    """``<exp(tX)> = int w(X, theta) e^{tX} dX``."""
    return float(np.exp(cumulant_generating(tom, t, theta)))


def central_moments(tom, theta, n_max):
    """Mean and central moments ``mu_1 .. mu_n_max`` (``mu_1 = 0``) of ``w(., theta)``."""
    X, f = _window_grid(tom, theta, 0.0)
    w = np.exp(f + _log_weights(X) - logsumexp(f + _log_weights(X)))
    mean = float(w @ X)
    d = X - mean
    return mean, np.array([float(w @ d**k) for k in range(1, n_max + 1)])


def moments_to_cumulants(m):
    """Cumulants ``K_1 .. K_n`` from raw moments ``m_1 .. m_n``.

    Uses ``K_n = m_n - sum_{k=1}^{n-1} C(n-1, k-1) K_k m_{n-k}``.
    """
    m = np.asarray(m, dtype=float)
    k = np.zeros_like(m)
    for n in range(1, m.size + 1):
        k[n - 1] = m[n - 1] - sum(comb(n - 1, j - 1) * k[j - 1] * m[n - j - 1] for j in range(1, n))
    return k


def cumulants(tom, theta, n_max=4):
    """Tomographic cumulants ``K_1 .. K_n_max`` at phase ``theta``."""
    if not 1 <= n_max <= MAX_ORDER:
        raise DomainError(f"n_max must be in [1, {MAX_ORDER}], got {n_max}")
    mean, mu = central_moments(tom, theta, n_max)
    k = moments_to_cumulants(mu)
    k[0] = mean
    return k


def gaussianity_deviation(tom, t, theta, k12=None):
    """``C(t, theta) = g(t, theta) - t K1 - t^2 K2 / 2``; zero for Gaussian states."""
    k1, k2 = cumulants(tom, theta, 2) if k12 is None else k12
    return cumulant_generating(tom, t, theta) - t * k1 - t * t * k2 / 2


@dataclass(frozen=True)
class NongaussianityResult:
    Ch: float
    gaussian_consistent: bool
    t_range: tuple
    partial: bool
    failed_nodes: list = field(default_factory=list)


def t_nodes(n_t=32, t_max=None):
    """Nodes and weights for ``int_0^T f(t) e^{-t} dt``.

    Gauss-Laguerre when ``T`` is infinite, otherwise Gauss-Legendre on
    ``[0, T]`` with the exponential folded into the weights.
    """
    if t_max is None:
        return laggauss(n_t)
    x, w = leggauss(n_t)
    t = (x + 1) * t_max / 2
    return t, w * t_max / 2 * np.exp(-t)


def theta_nodes(n_theta=64):
    return np.arange(n_theta) * 2 * np.pi / n_theta, np.full(n_theta, 2 * np.pi / n_theta)


def nongaussianity(tom, n_t=32, n_theta=64, t_max=None):
    """``Ch = int_0^T int_0^2pi C(t, theta) e^{-t} dtheta dt`` with ``T = inf`` by default.

    Nodes where the generating function cannot be evaluated are dropped and
    reported; the result is then flagged partial with the t-range achieved.
    """
    ts, tw = t_nodes(n_t, t_max)
    thetas, thw = theta_nodes(n_theta)
    total, failed, reached = 0.0, [], 0.0
    for theta, wth in zip(thetas, thw):
        k12 = cumulants(tom, theta, 2)
        for t, wt in zip(ts, tw):
            try:
                c = gaussianity_deviation(tom, t, theta, k12)
            except MGFDivergenceError:
                failed.append((float(theta), float(t)))
                continue
            reached = max(reached, float(t))
            total += wth * wt * c
    partial = bool(failed)
    hi = reached if partial else (float("inf") if t_max is None else float(t_max))
    return NongaussianityResult(float(total), abs(total) < GAUSSIAN_CH_TOL, (0.0, hi), partial, failed)


@dataclass
class CumulantReport:
    """Cumulants, deviation function and nongaussianity on explicit grids."""

    theta_grid: list
    n_max: int
    K: list
    t_grid: list
    C_values: list
    Ch: float = None
    Ch_se: float = None
    K_se: list = None
    t_range: list = None
    flags: dict = field(default_factory=dict)
    source: str = ""

    def to_dict(self):
        return _jsonable(asdict(self))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def cumulant_rows(self):
        """Rows ``theta, K1, ..., Kn`` for plot-data export."""
        return [[th] + list(k) for th, k in zip(self.theta_grid, self.K)]

    def deviation_rows(self):
        """Rows ``theta, t, C`` for plot-data export."""
        return [
            [th, t, c]
            for th, row in zip(self.theta_grid, self.C_values)
            for t, c in zip(self.t_grid, row)
        ]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def cumulant_report(tom, theta_grid=None, n_max=4, t_grid=(0.25, 0.5, 1.0, 2.0), n_t=32, n_theta=64):
    """Cumulant table, ``C(t, theta)`` table and ``Ch`` for an analytic tomogram."""
    theta_grid = np.arange(16) * 2 * np.pi / 16 if theta_grid is None else np.asarray(theta_grid, dtype=float)
    K, C = [], []
    for theta in theta_grid:
        k = cumulants(tom, theta, n_max)
        K.append(k.tolist())
        C.append([gaussianity_deviation(tom, t, theta, k[:2]) for t in t_grid])
    ch = nongaussianity(tom, n_t=n_t, n_theta=n_theta)
    return CumulantReport(
        theta_grid=theta_grid.tolist(),
        n_max=n_max,
        K=K,
        t_grid=list(t_grid),
        C_values=C,
        Ch=ch.Ch,
        t_range=list(ch.t_range),
        flags={"gaussian_consistent": ch.gaussian_consistent, "partial_domain": ch.partial},
        source=getattr(tom, "name", "tomogram"),
    )
