"""Estimators fitted on measured data, following the scikit-learn conventions.

* :class:`EmpiricalTomogram` turns homodyne samples ``(theta, x)`` into a
  smooth optical tomogram (per-phase Gaussian KDE).
* :class:`CumulantEstimator` estimates cumulants, ``C(t, theta)`` and ``Ch``
  directly from sample averages of ``e^{tx}``, with bootstrap errors.
* :class:`DensityMatrixReconstructor` inverts qudit tomograms.

Sample arrays have shape ``(n_samples, 2)`` with columns ``theta, x``.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import gaussian_kde
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import DomainError
from .cumulant import CumulantReport, moments_to_cumulants, t_nodes
from .cvstate import Tomogram
from .qudit import reconstruct_density, unitary_tomogram

__all__ = [
    "HomodyneSamples",
    "EmpiricalTomogram",
    "CumulantEstimator",
    "DensityMatrixReconstructor",
    "sample_homodyne",
    "bin_phases",
]

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class HomodyneSamples:
    """Quadrature records ``(theta, x)``; phases are wrapped into ``[0, 2 pi)``."""

    theta: np.ndarray
    x: np.ndarray
    source: str = ""

    def __post_init__(self):
        theta = np.mod(np.asarray(self.theta, dtype=float), TWO_PI)
        x = np.asarray(self.x, dtype=float)
        if theta.shape != x.shape or theta.ndim != 1:
            raise DomainError("theta and x must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(x))):
            raise DomainError("homodyne samples must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "x", x)

    @property
    def count(self):
        return self.x.size

    def as_array(self):
        return np.column_stack([self.theta, self.x])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader, [])]
            if header != ["theta", "x"]:
                raise DomainError(f"{path}: expected header 'theta,x', got {','.join(header)!r}")
            rows = [(float(a), float(b)) for a, b in reader]
        if not rows:
            raise DomainError(f"{path}: no samples")
        data = np.array(rows)
        return cls(data[:, 0], data[:, 1], source=str(path))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "x"])
            writer.writerows(zip(self.theta.tolist(), self.x.tolist()))


def _as_samples(X):
    if isinstance(X, HomodyneSamples):
        return X
    X = check_array(X, ensure_min_samples=1)
    if X.shape[1] != 2:
        raise DomainError(f"samples need columns (theta, x), got {X.shape[1]} columns")
    return HomodyneSamples(X[:, 0], X[:, 1])


def bin_phases(theta, n_bins):
    """Assign phases to bins; returns ``(bin_index, centers)``.

    Data taken at ``<= n_bins`` discrete phase settings keep those settings
    as bins, otherwise ``[0, 2 pi)`` is cut into ``n_bins`` equal bins.
    """
    distinct = np.unique(theta)
    if distinct.size <= n_bins:
        return np.searchsorted(distinct, theta), distinct
    width = TWO_PI / n_bins
    idx = np.minimum((theta // width).astype(int), n_bins - 1)
    return idx, (np.arange(n_bins) + 0.5) * width


def _split(samples, n_bins, min_count):
    if samples.count == 0:
        raise DomainError("no homodyne samples")
    idx, centers = bin_phases(samples.theta, n_bins)
    groups = [samples.x[idx == b] for b in range(centers.size)]
    low = [b for b, g in enumerate(groups) if g.size < min_count]
    if low:
        detail = ", ".join(f"{b} (theta={centers[b]:.3f}, n={groups[b].size})" for b in low)
        raise DomainError(f"phase bins with fewer than {min_count} samples: {detail}")
    return centers, groups


def _periodic_weights(centers):
    """Trapezoid weights of a periodic rule on sorted nodes in ``[0, 2 pi)``."""
    if centers.size == 1:
        return np.array([TWO_PI])
    gaps = np.diff(np.concatenate([centers, [centers[0] + TWO_PI]]))
    return (gaps + np.roll(gaps, 1)) / 2


def _bracket(centers, theta):
    """Neighbouring bin indices and the linear weight of the upper one."""
    theta = np.mod(theta, TWO_PI)
    if centers.size == 1:
        return 0, 0, 0.0
    ext = np.concatenate([centers, [centers[0] + TWO_PI]])
    if theta < centers[0]:
        theta += TWO_PI
    k = int(np.searchsorted(ext, theta, side="right")) - 1
    k = min(max(k, 0), centers.size - 1)
    lam = (theta - ext[k]) / (ext[k + 1] - ext[k])
    return k, (k + 1) % centers.size, float(lam)


class EmpiricalTomogram(Tomogram, BaseEstimator):
    """Optical tomogram estimated from homodyne samples.

    Each phase bin gets a Gaussian kernel density estimate, renormalized to
    unit mass; between bin centers the densities are interpolated linearly
    in ``theta`` (periodically).

    Parameters
    ----------
    n_bins : int
        Number of phase bins for continuously distributed phases.
    min_count : int
        Minimum number of samples required in every bin.
    bandwidth : str or float
        Passed to :class:`scipy.stats.gaussian_kde` as ``bw_method``.
    """

    name = "empirical"

    def __init__(self, n_bins=16, min_count=500, bandwidth="silverman"):
        self.n_bins = n_bins
        self.min_count = min_count
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        samples = _as_samples(X)
        self.centers_, groups = _split(samples, self.n_bins, self.min_count)
        self.kdes_ = [gaussian_kde(g, bw_method=self.bandwidth) for g in groups]
        self.counts_ = np.array([g.size for g in groups])
        self.means_ = np.array([g.mean() for g in groups])
        self.variances_ = np.array([g.var() + k.covariance[0, 0] for g, k in zip(groups, self.kdes_)])
        return self

    def _interp(self, values, theta):
        lo, hi, lam = _bracket(self.centers_, theta)
        return (1 - lam) * values[lo] + lam * values[hi]

    def pdf(self, X, theta):
        check_is_fitted(self, "kdes_")
        X = np.asarray(X, dtype=float)
        lo, hi, lam = _bracket(self.centers_, theta)
        flat = X.ravel()
        out = (1 - lam) * self.kdes_[lo](flat)
        if lam:
            out = out + lam * self.kdes_[hi](flat)
        return out.reshape(X.shape)

    def mean(self, theta):
        check_is_fitted(self, "kdes_")
        return float(self._interp(self.means_, theta))

    def variance(self, theta):
        check_is_fitted(self, "kdes_")
        return float(self._interp(self.variances_, theta))


def _sample_cumulants(x, n_max):
    """Cumulants of the empirical distribution of each row of ``x``."""
    mean = x.mean(axis=-1)
    d = x - mean[..., None]
    mu = np.stack([np.mean(d**k, axis=-1) for k in range(1, n_max + 1)], axis=-1)
    out = np.apply_along_axis(moments_to_cumulants, -1, mu)
    out[..., 0] = mean
    return out


def _log_mean_exp(x, t):
    return logsumexp(t * x, axis=-1) - np.log(x.shape[-1])


def _deviation(x, t):
    """Empirical ``C(t) = ln mean e^{tx} - t mean - t^2 var / 2`` along the last axis.

    The log of a sample mean is biased low by ``Var / (2 n m^2)``; that
    leading term is added back.
    """
    n = x.shape[-1]
    lm = _log_mean_exp(x, t)
    rel_var = np.expm1(_log_mean_exp(x, 2 * t) - 2 * lm)
    return lm + rel_var / (2 * n) - t * x.mean(axis=-1) - t * t * x.var(axis=-1, ddof=1) / 2


def stability_bound(x, max_rel_se=0.1, t_hi=20.0, resolution=1e-3):
    """Largest ``t`` at which the sample mean of ``e^{tx}`` has relative
    standard error at most ``max_rel_se``.

    The squared relative error ``(exp(g(2t) - 2 g(t)) - 1) / n`` is
    nondecreasing in ``t`` for any convex ``g``, the empirical one included,
    so bisection finds the crossing.
    """
    n = x.size

    def ok(t):
        rel_var = np.expm1(_log_mean_exp(x, 2 * t) - 2 * _log_mean_exp(x, t))
        return rel_var / n <= max_rel_se**2

    lo, hi = 0.0, float(t_hi)
    if ok(hi):
        return hi
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


class CumulantEstimator(BaseEstimator):
    """Cumulants, ``C(t, theta)`` and ``Ch`` estimated from homodyne samples.

    The moment generating function is the per-bin sample mean of
    ``e^{tx}``. Its reliability degrades quickly with ``t``, so ``Ch`` is
    integrated over ``[0, T]`` where ``T`` is the smallest per-bin
    :func:`stability_bound` (optionally capped by ``t_cap``); the range is
    reported with the result. Standard errors come from a stratified
    bootstrap over the samples of each bin.
    """

    def __init__(
        self,
        n_max=4,
        n_bins=16,
        min_count=500,
        t_grid=(0.25, 0.5, 1.0, 2.0),
        n_t=16,
        t_cap=None,
        max_rel_se=0.1,
        n_bootstrap=200,
        random_state=None,
    ):
        self.n_max = n_max
        self.n_bins = n_bins
        self.min_count = min_count
        self.t_grid = t_grid
        self.n_t = n_t
        self.t_cap = t_cap
        self.max_rel_se = max_rel_se
        self.n_bootstrap = n_bootstrap
        self.random_state = random_state

    def fit(self, X, y=None):
        samples = _as_samples(X)
        centers, groups = _split(samples, self.n_bins, self.min_count)
        bounds = np.array([stability_bound(g, self.max_rel_se) for g in groups])
        t_max = float(bounds.min())
        if self.t_cap is not None:
            t_max = min(t_max, float(self.t_cap))
        ts, tw = t_nodes(self.n_t, t_max)
        thw = _periodic_weights(centers)
        single = centers.size == 1

        K = np.array([_sample_cumulants(g, self.n_max) for g in groups])
        grid = np.asarray(self.t_grid, dtype=float)
        C = np.array([[_deviation(g, t) for t in grid] for g in groups])
        node_C = np.array([[_deviation(g, t) for t in ts] for g in groups])
        ch = None if single else float(thw @ node_C @ tw)

        K_se, ch_se = np.full(K.shape, np.nan), None
        if self.n_bootstrap > 1:
            rng = np.random.default_rng(self.random_state)
            boot_K = np.zeros((self.n_bootstrap,) + K.shape)
            boot_ch = np.zeros((self.n_bootstrap, centers.size))
            for b, g in enumerate(groups):
                res = g[rng.integers(0, g.size, size=(self.n_bootstrap, g.size))]
                boot_K[:, b] = _sample_cumulants(res, self.n_max)
                boot_ch[:, b] = sum(w * _deviation(res, t) for t, w in zip(ts, tw))
            K_se = boot_K.std(axis=0, ddof=1)
            if not single:
                ch_se = float((boot_ch @ thw).std(ddof=1))

        unstable = [
            [float(th), float(t)] for th, tb in zip(centers, bounds) for t in grid if t > tb
        ]
        flags = {
            "Ch_unavailable": "single phase setting" if single else None,
            "unstable_nodes": unstable,
            "stability_bounds": bounds.tolist(),
        }
        self.centers_ = centers
        self.counts_ = np.array([g.size for g in groups])
        self.t_max_ = t_max
        self.cumulants_ = K
        self.cumulants_se_ = K_se
        self.C_ = C
        self.Ch_ = ch
        self.Ch_se_ = ch_se
        self.report_ = CumulantReport(
            theta_grid=centers.tolist(),
            n_max=self.n_max,
            K=K.tolist(),
            t_grid=grid.tolist(),
            C_values=C.tolist(),
            Ch=ch,
            Ch_se=ch_se,
            K_se=K_se.tolist(),
            t_range=[0.0, t_max],
            flags=flags,
            source=samples.source or "samples",
        )
        return self


def sample_homodyne(tom, n_samples, n_phases=16, rng=None, grid_points=20001):
    """Draw synthetic homodyne records from a tomogram at equally spaced phases.

    Quadrature values are drawn by inverting the numerically integrated CDF.
    """
    rng = np.random.default_rng(rng)
    phases = np.arange(n_phases) * TWO_PI / n_phases
    per = np.full(n_phases, n_samples // n_phases)
    per[: n_samples % n_phases] += 1
    thetas, xs = [], []
    for theta, k in zip(phases, per):
        lo, hi = tom.window(theta)
        X = np.linspace(lo, hi, grid_points)
        dens = np.clip(tom.pdf(X, theta), 0, None)
        cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(X))])
        cdf /= cdf[-1]
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        xs.append(np.interp(rng.random(k), cdf[keep], X[keep]))
        thetas.append(np.full(k, theta))
    return HomodyneSamples(np.concatenate(thetas), np.concatenate(xs), source=getattr(tom, "name", ""))


class DensityMatrixReconstructor(BaseEstimator):
    """Linear-inversion qudit tomography.

    ``fit(unitaries, tomograms)`` takes a sequence of measurement unitaries
    and the matching probability vectors; ``predict(unitaries)`` returns the
    tomograms of the reconstructed state.
    """

    def fit(self, unitaries, tomograms):
        unitaries = list(unitaries)
        tomograms = list(tomograms)
        if len(unitaries) != len(tomograms):
            raise DomainError(f"{len(unitaries)} unitaries but {len(tomograms)} tomograms")
        result = reconstruct_density(zip(unitaries, tomograms))
        self.rho_ = result.rho
        self.residual_ = result.residual
        self.min_eigenvalue_ = result.min_eigenvalue
        self.projected_ = result.projected
        return self

    def predict(self, unitaries):
        check_is_fitted(self, "rho_")
        return np.array([unitary_tomogram(self.rho_, u) for u in unitaries])
