"""Single-mode wavefunctions, symplectic/optical tomograms and the state-extended
uncertainty relation for the position operator.

Units: hbar = 1 and ``x = (a + a^dagger) / sqrt(2)``, so the vacuum
quadrature variance is 1/2. The symplectic tomogram ``M(X, mu, nu)`` is the
distribution of ``mu x + nu p``; the optical tomogram is
``w(X, theta) = M(X, cos theta, sin theta)``.
"""

from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import eval_hermite, gammaln

from ._validation import DomainError, NumericalConsistencyError

__all__ = [
    "WaveFunction",
    "Tomogram",
    "GaussianTomogram",
    "FockTomogram",
    "MixtureTomogram",
    "WavefunctionTomogram",
    "hermite_functions",
    "default_grid",
    "tomogram_from_wavefunction",
    "apply_position_squared",
    "analytic_tomogram",
    "thermal_fock_sum",
    "state_from_tag",
    "second_moment",
    "state_extended_lhs",
    "state_extended_rhs_hilbert",
    "state_extended_rhs_tomographic",
    "check_state_extended",
    "StateExtendedReport",
]

NU_MIN = 1e-6
NORM_TOL = 1e-8
GRID_MIN, GRID_MAX, GRID_N = -12.0, 12.0, 4096
MAX_FOCK = 10
TAIL_MASS_TOL = 1e-8
MOMENT_RTOL = 1e-6


def default_grid(n=GRID_N, lo=GRID_MIN, hi=GRID_MAX):
    return np.linspace(lo, hi, n)


def _trapezoid_weights(grid):
    h = grid[1] - grid[0]
    w = np.full(grid.size, h)
    w[0] = w[-1] = h / 2
    return w


def hermite_functions(nmax, y):
    """Normalized oscillator eigenfunctions ``psi_0 .. psi_nmax`` at ``y``.

    Uses the three-term recurrence, which stays bounded where the Hermite
    polynomials themselves overflow.
    """
    y = np.asarray(y, dtype=float)
    out = np.empty((nmax + 1,) + y.shape)
    out[0] = np.pi**-0.25 * np.exp(-(y**2) / 2)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * y * out[0]
    for n in range(1, nmax):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * y * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _squeeze_exponent(r, phi):
    zeta = np.exp(1j * phi) * np.tanh(r)
    return (1 + zeta) / (1 - zeta)


class WaveFunction:
    """Complex samples ``psi(y_i)`` on a uniform grid.

    ``func`` is an optional closed form used for off-grid evaluation; without
    it a cubic spline of the samples is used. ``normalized=False`` marks
    vectors such as ``y^2 psi`` that are not states.
    """

    def __init__(self, values, grid=None, *, func=None, tag=None, normalized=True):
        grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=complex)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise DomainError(f"grid {grid.shape} and values {values.shape} must be matching 1-D arrays")
        steps = np.diff(grid)
        if grid.size < 16 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
            raise DomainError("wavefunction grid must be uniform, increasing and have >= 16 points")
        self.grid = grid
        self.values = values
        self.func = func
        self.tag = tag
        self.normalized = normalized
        self.grid.setflags(write=False)
        self.values.setflags(write=False)
        if normalized:
            self._check_state()

    def _check_state(self):
        norm = self.norm()
        if abs(norm - 1) > NORM_TOL:
            raise DomainError(f"wavefunction norm is {float(norm)!r}, not 1")
        dens = np.abs(self.values) ** 2 * _trapezoid_weights(self.grid)
        mean = dens @ self.grid
        sd = np.sqrt(max(dens @ (self.grid - mean) ** 2, 0.0))
        if mean - 4 * sd < self.grid[0] or mean + 4 * sd > self.grid[-1]:
            raise DomainError("grid does not cover 8 standard deviations of |psi|^2")

    @property
    def step(self):
        return self.grid[1] - self.grid[0]

    def norm(self):
        return float(np.abs(self.values) ** 2 @ _trapezoid_weights(self.grid))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.func is not None:
            return self.func(y)
        out = self._spline(y)
        return np.where((y < self.grid[0]) | (y > self.grid[-1]), 0.0, out)

    @cached_property
    def _spline(self):
        return CubicSpline(self.grid, self.values)

    @cached_property
    def momentum(self):
        """``(p, psi~(p))`` with ``psi~(p) = (2 pi)^-1/2 int psi(y) e^{-i p y} dy``.

        Computed as a zero-padded FFT, which is the trapezoid rule sampled on
        a momentum grid as fine as the position grid.
        """
        h = self.step
        n = self.grid.size
        pad = 1 << int(np.ceil(np.log2(max(2 * np.pi / h**2, 2 * n))))
        buf = np.zeros(pad, complex)
        buf[:n] = self.values * _trapezoid_weights(self.grid) / h
        p = 2 * np.pi * np.fft.fftfreq(pad, d=h)
        vals = np.fft.fft(buf) * np.exp(-1j * p * self.grid[0]) * h / np.sqrt(2 * np.pi)
        order = np.argsort(p)
        p, vals = p[order], vals[order]
        # amplitudes below 1e-12 of the peak are FFT round-off, not signal
        mag = np.abs(vals)
        keep = np.flatnonzero(mag > 1e-12 * mag.max())
        sel = (p >= p[keep[0]] - 1.0) & (p <= p[keep[-1]] + 1.0)
        p, vals = p[sel], vals[sel]
        p.setflags(write=False)
        vals.setflags(write=False)
        return p, vals

    def moments(self):
        """``(<x>, <p>, Var x, Var p)``."""
        dx = np.abs(self.values) ** 2 * _trapezoid_weights(self.grid)
        p, pv = self.momentum
        dp = np.abs(pv) ** 2 * (p[1] - p[0])
        nx, np_ = dx.sum(), dp.sum()
        mx, mp = dx @ self.grid / nx, dp @ p / np_
        return mx, mp, dx @ (self.grid - mx) ** 2 / nx, dp @ (p - mp) ** 2 / np_

    # closed-form states

    @classmethod
    def fock(cls, n, grid=None):
        if not 0 <= n <= MAX_FOCK:
            raise DomainError(f"Fock number must be in [0, {MAX_FOCK}], got {n}")
        grid = default_grid() if grid is None else grid
        func = lambda y: hermite_functions(n, y)[n].astype(complex)  # noqa: E731
        return cls(func(grid), grid, func=func, tag=f"fock:{n}")

    @classmethod
    def vacuum(cls, grid=None):
        wf = cls.fock(0, grid)
        wf.tag = "vacuum"
        return wf

    @classmethod
    def coherent(cls, alpha, grid=None):
        alpha = complex(alpha)
        x0, p0 = np.sqrt(2) * alpha.real, np.sqrt(2) * alpha.imag

        def func(y):
            return np.pi**-0.25 * np.exp(-((y - x0) ** 2) / 2 + 1j * p0 * y)

        grid = default_grid() if grid is None else grid
        return cls(func(grid), grid, func=func, tag=f"coherent:{alpha}")

    @classmethod
    def squeezed(cls, r, phi=0.0, grid=None):
        """Squeezed vacuum ``S(r e^{i phi})|0>``; ``phi = 0`` squeezes ``x``."""
        k = _squeeze_exponent(r, phi)
        pref = (k.real / np.pi) ** 0.25

        def func(y):
            return pref * np.exp(-k * y**2 / 2)

        grid = default_grid() if grid is None else grid
        return cls(func(grid), grid, func=func, tag=f"squeezed:{r},{phi}")

    @classmethod
    def superposition(cls, coeffs, grid=None):
        """Normalized finite superposition ``sum_n c_n |n>`` of Fock states."""
        c = np.asarray(coeffs, dtype=complex)
        c = c / np.linalg.norm(c)

        def func(y):
            return np.tensordot(c, hermite_functions(c.size - 1, y), axes=1)

        grid = default_grid() if grid is None else grid
        return cls(func(grid), grid, func=func, tag="superposition")

    def to_dict(self):
        return {
            "grid": {"min": float(self.grid[0]), "max": float(self.grid[-1]), "n": int(self.grid.size)},
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        if "tag" in data:
            return state_from_tag(data["tag"], **{k: v for k, v in data.items() if k != "tag"})
        g = data["grid"]
        grid = np.linspace(g["min"], g["max"], int(g["n"]))
        values = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data.get("im", np.zeros(len(data["re"]))))
        return cls(values, grid)


def state_from_tag(tag, grid=None, **params):
    """Build a closed-form wavefunction from ``vacuum``, ``fock``, ``coherent`` or ``squeezed``.

    ``tag`` may carry its parameter after a colon: ``"fock:2"``,
    ``"coherent:1+1j"``, ``"squeezed:0.3"`` or ``"squeezed:0.3,0.5"``.
    """
    name, _, arg = str(tag).partition(":")
    try:
        if name == "vacuum":
            return WaveFunction.vacuum(grid)
        if name == "fock":
            return WaveFunction.fock(int(arg or params["n"]), grid)
        if name == "coherent":
            return WaveFunction.coherent(complex(arg.replace(" ", "")) if arg else complex(params["alpha"]), grid)
        if name == "squeezed":
            vals = [float(v) for v in arg.split(",")] if arg else [params["r"], params.get("phi", 0.0)]
            return WaveFunction.squeezed(*vals, grid=grid)
    except (KeyError, ValueError) as exc:
        raise DomainError(f"bad parameters for state {tag!r}: {exc}") from None
    raise DomainError(f"unsupported state tag {tag!r}")


def tomogram_from_wavefunction(phi, X, mu, nu):
    """``(1 / 2 pi |nu|) |int phi(y) exp(i mu y^2 / 2 nu - i X y / nu) dy|^2``.

    For ``|nu| <= 1e-6`` the limit ``|phi(X / mu)|^2 / |mu|`` is returned.
    Otherwise the parameters are scaled onto the unit circle and, when
    ``|nu| < |mu|``, the same integral is taken over the momentum
    wavefunction with ``(mu, nu) -> (nu, -mu)`` so the quadratic phase never
    oscillates faster than the grid resolves.
    """
    X = np.asarray(X, dtype=float)
    if mu == 0 and nu == 0:
        raise DomainError("mu = nu = 0 does not define a quadrature")
    if abs(nu) <= NU_MIN:
        return np.abs(phi(X / mu)) ** 2 / abs(mu)
    r = np.hypot(mu, nu)
    mu, nu, Xs = mu / r, nu / r, X / r
    if abs(nu) >= abs(mu):
        grid, vals = phi.grid, phi.values * _trapezoid_weights(phi.grid)
    else:
        p, pv = phi.momentum
        grid, vals = p, pv * (p[1] - p[0])
        mu, nu = nu, -mu
    base = vals * np.exp(1j * mu * grid**2 / (2 * nu))
    flat = Xs.ravel()
    out = np.empty(flat.shape)
    for s in range(0, flat.size, 256):
        chunk = flat[s : s + 256]
        amp = np.exp(-1j * np.outer(chunk, grid) / nu) @ base
        out[s : s + 256] = np.abs(amp) ** 2
    return out.reshape(X.shape) / (2 * np.pi * abs(nu)) / r


def apply_position_squared(psi):
    """Pointwise ``y^2 psi(y)``, left unnormalized."""
    y = psi.grid
    tail = np.abs(y) > 0.9 * np.abs(y).max()
    mass = float(np.sum((y**4 * np.abs(psi.values) ** 2 * _trapezoid_weights(y))[tail]))
    if mass > TAIL_MASS_TOL:
        raise DomainError(f"grid too narrow for y^2 psi: tail mass {mass:.3g}")
    func = None if psi.func is None else (lambda z: z**2 * psi.func(z))
    tag = None if psi.tag is None else f"x^2 {psi.tag}"
    return WaveFunction(y**2 * psi.values, y, func=func, tag=tag, normalized=False)


class Tomogram:
    """Optical tomogram ``w(X, theta)`` with its symplectic extension.

    Subclasses provide :meth:`pdf` and the window hints :meth:`mean` and
    :meth:`variance` used to place quadrature grids; ``tail_variance`` is
    the variance of the Gaussian envelope that governs the far tails.
    """

    name = "tomogram"

    def pdf(self, X, theta):
        raise NotImplementedError

    def logpdf(self, X, theta):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(X, theta))

    def mean(self, theta):
        raise NotImplementedError

    def variance(self, theta):
        raise NotImplementedError

    def tail_variance(self, theta):
        return self.variance(theta)

    def window(self, theta, width=12.0):
        m, s = self.mean(theta), np.sqrt(self.variance(theta))
        return m - width * s - 2.0, m + width * s + 2.0

    def symplectic(self, X, mu, nu):
        """``M(X, mu, nu) = w(X / r, theta) / r`` with ``(mu, nu) = r (cos theta, sin theta)``."""
        if mu == 0 and nu == 0:
            raise DomainError("mu = nu = 0 does not define a quadrature")
        r = np.hypot(mu, nu)
        return self.pdf(np.asarray(X, dtype=float) / r, np.arctan2(nu, mu)) / r


class GaussianTomogram(Tomogram):
    """Gaussian quadrature distribution with phase-dependent mean and variance."""

    def __init__(self, x0=0.0, p0=0.0, vx=0.5, vp=0.5, cov=0.0, name="gaussian"):
        self.x0, self.p0, self.vx, self.vp, self.cov = x0, p0, vx, vp, cov
        self.name = name

    def mean(self, theta):
        return self.x0 * np.cos(theta) + self.p0 * np.sin(theta)

    def variance(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        return self.vx * c**2 + self.vp * s**2 + 2 * self.cov * c * s

    def logpdf(self, X, theta):
        v = self.variance(theta)
        return -((np.asarray(X) - self.mean(theta)) ** 2) / (2 * v) - 0.5 * np.log(2 * np.pi * v)

    def pdf(self, X, theta):
        return np.exp(self.logpdf(X, theta))


class FockTomogram(Tomogram):
    """Phase-independent tomogram ``psi_n(X)^2`` of the Fock state ``|n>``."""

    def __init__(self, n):
        if n < 0:
            raise DomainError(f"Fock number must be non-negative, got {n}")
        self.n = n
        self.name = f"fock:{n}"
        self._lognorm = n * np.log(2) + gammaln(n + 1) + 0.5 * np.log(np.pi)

    def pdf(self, X, theta=0.0):
        return hermite_functions(self.n, X)[self.n] ** 2

    def logpdf(self, X, theta=0.0):
        X = np.asarray(X, dtype=float)
        with np.errstate(divide="ignore"):
            return 2 * np.log(np.abs(eval_hermite(self.n, X))) - X**2 - self._lognorm

    def mean(self, theta):
        return 0.0

    def variance(self, theta):
        return self.n + 0.5

    def tail_variance(self, theta):
        return 0.5


class MixtureTomogram(Tomogram):
    """Convex combination of tomograms, e.g. a thermal state as a Fock sum."""

    def __init__(self, weights, components, name="mixture"):
        self.weights = np.asarray(weights, dtype=float)
        self.components = list(components)
        self.name = name

    def pdf(self, X, theta):
        return sum(w * c.pdf(X, theta) for w, c in zip(self.weights, self.components))

    def mean(self, theta):
        return sum(w * c.mean(theta) for w, c in zip(self.weights, self.components))

    def variance(self, theta):
        m = self.mean(theta)
        return sum(
            w * (c.variance(theta) + (c.mean(theta) - m) ** 2) for w, c in zip(self.weights, self.components)
        )


class WavefunctionTomogram(Tomogram):
    """Tomogram evaluated from a wavefunction through the integral formula."""

    def __init__(self, psi, name=None):
        self.psi = psi
        self.name = name or psi.tag or "wavefunction"
        mx, mp, vx, vp = psi.moments()
        self._x0, self._p0, self._spread = mx, mp, vx + vp

    def pdf(self, X, theta):
        return tomogram_from_wavefunction(self.psi, X, np.cos(theta), np.sin(theta))

    def mean(self, theta):
        return self._x0 * np.cos(theta) + self._p0 * np.sin(theta)

    def variance(self, theta):
        # upper bound over theta; only used to size windows
        return self._spread


def analytic_tomogram(tag, **params):
    """Closed-form optical tomogram of a tagged state.

    Tags: ``vacuum``, ``fock`` (``n <= 10``), ``coherent`` (complex ``alpha``),
    ``squeezed`` (``r``, ``phi``) and ``thermal`` (mean photon number ``nbar``).
    Parameters may follow the tag after a colon, as in :func:`state_from_tag`.
    """
    name, _, arg = str(tag).partition(":")
    try:
        if name == "vacuum":
            return GaussianTomogram(name="vacuum")
        if name == "fock":
            n = int(arg or params["n"])
            if not 0 <= n <= MAX_FOCK:
                raise DomainError(f"Fock number must be in [0, {MAX_FOCK}], got {n}")
            return FockTomogram(n)
        if name == "coherent":
            a = complex(arg.replace(" ", "")) if arg else complex(params["alpha"])
            return GaussianTomogram(np.sqrt(2) * a.real, np.sqrt(2) * a.imag, name=f"coherent:{a}")
        if name == "squeezed":
            r, phi = ([float(v) for v in arg.split(",")] + [0.0])[:2] if arg else (params["r"], params.get("phi", 0.0))
            ch, sh = np.cosh(2 * r), np.sinh(2 * r)
            return GaussianTomogram(
                vx=(ch - sh * np.cos(phi)) / 2,
                vp=(ch + sh * np.cos(phi)) / 2,
                cov=-sh * np.sin(phi) / 2,
                name=f"squeezed:{r},{phi}",
            )
        if name == "thermal":
            nbar = float(arg or params["nbar"])
            v = nbar + 0.5
            return GaussianTomogram(vx=v, vp=v, name=f"thermal:{nbar}")
    except (KeyError, ValueError) as exc:
        raise DomainError(f"bad parameters for state {tag!r}: {exc}") from None
    raise DomainError(f"unsupported state tag {tag!r}")


def thermal_fock_sum(nbar, tail=1e-14):
    """Thermal state as a Fock mixture truncated once the remaining weight is below ``tail``."""
    q = nbar / (1 + nbar)
    kmax = 0 if q == 0 else int(np.ceil(np.log(tail) / np.log(q)))
    k = np.arange(kmax + 1)
    p = nbar**k / (1 + nbar) ** (k + 1)
    return MixtureTomogram(p / p.sum(), [FockTomogram(int(i)) for i in k], name=f"thermal-sum:{nbar}")


def second_moment(w, theta):
    """``int X^2 w(X, theta) dX`` by adaptive quadrature."""
    lo, hi = w.window(theta)
    val, err = integrate.quad(
        lambda x: x * x * float(w.pdf(np.array([x]), theta)[0]),
        lo,
        hi,
        points=[w.mean(theta)],
        epsabs=1e-13,
        epsrel=1e-11,
        limit=400,
    )
    if err > MOMENT_RTOL * max(abs(val), 1e-300):
        raise NumericalConsistencyError(f"second-moment quadrature did not converge (error {err:.3g})")
    return val


def state_extended_lhs(psi1, psi2):
    """Product of the position second moments read off the tomograms at theta = 0."""
    return second_moment(WavefunctionTomogram(psi1), 0.0) * second_moment(WavefunctionTomogram(psi2), 0.0)


def _common_grid(psi1, psi2):
    if psi1.grid.shape == psi2.grid.shape and np.allclose(psi1.grid, psi2.grid, rtol=0, atol=1e-12):
        return psi1.grid, psi1.values, psi2.values
    lo, hi = max(psi1.grid[0], psi2.grid[0]), min(psi1.grid[-1], psi2.grid[-1])
    if lo >= hi:
        raise DomainError("wavefunction grids have disjoint supports")
    h = min(psi1.step, psi2.step)
    grid = np.linspace(lo, hi, int(round((hi - lo) / h)) + 1)
    return grid, psi1(grid), psi2(grid)


def state_extended_rhs_hilbert(psi1, psi2):
    """``|<psi2| x^2 |psi1>|^2`` on a common grid."""
    grid, v1, v2 = _common_grid(psi1, psi2)
    amp = np.sum(np.conj(v2) * grid**2 * v1 * _trapezoid_weights(grid))
    return float(abs(amp) ** 2)


def _characteristic(tom_pdf, theta, xg, xw, rg):
    w = tom_pdf(xg, theta)
    return np.exp(1j * np.outer(rg, xg)) @ (xw * w)


def state_extended_rhs_tomographic(
    psi1,
    psi2,
    n_theta=64,
    n_x=256,
    x_half=None,
    n_r=128,
    r_max=14.0,
):
    """Tomographic overlap of ``x^2 psi1`` with ``psi2``.

    Evaluates ``(1/2pi) int w~1(X, mu, nu) w2(-Y, mu, nu) e^{i(X+Y)} dX dY dmu dnu``.
    Writing ``(mu, nu) = r (cos theta, sin theta)`` and using
    ``M(X, r mu, r nu) = M(X / r, mu, nu) / r`` turns each ``X`` integral into
    the characteristic function ``F(r, theta) = int w(X, theta) e^{i r X} dX``
    of an optical tomogram, leaving

        (1/2pi) int_0^pi dtheta  2 Re int_0^inf r F1(r, theta) conj(F2(r, theta)) dr.

    ``theta`` uses the trapezoid rule (the integrand is pi-periodic), ``X``
    and ``r`` use Gauss-Legendre nodes.
    """
    phi1 = apply_position_squared(psi1)
    t1, t2 = WavefunctionTomogram(phi1), WavefunctionTomogram(psi2)
    if x_half is None:
        x_half = max(abs(psi1.grid[0]), psi1.grid[-1], abs(psi2.grid[0]), psi2.grid[-1])
    xg, xw = leggauss(n_x)
    xg, xw = xg * x_half, xw * x_half
    rg, rw = leggauss(n_r)
    rg, rw = (rg + 1) * r_max / 2, rw * r_max / 2
    total = 0.0
    for theta in np.arange(n_theta) * np.pi / n_theta:
        f1 = _characteristic(t1.pdf, theta, xg, xw, rg)
        f2 = _characteristic(t2.pdf, theta, xg, xw, rg)
        total += 2 * np.real(np.sum(rw * rg * f1 * np.conj(f2)))
    return float(total * (np.pi / n_theta) / (2 * np.pi))


class StateExtendedReport(dict):
    """Plain dict with ``lhs``, ``rhs_hilbert``, ``rhs_tomographic`` and ``holds``."""

    @property
    def holds(self):
        return self["holds"]


def check_state_extended(psi1, psi2, tomographic=True, consistency_tol=1e-2, **quad):
    """Evaluate the state-extended relation on both its Hilbert and tomographic sides.

    Raises :class:`NumericalConsistencyError` when the tomographic value
    departs from the Hilbert value by more than ``consistency_tol`` (relative,
    absolute below 1).
    """
    lhs = state_extended_lhs(psi1, psi2)
    rhs_h = state_extended_rhs_hilbert(psi1, psi2)
    holds = lhs >= rhs_h - 1e-9
    rhs_t = None
    if tomographic:
        rhs_t = state_extended_rhs_tomographic(psi1, psi2, **quad)
        if abs(rhs_t - rhs_h) > consistency_tol * max(1.0, abs(rhs_h)):
            raise NumericalConsistencyError(
                f"tomographic RHS {float(rhs_t)!r} disagrees with Hilbert RHS {float(rhs_h)!r}"
            )
        holds = holds and lhs >= rhs_t - 1e-3
    return StateExtendedReport(lhs=lhs, rhs_hilbert=rhs_h, rhs_tomographic=rhs_t, holds=bool(holds))
