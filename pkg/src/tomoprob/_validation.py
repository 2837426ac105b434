"""Input validation helpers shared by the numerical modules."""

import numpy as np

NORM_TOL = 1e-9
NEG_TOL = 1e-12
STOCHASTIC_TOL = 1e-12
MATRIX_TOL = 1e-10


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class NumericalConsistencyError(RuntimeError):
    """Two independent numerical routes disagree beyond tolerance."""


class InformationallyIncompleteError(DomainError):
    """Tomographic data do not determine the state."""


def check_probability_vector(p, norm_tol=NORM_TOL, neg_tol=NEG_TOL):
    """Validate and return a probability vector as a float array.

    Components in ``(-neg_tol, 0)`` are clamped to zero; anything more
    negative is rejected, as is a sum further than ``norm_tol`` from one.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError(f"probability vector must be 1-D and non-empty, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        bad = int(np.flatnonzero(~np.isfinite(p))[0])
        raise DomainError(f"component {bad} is not finite")
    if np.any(p < -neg_tol):
        bad = int(np.flatnonzero(p < -neg_tol)[0])
        raise DomainError(f"component {bad} is negative ({float(p[bad])!r})")
    total = p.sum()
    if abs(total - 1.0) > norm_tol:
        raise DomainError(f"components sum to {float(total)!r}, not 1")
    return np.where(p < 0, 0.0, p)


def check_stochastic_matrix(m, tol=STOCHASTIC_TOL):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"stochastic map must be square, got shape {m.shape}")
    if np.any(m < 0):
        i, j = np.argwhere(m < 0)[0]
        raise DomainError(f"entry ({i}, {j}) is negative")
    cols = m.sum(axis=0)
    if np.any(np.abs(cols - 1.0) > tol):
        j = int(np.argmax(np.abs(cols - 1.0)))
        raise DomainError(f"column {j} sums to {float(cols[j])!r}, not 1")
    return m


def check_square(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"{name} must be square, got shape {a.shape}")
    return a


def check_density_matrix(rho, tol=MATRIX_TOL):
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    rho = check_square(rho, "density matrix")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > tol:
        raise DomainError(f"density matrix is not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise DomainError(f"density matrix has trace {complex(tr)!r}, not 1")
    lam_min = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lam_min < -tol:
        raise DomainError(f"density matrix has negative eigenvalue {float(lam_min)!r}")
    return rho


def check_unitary(u, tol=MATRIX_TOL):
    u = check_square(u, "unitary")
    dev = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
    if dev > tol:
        raise DomainError(f"matrix is not unitary (deviation {dev:.3g})")
    return u


def xlogx(p):
    """Elementwise ``p * ln p`` with ``0 ln 0 = 0``."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out
