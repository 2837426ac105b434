"""Qudit density matrices, unitary and spin tomograms, entropy bounds.

Basis states are ordered by descending spin projection, ``m = j, j-1, ..., -j``,
so index ``i`` holds ``m = j - i``. Bipartite indices are row-major in
``(m1, m2)``.
"""

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt

import numpy as np

from ._validation import (
    DomainError,
    InformationallyIncompleteError,
    check_density_matrix,
    check_probability_vector,
    check_unitary,
)
from .probvec import (
    EntropyChainReport,
    check_entropy_chain,
    coarsening_chain,
    mutual_information,
    shannon_entropy,
)

__all__ = [
    "spin_from_dim",
    "magnetic_numbers",
    "spin_operators",
    "wigner_d",
    "wigner_D",
    "euler_from_direction",
    "unitary_tomogram",
    "spin_tomogram",
    "bipartite_tomogram",
    "eigen_decompose",
    "eigen_tomogram_identity",
    "von_neumann_entropy",
    "check_tomogram_chain",
    "check_von_neumann_bound",
    "spin32_information",
    "two_qubit_information",
    "reconstruct_density",
    "random_density_matrix",
    "haar_unitary",
    "pure_state",
]

MAX_SPIN = Fraction(25, 2)
TOMO_TOL = 1e-10
IDENTITY_TOL = 1e-9
BOUND_TOL = 1e-9
PSD_CLIP = 1e-6


def _as_spin(j):
    j2 = Fraction(j).limit_denominator(2) * 2
    if j2.denominator != 1 or j2 < 0 or abs(float(j2) / 2 - float(j)) > 1e-12:
        raise DomainError(f"j={j!r} is not a non-negative half-integer")
    j = j2 / 2
    if j > MAX_SPIN:
        raise DomainError(f"j={j} exceeds the supported maximum {MAX_SPIN}")
    return j


def spin_from_dim(d):
    return _as_spin(Fraction(d - 1, 2))


def magnetic_numbers(j):
    """Spin projections ``j, j-1, ..., -j`` as floats."""
    j = _as_spin(j)
    return np.array([float(j - k) for k in range(int(2 * j) + 1)])


def spin_operators(j):
    """Return ``(Jx, Jy, Jz)`` in the descending-``m`` basis."""
    m = magnetic_numbers(j)
    jf = float(_as_spin(j))
    # <m+1|J+|m> sits just above the diagonal
    jp = np.diag(np.sqrt(jf * (jf + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    jm = jp.conj().T
    return (jp + jm) / 2, (jp - jm) / 2j, np.diag(m).astype(complex)


def wigner_d(j, beta):
    """Small Wigner matrix ``d^j_{m'm}(beta) = <j m'| exp(-i beta Jy) |j m>``."""
    j = _as_spin(j)
    n = int(2 * j) + 1
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    out = np.zeros((n, n))
    tj = int(2 * j)
    for a in range(n):
        mp2 = tj - 2 * a  # 2 m'
        for b in range(n):
            m2 = tj - 2 * b  # 2 m
            jpm, jmm = (tj + mp2) // 2, (tj - mp2) // 2
            jpn, jmn = (tj + m2) // 2, (tj - m2) // 2
            pref = sqrt(factorial(jpm) * factorial(jmm) * factorial(jpn) * factorial(jmn))
            diff = (mp2 - m2) // 2  # m' - m
            total = 0.0
            for k in range(max(0, -diff), min(jpn, jmm) + 1):
                den = factorial(jpn - k) * factorial(k) * factorial(jmm - k) * factorial(k + diff)
                sign = -1.0 if (k + diff) % 2 else 1.0
                total += sign / den * c ** (tj - 2 * k - diff) * s ** (2 * k + diff)
            out[a, b] = pref * total
    return out


def wigner_D(j, alpha, beta, gamma):
    """SU(2) irrep matrix ``exp(-i alpha Jz) exp(-i beta Jy) exp(-i gamma Jz)``."""
    m = magnetic_numbers(j)
    return np.exp(-1j * m * alpha)[:, None] * wigner_d(j, beta) * np.exp(-1j * m * gamma)[None, :]


def euler_from_direction(n):
    """Z-Y-Z Euler angles ``(phi, theta, 0)`` rotating the z axis onto ``n``."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,):
        raise DomainError(f"direction must be a 3-vector, got shape {n.shape}")
    norm = np.linalg.norm(n)
    if abs(norm - 1) > 1e-12:
        raise DomainError(f"direction has norm {float(norm)!r}, not 1")
    theta = np.arccos(np.clip(n[2], -1.0, 1.0))
    phi = np.arctan2(n[1], n[0])
    return float(phi), float(theta), 0.0


def unitary_tomogram(rho, u):
    """Diagonal of ``u rho u^dagger``: the probabilities ``w(m, u)``."""
    rho = check_density_matrix(rho)
    u = check_unitary(u)
    if u.shape != rho.shape:
        raise DomainError(f"dimension mismatch: rho is {rho.shape}, u is {u.shape}")
    w = np.einsum("ij,jk,ik->i", u, rho, u.conj()).real
    return check_probability_vector(w, norm_tol=TOMO_TOL, neg_tol=TOMO_TOL)


def spin_tomogram(rho, n=None, *, euler=None):
    """Probabilities of spin projections ``m`` measured along the unit vector ``n``.

    Equivalent to :func:`unitary_tomogram` with ``u = D(phi, theta, 0)^dagger``
    where ``D`` rotates the quantization axis onto ``n``. Euler angles may be
    given directly instead.
    """
    rho = check_density_matrix(rho)
    j = spin_from_dim(rho.shape[0])
    if (n is None) == (euler is None):
        raise DomainError("give exactly one of a direction or Euler angles")
    angles = euler_from_direction(n) if euler is None else euler
    return unitary_tomogram(rho, wigner_D(j, *angles).conj().T)


def bipartite_tomogram(rho12, u1, u2):
    """Joint tomogram ``w(m1, m2, u1 x u2)`` flattened row-major in ``(m1, m2)``."""
    rho12 = check_density_matrix(rho12)
    u1, u2 = check_unitary(u1), check_unitary(u2)
    if u1.shape[0] * u2.shape[0] != rho12.shape[0]:
        raise DomainError(
            f"dimension mismatch: rho12 is {rho12.shape[0]}, factors are {u1.shape[0]} x {u2.shape[0]}"
        )
    return unitary_tomogram(rho12, np.kron(u1, u2))


def eigen_decompose(rho):
    """Eigenvalues (descending) and eigenvector matrix ``u0`` of a density matrix.

    Each eigenvector is phase-fixed so that its first non-negligible
    component is real and positive.
    """
    rho = check_density_matrix(rho)
    vals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    order = np.argsort(vals, kind="stable")[::-1]
    vals, vecs = vals[order], vecs[:, order]
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        lead = np.flatnonzero(np.abs(col) > 1e-12)[0]
        vecs[:, k] = col * (abs(col[lead]) / col[lead])
    vals = np.clip(vals, 0.0, None)
    return vals / vals.sum(), vecs


@dataclass(frozen=True)
class IdentityReport:
    lhs: np.ndarray
    rhs: np.ndarray
    match: bool
    deviation: float


def eigen_tomogram_identity(rho, u, tol=IDENTITY_TOL):
    """Compare ``w(u)`` with ``|u u0|^2`` applied to the eigenvalue vector."""
    lhs = unitary_tomogram(rho, u)
    vals, u0 = eigen_decompose(rho)
    rhs = (np.abs(np.asarray(u) @ u0) ** 2) @ vals
    dev = float(np.max(np.abs(lhs - rhs)))
    return IdentityReport(lhs, rhs, dev < tol, dev)


def von_neumann_entropy(rho):
    """``-Tr rho ln rho`` in nats."""
    vals, _ = eigen_decompose(rho)
    return shannon_entropy(vals)


def check_tomogram_chain(rho, u, chain=None):
    """Entropy chain of portrait maps applied to the tomogram ``w(u)``."""
    w = unitary_tomogram(rho, u)
    if chain is None:
        chain = coarsening_chain(w.size)
    return check_entropy_chain(w, chain)


@dataclass(frozen=True)
class VonNeumannBoundReport:
    S_VN: float
    tomogram_entropy: float
    portrait_entropies: list
    holds: bool

    def to_dict(self):
        return {
            "S_VN": self.S_VN,
            "tomogram_entropy": self.tomogram_entropy,
            "portrait_entropies": self.portrait_entropies,
            "holds": self.holds,
        }


def check_von_neumann_bound(rho, chain=None, tol=BOUND_TOL):
    """Portrait entropies of the tomogram taken in the eigenbasis are bounded by S_VN.

    At ``u = u0^dagger`` the tomogram equals the eigenvalue vector, so its
    Shannon entropy equals the von Neumann entropy.
    """
    rho = check_density_matrix(rho)
    vals, u0 = eigen_decompose(rho)
    s_vn = shannon_entropy(vals)
    chain_report: EntropyChainReport = check_tomogram_chain(rho, u0.conj().T, chain)
    h_w, portraits = chain_report.entropies[0], chain_report.entropies[1:]
    holds = abs(h_w - s_vn) <= tol and all(s_vn >= h - tol for h in portraits) and chain_report.monotone
    return VonNeumannBoundReport(s_vn, h_w, portraits, bool(holds))


@dataclass(frozen=True)
class InformationReport:
    I: float
    tomogram: np.ndarray
    holds: bool

    def to_dict(self):
        return {"I": self.I, "tomogram": self.tomogram.tolist(), "holds": self.holds}


def spin32_information(rho, u, tol=TOMO_TOL):
    """Tomographic information of a spin-3/2 state; non-negative.

    ``w`` is ordered ``(3/2, 1/2, -1/2, -3/2)`` and
    ``I = w4 ln w4 - (w2+w3+w4) ln(w2+w3+w4) - (w1+w4) ln(w1+w4)``.
    """
    rho = check_density_matrix(rho)
    if rho.shape[0] != 4:
        raise DomainError(f"spin 3/2 needs a 4 x 4 density matrix, got {rho.shape}")
    w = unitary_tomogram(rho, u)
    info = mutual_information(w)
    return InformationReport(info, w, bool(info >= -tol))


def two_qubit_information(rho12, u=None, u1=None, u2=None, tol=TOMO_TOL):
    """Tomographic information for two qubits, joint order ``(++, +-, -+, --)``.

    Pass either a general 4 x 4 unitary ``u`` or local factors ``u1, u2``.
    """
    rho12 = check_density_matrix(rho12)
    if rho12.shape[0] != 4:
        raise DomainError(f"two qubits need a 4 x 4 density matrix, got {rho12.shape}")
    if u is None:
        if u1 is None or u2 is None:
            raise DomainError("give a joint unitary or both local unitaries")
        w = bipartite_tomogram(rho12, u1, u2)
    else:
        w = unitary_tomogram(rho12, u)
    info = mutual_information(w)
    return InformationReport(info, w, bool(info >= -tol))


def _hermitian_basis(d):
    # orthonormal under the Hilbert-Schmidt product
    basis = []
    for i in range(d):
        e = np.zeros((d, d), complex)
        e[i, i] = 1
        basis.append(e)
    for i in range(d):
        for k in range(i + 1, d):
            e = np.zeros((d, d), complex)
            e[i, k] = e[k, i] = 1 / np.sqrt(2)
            basis.append(e)
            e = np.zeros((d, d), complex)
            e[i, k], e[k, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            basis.append(e)
    return np.array(basis)


@dataclass(frozen=True)
class Reconstruction:
    rho: np.ndarray
    residual: float
    min_eigenvalue: float
    projected: bool


def reconstruct_density(samples):
    """Linear-inversion estimate of ``rho`` from ``(unitary, tomogram)`` pairs.

    Solves the least-squares problem for a Hermitian matrix under the
    unit-trace constraint; small negative eigenvalues are clipped.
    """
    samples = list(samples)
    if not samples:
        raise InformationallyIncompleteError("no tomogram samples given")
    d = np.asarray(samples[0][0]).shape[0]
    basis = _hermitian_basis(d)
    rows, target = [], []
    for u, w in samples:
        u = check_unitary(u)
        w = np.asarray(w, dtype=float)
        if u.shape != (d, d) or w.shape != (d,):
            raise DomainError(f"sample shapes {u.shape}, {w.shape} do not match dimension {d}")
        # projector onto u^dagger |m>, one row per outcome m
        proj = np.einsum("mi,mk->mik", u.conj(), u)
        rows.append(np.einsum("bij,mji->mb", basis, proj).real)
        target.append(w)
    a, b = np.vstack(rows), np.concatenate(target)
    if np.linalg.matrix_rank(a, tol=1e-9) < d * d:
        raise InformationallyIncompleteError(
            f"design matrix has rank {np.linalg.matrix_rank(a, tol=1e-9)} < {d * d}"
        )
    c = np.einsum("bii->b", basis).real
    kkt = np.block([[2 * a.T @ a, c[:, None]], [c[None, :], np.zeros((1, 1))]])
    sol = np.linalg.solve(kkt, np.concatenate([2 * a.T @ b, [1.0]]))
    x = sol[:-1]
    residual = float(np.linalg.norm(a @ x - b))
    rho = np.einsum("b,bij->ij", x, basis)
    rho = (rho + rho.conj().T) / 2
    vals, vecs = np.linalg.eigh(rho)
    lam_min = float(vals.min())
    projected = lam_min < 0
    if projected:
        if lam_min < -PSD_CLIP:
            warnings.warn(
                f"linear inversion gave eigenvalue {lam_min:.3g}; clipping a strongly non-physical estimate",
                RuntimeWarning,
                stacklevel=2,
            )
        vals = np.clip(vals, 0, None)
        vals /= vals.sum()
        rho = (vecs * vals) @ vecs.conj().T
    return Reconstruction(rho, residual, lam_min, projected)


def random_density_matrix(d, rng=None, rank=None):
    """Ginibre-ensemble density matrix ``G G^dagger / Tr(G G^dagger)``."""
    rng = np.random.default_rng(rng)
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def haar_unitary(d, rng=None):
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def pure_state(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
