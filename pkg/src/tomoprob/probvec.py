"""Probability vectors, stochastic maps on the simplex and entropic inequalities.

Probability vectors are plain 1-D float arrays validated by
:func:`check_probability_vector`. Maps act on column vectors, so a
stochastic matrix has unit *column* sums.

Joint distributions of two subsystems are flattened row-major: for two
two-outcome systems the order is ``(++, +-, -+, --)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy import sparse

from ._validation import (
    STOCHASTIC_TOL,
    DomainError,
    check_probability_vector,
    check_stochastic_matrix,
    xlogx,
)

__all__ = [
    "StochasticMap",
    "shannon_entropy",
    "apply_map",
    "make_portrait",
    "set_partitions",
    "enumerate_portraits",
    "enumerate_permutations",
    "portrait_entropies",
    "permutation_entropies",
    "coarsening_chain",
    "check_entropy_chain",
    "subadditivity_check",
    "mutual_information",
    "qubit_qutrit_embedding",
    "embedding_inequality",
    "is_semigroup_closed",
    "EntropyChainReport",
    "SubadditivityReport",
]

INEQ_SLACK = 1e-12
MAX_PERMUTATION_DIM = 8
KINDS = ("general", "bistochastic", "permutation", "portrait", "purifier", "center")


def _classify(m):
    n = m.shape[0]
    binary = np.all((m == 0) | (m == 1))
    rows = m.sum(axis=1)
    if binary and np.all(rows == 1):
        return "permutation"
    if np.allclose(m, 1.0 / n, rtol=0, atol=STOCHASTIC_TOL):
        return "center"
    if binary:
        # 0/1 with unit column sums: every input lands in exactly one output
        return "purifier" if np.count_nonzero(rows) == 1 else "portrait"
    if np.all(np.abs(rows - 1) <= STOCHASTIC_TOL):
        return "bistochastic"
    return "general"


@dataclass(frozen=True)
class StochasticMap:
    """Column-stochastic ``N x N`` matrix acting on probability vectors.

    ``kind`` is inferred from the entries when not given; an explicit kind
    is checked against the entries.
    """

    entries: np.ndarray
    kind: str = field(default=None)

    def __post_init__(self):
        m = check_stochastic_matrix(self.entries).copy()
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        inferred = _classify(m)
        if self.kind is None:
            object.__setattr__(self, "kind", inferred)
        elif self.kind not in KINDS:
            raise DomainError(f"unknown map kind {self.kind!r}")
        elif not _kind_compatible(self.kind, inferred, m):
            raise DomainError(f"entries are not of kind {self.kind!r} (look {inferred!r})")

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def zero_rows(self):
        """Number of rows containing only zeros."""
        return int(np.sum(~self.entries.any(axis=1)))

    @property
    def is_bistochastic(self):
        return bool(np.all(np.abs(self.entries.sum(axis=1) - 1) <= STOCHASTIC_TOL))

    def __matmul__(self, other):
        if isinstance(other, StochasticMap):
            if other.dim != self.dim:
                raise DomainError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return StochasticMap(self.entries @ other.entries)
        return apply_map(self, other)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @classmethod
    def center(cls, n):
        """Bistochastic map sending every vector to the simplex center."""
        return cls(np.full((n, n), 1.0 / n), kind="center")

    @classmethod
    def purifier(cls, n, target=0):
        """Idempotent map sending every vector to the vertex ``target``."""
        m = np.zeros((n, n))
        m[target, :] = 1.0
        return cls(m, kind="purifier")

    @classmethod
    def permutation(cls, perm):
        """Map with ``(M p)[perm[i]] = p[i]``."""
        perm = np.asarray(perm, dtype=int)
        n = perm.size
        if sorted(perm.tolist()) != list(range(n)):
            raise DomainError(f"{perm.tolist()} is not a permutation of range({n})")
        m = np.zeros((n, n))
        m[perm, np.arange(n)] = 1.0
        return cls(m, kind="permutation")

    def to_dict(self):
        return {"dim": self.dim, "rows": self.entries.tolist(), "kind": self.kind}

    @classmethod
    def from_dict(cls, data):
        m = np.asarray(data["rows"], dtype=float)
        if "dim" in data and m.shape != (data["dim"], data["dim"]):
            raise DomainError(f"rows have shape {m.shape}, declared dim {data['dim']}")
        return cls(m, kind=data.get("kind"))


def _kind_compatible(kind, inferred, m):
    if kind == inferred or kind == "general":
        return True
    if kind == "bistochastic":
        return inferred in ("bistochastic", "permutation", "center")
    if kind == "portrait":
        # identity-like and single-block partitions are portraits too
        return inferred in ("permutation", "purifier")
    if kind == "purifier":
        return inferred == "permutation" and m.shape[0] == 1
    return False


def shannon_entropy(p):
    """Shannon entropy ``-sum p_k ln p_k`` in nats, with ``0 ln 0 = 0``."""
    p = check_probability_vector(p)
    return float(-xlogx(p).sum()) + 0.0  # no negative zero


def _entropy_rows(P):
    # unchecked batch entropy along the last axis
    return -xlogx(P).sum(axis=-1)


def apply_map(m, p):
    """Return ``M p`` for a stochastic map ``M``."""
    if not isinstance(m, StochasticMap):
        m = StochasticMap(m)
    p = check_probability_vector(p)
    if p.size != m.dim:
        raise DomainError(f"dimension mismatch: map is {m.dim}, vector is {p.size}")
    out = m.entries @ p
    return np.where(out < 0, 0.0, out)


def make_portrait(n, groups):
    """Coarse-graining map that sums the components of each block.

    Blocks (0-based index collections) are ordered by their smallest element;
    block ``b`` lands in output slot ``b`` and the last ``n - len(groups)``
    slots are zero. ``make_portrait(4, [[0, 1], [2], [3]])`` maps
    ``(p1, p2, p3, p4)`` to ``(p1 + p2, p3, p4, 0)``.
    """
    blocks = [sorted(int(i) for i in g) for g in groups]
    if any(not b for b in blocks):
        raise DomainError("partition blocks must be non-empty")
    flat = sorted(i for b in blocks for i in b)
    if flat != list(range(n)):
        raise DomainError(f"blocks {blocks} do not partition range({n})")
    blocks.sort(key=lambda b: b[0])
    m = np.zeros((n, n))
    for row, b in enumerate(blocks):
        m[row, b] = 1.0
    return StochasticMap(m, kind="portrait")


def set_partitions(n):
    """Yield every partition of ``range(n)`` as a list of blocks."""
    if n == 0:
        yield []
        return
    for part in set_partitions(n - 1):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [n - 1]] + part[i + 1 :]
        yield part + [[n - 1]]


def enumerate_portraits(n):
    """All portrait maps on ``n`` components, one per set partition."""
    return [make_portrait(n, part) for part in set_partitions(n)]


def enumerate_permutations(n):
    """All ``n!`` permutation matrices, in lexicographic order of the permutation."""
    if n < 1 or n > MAX_PERMUTATION_DIM:
        raise DomainError(f"n must be in [1, {MAX_PERMUTATION_DIM}], got {n} ({n}! maps)")
    return [StochasticMap.permutation(perm) for perm in permutations(range(n))]


def portrait_entropies(P, partitions=None):
    """Entropy of every portrait image of each row of ``P``.

    Works on block sums over all ``2^n`` index subsets, so the cost per
    vector is one ``2^n``-term table instead of one matrix product per map.
    Returns ``(partitions, H)`` with ``H[i, k]`` the entropy of row ``i``
    under ``make_portrait(n, partitions[k])``. Rows are not validated.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[1]
    if n > MAX_PERMUTATION_DIM + 4:
        raise DomainError(f"subset table for n={n} has 2^{n} entries; too large")
    parts = list(set_partitions(n)) if partitions is None else [list(map(list, q)) for q in partitions]
    subsets = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    table = xlogx(P @ subsets.T)
    rows, cols = [], []
    for k, part in enumerate(parts):
        for block in part:
            rows.append(k)
            cols.append(sum(1 << int(i) for i in block))
    incidence = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(parts), 2**n))
    return parts, -np.asarray(incidence @ table.T).T


@lru_cache(maxsize=None)
def _all_permutations(n):
    if n > MAX_PERMUTATION_DIM:
        raise DomainError(f"n must be at most {MAX_PERMUTATION_DIM}, got {n} ({n}! orderings)")
    return np.array(list(permutations(range(n))))


def permutation_entropies(p, perms=None):
    """Entropy of ``p`` reordered by each permutation (all ``n!`` by default)."""
    p = check_probability_vector(p)
    perms = _all_permutations(p.size) if perms is None else np.asarray(perms)
    return -xlogx(p)[perms].sum(axis=-1)


def coarsening_chain(n, order=None):
    """Nested portrait maps with 1, 2, ..., n-1 zero rows.

    Step ``k`` merges the first ``k + 1`` entries of ``order`` (default
    ``range(n)``) into one block and keeps the rest as singletons, so each
    map refines into the next.
    """
    order = list(range(n)) if order is None else [int(i) for i in order]
    if sorted(order) != list(range(n)):
        raise DomainError(f"order {order} is not a permutation of range({n})")
    return [
        make_portrait(n, [order[: k + 1]] + [[i] for i in order[k + 1 :]])
        for k in range(1, n)
    ]


@dataclass(frozen=True)
class EntropyChainReport:
    entropies: list
    monotone: bool
    worst_slack: float

    def to_dict(self):
        return {"entropies": self.entropies, "monotone": self.monotone, "worst_slack": self.worst_slack}


def check_entropy_chain(p, chain, slack=INEQ_SLACK):
    """Evaluate ``H(p) >= H(M_1 p) >= H(M_2 p) >= ...`` for portrait maps.

    The reported entropies start with ``H(p)`` followed by one entry per map.
    Monotonicity is guaranteed when consecutive maps are nested
    coarse-grainings (see :func:`coarsening_chain`); the check itself
    accepts any portrait sequence with non-decreasing zero-row counts.
    """
    p = check_probability_vector(p)
    prev_zero = -1
    for m in chain:
        if m.kind not in ("portrait", "purifier", "permutation"):
            raise DomainError(f"chain contains a non-portrait map of kind {m.kind!r}")
        if m.dim != p.size:
            raise DomainError(f"dimension mismatch: map is {m.dim}, vector is {p.size}")
        if m.zero_rows < prev_zero:
            raise DomainError("zero-row counts along the chain must be non-decreasing")
        prev_zero = m.zero_rows
    ent = [shannon_entropy(p)] + [shannon_entropy(apply_map(m, p)) for m in chain]
    drops = np.diff(ent)
    worst = float(-drops.max()) if drops.size else 0.0
    return EntropyChainReport(ent, bool(worst >= -slack), worst)


@dataclass(frozen=True)
class SubadditivityReport:
    lhs: float
    rhs: float
    holds: bool

    @property
    def gap(self):
        return self.lhs - self.rhs

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "gap": self.gap, "holds": self.holds}


def subadditivity_check(p, shape=(2, 2), slack=INEQ_SLACK):
    """Compare ``H(A) + H(B)`` with ``H(AB)`` for a row-major joint vector."""
    p = check_probability_vector(p)
    if p.size != shape[0] * shape[1]:
        raise DomainError(f"joint vector has {p.size} components, shape {shape} needs {shape[0] * shape[1]}")
    joint = p.reshape(shape)
    lhs = shannon_entropy(joint.sum(axis=1)) + shannon_entropy(joint.sum(axis=0))
    rhs = shannon_entropy(p)
    return SubadditivityReport(lhs, rhs, bool(lhs >= rhs - slack))


def mutual_information(p):
    """``p4 ln p4 - (p2+p3+p4) ln(p2+p3+p4) - (p1+p4) ln(p1+p4)`` for a 4-vector.

    This is the gap of :func:`embedding_inequality`, i.e. the mutual
    information of the 2 x 3 embedding produced by
    :func:`qubit_qutrit_embedding`; it is non-negative.
    """
    p = check_probability_vector(p)
    if p.size != 4:
        raise DomainError(f"expected a 4-vector, got {p.size} components")
    p1, p2, p3, p4 = p
    return float(xlogx(p4) - xlogx(p2 + p3 + p4) - xlogx(p1 + p4))


def qubit_qutrit_embedding(p):
    """Embed a 4-vector into a 2 x 3 joint distribution ``(0, 0, p1, p2, p3, p4)``.

    Rows are the qubit outcomes ``(+, -)``, columns the qutrit outcomes
    ``(+1, 0, -1)``.
    """
    p = check_probability_vector(p)
    if p.size != 4:
        raise DomainError(f"expected a 4-vector, got {p.size} components")
    return np.concatenate([[0.0, 0.0], p])


def embedding_inequality(p, slack=INEQ_SLACK):
    """``H(p1, p2+p3+p4) + H(p2, p3, p1+p4) >= H(p)``."""
    p = check_probability_vector(p)
    if p.size != 4:
        raise DomainError(f"expected a 4-vector, got {p.size} components")
    p1, p2, p3, p4 = p
    lhs = shannon_entropy([p1, p2 + p3 + p4]) + shannon_entropy([p2, p3, p1 + p4])
    rhs = shannon_entropy(p)
    return SubadditivityReport(lhs, rhs, bool(lhs >= rhs - slack))


def is_semigroup_closed(a, b):
    """True iff ``A @ B`` is again a stochastic map."""
    a = a.entries if isinstance(a, StochasticMap) else np.asarray(a, dtype=float)
    b = b.entries if isinstance(b, StochasticMap) else np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    prod = a @ b
    return bool(np.all(prod >= 0) and np.all(np.abs(prod.sum(axis=0) - 1) <= STOCHASTIC_TOL))

