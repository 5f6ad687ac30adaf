"""Random matrix ensembles: sparse subgaussian symmetric matrices and
Erdos-Renyi adjacency matrices, with reproducible counter-based RNG streams.

The sparse model has entries xi_ij * chi_ij for i >= j (diagonal included),
where xi is a mean-zero unit-variance subgaussian variable and chi is
Bernoulli(p).  "Sparse" refers to the entry law, not the storage: matrices
are held dense and mirrored so entry(i, j) == entry(j, i) exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ParameterError

SPARSE_SUBGAUSSIAN = "sparse_subgaussian"
ERDOS_RENYI = "erdos_renyi"

_SQRT3 = math.sqrt(3.0)

# Stream ids are partitioned into channels so one trial can consume several
# independent streams (matrix entries, auxiliary draws) without collisions.
_CHANNEL_SHIFT = 48


def stream_for(trial, channel=0):
    """Stream id for (trial, channel); trial < 2**48, channel < 2**16."""
    if not 0 <= trial < 1 << _CHANNEL_SHIFT:
        raise ParameterError("trial", "must be in [0, 2**48)")
    if not 0 <= channel < 1 << 16:
        raise ParameterError("channel", "must be in [0, 2**16)")
    return (channel << _CHANNEL_SHIFT) | trial


def derive_stream_rng(master_seed, stream_id):
    """Deterministic, statistically independent stream per (seed, stream).

    Built on the Philox counter-based generator keyed by the pair, so
    streams can be handed to parallel workers in any order and always
    reproduce the same draws.
    """
    master_seed = int(master_seed)
    stream_id = int(stream_id)
    if not 0 <= master_seed < 1 << 64:
        raise ParameterError("master_seed", "must be a 64-bit unsigned integer")
    if not 0 <= stream_id < 1 << 64:
        raise ParameterError("stream_id", "must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(key=[master_seed, stream_id]))


@dataclass(frozen=True)
class EntryDistribution:
    """Mean-zero, variance-one entry law with its subgaussian moment."""

    kind: str
    subgaussian_moment: float = 1.0

    KINDS = ("rademacher", "gaussian", "uniform_symmetric")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError("dist", f"unknown kind {self.kind!r}; choose from {self.KINDS}")
        if not self.subgaussian_moment > 0:
            raise ParameterError("subgaussian_moment", "must be positive")

    def sample(self, rng, size):
        if self.kind == "rademacher":
            return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        # uniform on [-sqrt(3), sqrt(3)]: bounded, non-lattice, variance 1
        return rng.uniform(-_SQRT3, _SQRT3, size=size)


def rademacher():
    return EntryDistribution("rademacher")


def gaussian():
    return EntryDistribution("gaussian")


def uniform_symmetric():
    return EntryDistribution("uniform_symmetric")


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameters of one random matrix/graph ensemble."""

    n: int
    p: float
    dist: EntryDistribution
    master_seed: int
    kind: str = SPARSE_SUBGAUSSIAN

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError("n", "must be at least 2")
        if self.kind not in (SPARSE_SUBGAUSSIAN, ERDOS_RENYI):
            raise ParameterError("kind", f"unknown ensemble kind {self.kind!r}")
        # p = 0 is meaningful only for adjacency matrices (the empty graph)
        p_min_ok = self.p >= 0.0 if self.kind == ERDOS_RENYI else self.p > 0.0
        if not (p_min_ok and self.p <= 1.0):
            raise ParameterError("p", f"must be in (0, 1], got {self.p}")
        if not 0 <= int(self.master_seed) < 1 << 64:
            raise ParameterError("master_seed", "must be a 64-bit unsigned integer")


class SymMatrix:
    """Dense real symmetric matrix; symmetry guaranteed by construction.

    The logical content is the upper triangle; the full array is mirrored
    from it so entry(i, j) == entry(j, i) holds exactly, not just to
    rounding.
    """

    __slots__ = ("a",)

    def __init__(self, a):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError("a", "must be a square 2-d array")
        if not np.array_equal(a, a.T):
            raise ParameterError("a", "must be exactly symmetric; use from_upper to symmetrize")
        self.a = a

    @classmethod
    def from_upper(cls, a):
        """Build from the upper triangle of `a`, mirroring into the lower."""
        a = np.asarray(a, dtype=np.float64)
        u = np.triu(a)
        return cls(u + np.triu(a, 1).T)

    @property
    def n(self):
        return self.a.shape[0]

    def entry(self, i, j):
        return float(self.a[i, j])

    def __eq__(self, other):
        return isinstance(other, SymMatrix) and np.array_equal(self.a, other.a)

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def gen_sparse_symmetric(spec, stream_id=0):
    """Draw the sparse subgaussian model: entries xi*chi for i >= j, mirrored.

    The diagonal follows the same law as off-diagonal entries.  The same
    (spec, stream_id) always yields a bit-identical matrix.
    """
    if spec.kind != SPARSE_SUBGAUSSIAN:
        raise ParameterError("kind", f"expected {SPARSE_SUBGAUSSIAN}, got {spec.kind}")
    rng = derive_stream_rng(spec.master_seed, stream_id)
    n = spec.n
    xi = spec.dist.sample(rng, (n, n))
    chi = rng.random((n, n)) < spec.p
    upper = np.triu(np.where(chi, xi, 0.0))
    return SymMatrix(upper + np.triu(upper, 1).T)


def gen_er_adjacency(spec, stream_id=0):
    """Draw a G(n, p) adjacency matrix: off-diagonal Bernoulli(p), zero diagonal."""
    if spec.kind != ERDOS_RENYI:
        raise ParameterError("kind", f"expected {ERDOS_RENYI}, got {spec.kind}")
    rng = derive_stream_rng(spec.master_seed, stream_id)
    n = spec.n
    u = rng.random((n, n))
    upper = np.triu((u < spec.p).astype(np.float64), 1)
    return SymMatrix(upper + upper.T)


def center_adjacency(adj, p):
    """Subtract the mean p*(J - I) from an adjacency matrix.

    The diagonal must be exactly zero and stays zero; off-diagonal entries
    end up in {-p, 1-p}.
    """
    a = adj.a
    if np.any(np.diag(a) != 0.0):
        raise ContractViolation("center_adjacency requires an exactly zero diagonal")
    c = a - p
    np.fill_diagonal(c, 0.0)
    return SymMatrix(c)


def principal_minor(m, drop):
    """Remove row/column `drop`; also return the removed column and diagonal entry.

    The removed column is reported in original coordinate order with the
    diagonal entry excluded, so (minor, column, pivot) reassembles the
    input exactly.
    """
    n = m.n
    if n < 3:
        raise ParameterError("n", "principal_minor requires n >= 3")
    if not 0 <= drop < n:
        raise ParameterError("drop", f"index {drop} out of range for n={n}")
    keep = np.arange(n) != drop
    minor = SymMatrix(m.a[np.ix_(keep, keep)])
    column = m.a[keep, drop].copy()
    pivot = float(m.a[drop, drop])
    return minor, column, pivot


def _fmt(x):
    return format(float(x), ".17g")


def save_matrix(m, path_or_file):
    """Plain-text matrix format: line "n", then n rows of n floats (17 sig digits)."""
    rows = [str(m.n)]
    rows.extend(" ".join(_fmt(v) for v in row) for row in m.a)
    text = "\n".join(rows) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_matrix(path_or_file):
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n = int(lines[0])
    if len(lines) != n + 1:
        raise ParameterError("matrix_file", f"expected {n} rows, found {len(lines) - 1}")
    a = np.array([[float(v) for v in ln.split()] for ln in lines[1:]], dtype=np.float64)
    if a.shape != (n, n):
        raise ParameterError("matrix_file", "row length disagrees with header")
    return SymMatrix(a)
