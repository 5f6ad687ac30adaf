"""Unit-sphere decomposition: compressible / dominated / incompressible
classification, the large-coordinate set, and the index partition that
feeds the regularized LCD.

Magnitude ranks are always taken with the deterministic tiebreak "equal
magnitudes keep ascending index order", so every operation here is a pure
function of its inputs.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ParameterError
from .params import DEFAULTS


class Verdict(enum.Enum):
    COMPRESSIBLE = "compressible"
    DOMINATED = "dominated"
    INCOMPRESSIBLE = "incompressible"


@dataclass(frozen=True)
class GeometryParams:
    """Knobs of the sphere decomposition.

    level_j is optional; operations that need the dyadic level derive it
    from the vector when it is None.
    """

    m: int
    rho: float
    c_dom: float = DEFAULTS["c_dom"]
    omega: float | None = None
    level_j: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("m", "must be a positive integer")
        if not 0.0 < self.rho < 1.0:
            raise ParameterError("rho", f"must be in (0, 1), got {self.rho}")
        if not 0.0 < self.c_dom < 1.0:
            raise ParameterError("c_dom", f"must be in (0, 1), got {self.c_dom}")
        if self.omega is not None and not 0.0 < self.omega < 1.0:
            raise ParameterError("omega", f"must be in (0, 1), got {self.omega}")

    def rho1(self):
        if self.level_j is None:
            raise ParameterError("level_j", "not set")
        return 2.0 ** (self.level_j - 1) * self.rho

    def rho2(self):
        if self.level_j is None:
            raise ParameterError("level_j", "not set")
        return 2.0 ** self.level_j * self.rho


@dataclass(frozen=True)
class VectorClassification:
    verdict: Verdict
    level_j: int | None
    tail_norm: float
    tail_inf: float


@dataclass
class Partition:
    """Index partition {I_0, ..., I_k0} of [n]; blocks[0] is I_0."""

    blocks: list
    k0: int
    r: int
    s: int
    r_prime: int
    tau: np.ndarray
    sigma_hat: np.ndarray
    sigma_bar: np.ndarray

    @property
    def n(self):
        return int(sum(b.size for b in self.blocks))

    def validate(self):
        n = self.n
        seen = np.concatenate([b for b in self.blocks])
        if seen.size != n or np.unique(seen).size != n:
            raise ContractViolation("blocks are not pairwise disjoint or do not cover [n]")
        for k in range(1, self.k0 + 1):
            if self.blocks[k].size != self.r + self.s:
                raise ContractViolation(f"block {k} has size {self.blocks[k].size} != r+s")
        if self.blocks[0].size > self.tau.size + self.r + self.s:
            raise ContractViolation("I_0 exceeds the top block plus one block of remainders")


def sorted_perm(x):
    """Indices ordered by decreasing |x_i|; equal magnitudes keep index order.

    Position r of the result is the index holding magnitude rank r (ranks
    count from zero).
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ParameterError("x", "entries must be finite")
    return np.argsort(-np.abs(x), kind="stable")


def tail_slice(x, m1, m2):
    """Keep coordinates with magnitude ranks m1..m2 (1-based, inclusive), zero the rest."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if not 1 <= m1 <= m2 <= n:
        raise ParameterError("m1", f"need 1 <= m1 <= m2 <= n, got ({m1}, {m2}) with n={n}")
    order = sorted_perm(x)
    out = np.zeros_like(x)
    keep = order[m1 - 1 : m2]
    out[keep] = x[keep]
    return out


def _check_unit(x, field="x"):
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > 1e-12:
        raise ParameterError(field, f"must be a unit vector, got norm {norm!r}")


def dist_to_sparse(x, m):
    """Euclidean distance from unit x to the set of m-sparse vectors.

    The nearest m-sparse vector keeps the m largest magnitudes, so the
    distance is exactly the l2 norm of the remaining tail.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_unit(x)
    n = x.size
    if m >= n:
        return 0.0
    order = sorted_perm(x)
    return float(np.linalg.norm(x[order[m:]]))


def _tail_stats(x, m):
    """(tail_norm, tail_inf) of the coordinates outside the top m magnitudes."""
    order = sorted_perm(x)
    tail = x[order[m:]]
    if tail.size == 0:
        return 0.0, 0.0
    return float(np.linalg.norm(tail)), float(np.max(np.abs(tail)))


def level_of(tail_norm, rho):
    """Dyadic level j >= 1 with tail_norm in [2**(j-1) rho, 2**j rho).

    Requires tail_norm > rho; capped so that 2**j * rho <= 2.
    """
    if tail_norm <= rho:
        raise ParameterError("tail_norm", "level is defined only above rho")
    j = int(math.floor(math.log2(tail_norm / rho))) + 1
    j_cap = int(math.floor(math.log2(2.0 / rho)))
    return min(j, j_cap)


def classify(x, params):
    """Three-way verdict for a unit vector.

    Compressible when the distance to m-sparse vectors is <= rho (checked
    first, so exactly m-sparse vectors never reach the dominated test);
    else dominated when tail_norm <= c_dom * sqrt(m) * tail_inf; else
    incompressible, with the dyadic level of the tail norm.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_unit(x)
    m = params.m
    tail_norm, tail_inf = _tail_stats(x, m)
    if tail_norm <= params.rho:
        return VectorClassification(Verdict.COMPRESSIBLE, None, tail_norm, tail_inf)
    if tail_norm <= params.c_dom * math.sqrt(m) * tail_inf:
        return VectorClassification(Verdict.DOMINATED, None, tail_norm, tail_inf)
    j = level_of(tail_norm, params.rho)
    return VectorClassification(Verdict.INCOMPRESSIBLE, j, tail_norm, tail_inf)


def _level_or_classify(v, params):
    if params.level_j is not None:
        return params.level_j
    cls = classify(v, params)
    if cls.verdict is not Verdict.INCOMPRESSIBLE:
        raise ParameterError("v", f"expected an incompressible vector, got {cls.verdict.value}")
    return cls.level_j


def large_coordinate_set(v, params):
    """Coordinates outside the top m that are uniformly lower-bounded.

    Returns sigma(v) = {i : |v_i| >= 2**(j-1) rho / (2 sqrt(n)), rank > m},
    which always has at least c_dom**2 * m / 8 members for incompressible
    v at level j; a smaller set signals a bug and raises.
    """
    v = np.asarray(v, dtype=np.float64)
    _check_unit(v, "v")
    j = _level_or_classify(v, params)
    n = v.size
    order = sorted_perm(v)
    tail_idx = order[params.m :]
    thresh = 2.0 ** (j - 1) * params.rho / (2.0 * math.sqrt(n))
    sigma = np.sort(tail_idx[np.abs(v[tail_idx]) >= thresh])
    floor = params.c_dom**2 * params.m / 8.0
    if sigma.size < floor:
        raise ContractViolation(
            f"|sigma(v)| = {sigma.size} below the guaranteed floor {floor}"
        )
    return sigma


def subselect(indices, k1, k2):
    """Elements k1..k2 (1-based, inclusive) of an index set ordered ascending."""
    indices = np.sort(np.asarray(indices))
    if not 1 <= k1 <= k2 <= indices.size:
        raise ParameterError("k1", f"selection <{k1}:{k2}> out of range for size {indices.size}")
    return indices[k1 - 1 : k2]


def partition_indices(v, params):
    """Split [n] into I_0 and k0 equal blocks for the regularized LCD.

    tau = top-m indices; sigma_hat = the ceil(c_dom**2 m / 8) lowest-index
    members of sigma(v); the k0 = floor((n-m)/ceil(omega n)) blocks each
    take r = floor(|sigma_hat|/k0) elements of sigma_hat and s =
    ceil(omega n) - r of the remainder, in ascending index order.  When a
    trailing block would run out of remainder elements (a divisibility
    artifact), it is topped up from the unused part of sigma_hat, which is
    always large enough.  Everything left over lands in I_0.
    """
    v = np.asarray(v, dtype=np.float64)
    if params.omega is None:
        raise ParameterError("omega", "partitioning requires omega")
    n = v.size
    m = params.m
    block = math.ceil(params.omega * n)
    k0 = (n - m) // block
    if k0 < 1:
        raise ParameterError("omega", f"ceil(omega*n)={block} leaves no room for blocks (n={n}, m={m})")

    order = sorted_perm(v)
    tau = np.sort(order[:m])
    sigma = large_coordinate_set(v, params)
    r_prime = math.ceil(params.c_dom**2 * m / 8.0)
    sigma_hat = sigma[:r_prime]  # lowest indices first
    in_used = np.zeros(n, dtype=bool)
    in_used[tau] = True
    in_used[sigma_hat] = True
    sigma_bar = np.flatnonzero(~in_used)

    r = r_prime // k0
    s = block - r
    if s < 0:
        raise ParameterError("omega", "block size smaller than the per-block sigma_hat share")

    blocks = [None] * (k0 + 1)
    hat_used = k0 * r
    bar_pos = 0
    top_pos = hat_used  # unused sigma_hat elements, consumed on shortage
    for k in range(1, k0 + 1):
        part_hat = sigma_hat[(k - 1) * r : k * r]
        take = min(s, sigma_bar.size - bar_pos)
        part_bar = sigma_bar[bar_pos : bar_pos + take]
        bar_pos += take
        short = s - take
        if short > 0:
            extra = sigma_hat[top_pos : top_pos + short]
            top_pos += short
            if extra.size < short:
                raise ContractViolation("sigma_hat cannot cover the remainder shortage")
            part_bar = np.concatenate([part_bar, extra])
        blocks[k] = np.sort(np.concatenate([part_hat, part_bar]))

    in_block = np.zeros(n, dtype=bool)
    for k in range(1, k0 + 1):
        in_block[blocks[k]] = True
    blocks[0] = np.flatnonzero(~in_block)

    part = Partition(
        blocks=blocks,
        k0=k0,
        r=r,
        s=s,
        r_prime=r_prime,
        tau=tau,
        sigma_hat=sigma_hat,
        sigma_bar=sigma_bar,
    )
    part.validate()
    return part


def level_block_norm_check(v, partition, params):
    """Check the two-sided block-norm bounds for every block I_1..I_k0.

    Lower bound c_dom * 2**(j-3) * rho * omega, upper bound
    2**j * rho / c_dom.  Returns (holds, report) where the report names
    the worst offending block and side on failure.
    """
    v = np.asarray(v, dtype=np.float64)
    j = _level_or_classify(v, params)
    if params.omega is None:
        raise ParameterError("omega", "required for the lower bound")
    lower = params.c_dom * 2.0 ** (j - 3) * params.rho * params.omega
    upper = 2.0**j * params.rho / params.c_dom
    holds = True
    worst = {"block": None, "norm": None, "side": None, "margin": math.inf}
    for k in range(1, partition.k0 + 1):
        nrm = float(np.linalg.norm(v[partition.blocks[k]]))
        for side, margin in (("lower", nrm - lower), ("upper", upper - nrm)):
            if margin < worst["margin"]:
                worst = {"block": k, "norm": nrm, "side": side, "margin": margin}
            if margin < 0:
                holds = False
    return holds, worst


def incomp_spread_count(v, m, rho):
    """Count coordinates with rho**2/sqrt(2n) <= |v_i| <= 1/sqrt(m).

    Requires v to be farther than rho from every m-sparse vector; the
    count is guaranteed to reach m * rho**2 / 2, and the guarantee is
    enforced.
    """
    v = np.asarray(v, dtype=np.float64)
    _check_unit(v, "v")
    n = v.size
    if dist_to_sparse(v, m) <= rho:
        raise ParameterError("v", "vector is compressible for (m, rho)")
    lo = rho**2 / math.sqrt(2.0 * n)
    hi = 1.0 / math.sqrt(m)
    a = np.abs(v)
    count = int(np.count_nonzero((a >= lo) & (a <= hi)))
    if count < m * rho**2 / 2.0:
        raise ContractViolation(
            f"spread count {count} below the guaranteed floor {m * rho ** 2 / 2.0}"
        )
    return count
