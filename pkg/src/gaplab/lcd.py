"""Least common denominator of a unit vector against the integer lattice.

The true LCD is the infimum of the scalings theta > 0 at which theta*x
comes closer to Z^n than a slowly growing threshold.  Exact computation is
not possible in floating point, so lcd_approx reports a *feasible* upper
bracket together with the last scanned infeasible point; downstream
inequality checks stay one-sided and sound because any feasible theta
upper-bounds the infimum from the feasible side.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ParameterError
from .params import DEFAULTS, default_theta_max

# absolute slack applied to the strict feasibility inequality, so grid
# points sitting on the boundary cannot flap between runs
FEASIBILITY_SLACK = 1e-12

_SCAN_CHUNK = 4096


@dataclass(frozen=True)
class LCDParams:
    """Threshold-function and search parameters."""

    gamma: float = DEFAULTS["gamma"]
    p: float = 1.0
    theta_max: float = 0.0
    coarse_step: float = DEFAULTS["coarse_step"]
    refine_iters: int = DEFAULTS["refine_iters"]

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError("gamma", f"must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.p <= 1.0:
            raise ParameterError("p", f"must be in (0, 1], got {self.p}")
        if self.coarse_step <= 0.0:
            raise ParameterError("coarse_step", "must be positive")
        if self.refine_iters < 0:
            raise ParameterError("refine_iters", "must be nonnegative")
        if self.theta_max <= 1.0 / math.sqrt(self.gamma * self.p):
            raise ParameterError(
                "theta_max",
                f"must exceed 1/sqrt(gamma*p) = {1.0 / math.sqrt(self.gamma * self.p)}",
            )

    @classmethod
    def for_sparsity(cls, p, alpha=DEFAULTS["alpha"], gamma=DEFAULTS["gamma"], **kw):
        """Search cap p**(-1/2) exp(1/alpha), the range the experiments care about."""
        return cls(gamma=gamma, p=p, theta_max=default_theta_max(p, alpha), **kw)


@dataclass(frozen=True)
class LCDResult:
    """Feasible upper bracket for the LCD, with the search resolution.

    When capped, no scaling up to theta_max qualified and theta_star is a
    certified lower bound (at the scan resolution) rather than a feasible
    point.
    """

    theta_star: float
    bracket_low: float
    resolution: float
    capped: bool


def lcd_threshold(theta, params):
    """Lattice-proximity threshold sqrt(log+(sqrt(gamma p) theta) / (gamma p))."""
    if theta <= 0.0:
        raise ParameterError("theta", "must be positive")
    gp = params.gamma * params.p
    t = math.sqrt(gp) * theta
    logplus = math.log(t) if t > 1.0 else 0.0
    return math.sqrt(logplus / gp)


def dist_to_lattice(y):
    """Euclidean distance from y to the nearest integer point (half-to-even rounding)."""
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ParameterError("y", "entries must be finite")
    frac = y - np.rint(y)
    return float(np.linalg.norm(frac))


def _feasible(theta, x, params):
    return dist_to_lattice(theta * x) + FEASIBILITY_SLACK < lcd_threshold(theta, params)


def _scan_first_feasible(x, params):
    """First feasible grid point theta in {step, 2*step, ...} or None.

    Evaluates the grid in vectorized chunks and stops at the first hit.
    The threshold only activates above 1/sqrt(gamma*p), so the scan can
    skip the dead prefix.
    """
    step = params.coarse_step
    gp = params.gamma * params.p
    start = max(1, int(math.floor(1.0 / math.sqrt(gp) / step)))
    total = int(math.floor(params.theta_max / step + 1e-9))
    lo = start
    while lo <= total:
        hi = min(lo + _SCAN_CHUNK - 1, total)
        thetas = np.arange(lo, hi + 1, dtype=np.float64) * step
        y = thetas[:, None] * x[None, :]
        dist = np.linalg.norm(y - np.rint(y), axis=1)
        t = np.sqrt(gp) * thetas
        thresh = np.sqrt(np.where(t > 1.0, np.log(np.maximum(t, 1.0)), 0.0) / gp)
        hits = np.flatnonzero(dist + FEASIBILITY_SLACK < thresh)
        if hits.size:
            return float(thetas[hits[0]])
        lo = hi + 1
    return None


def lcd_approx(x, params):
    """Bracketed grid search for the LCD of a unit vector.

    Scans theta on the coarse grid up to theta_max; on the first feasible
    point, bisects against the same predicate within one grid step.  The
    returned theta_star re-tests feasible by construction.  If nothing
    qualified, the result is capped at theta_max.
    """
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > 1e-12:
        raise ParameterError("x", f"must be a unit vector, got norm {norm!r}")

    first = _scan_first_feasible(x, params)
    if first is None:
        return LCDResult(
            theta_star=params.theta_max,
            bracket_low=params.theta_max,
            resolution=params.coarse_step,
            capped=True,
        )
    lo = max(0.0, first - params.coarse_step)
    hi = first
    for _ in range(params.refine_iters):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0 or mid == lo or mid == hi:
            break
        if _feasible(mid, x, params):
            hi = mid
        else:
            lo = mid
    return LCDResult(theta_star=hi, bracket_low=lo, resolution=hi - lo, capped=False)


def regularized_lcd(v, partition, params):
    """Largest block LCD over the partition blocks I_1..I_k0 (I_0 excluded).

    Each block is normalized to the unit sphere of its own support before
    the search; capped blocks contribute theta_max.  Returns the maximum
    and its block index (lowest index on ties).
    """
    v = np.asarray(v, dtype=np.float64)
    if partition.k0 < 1:
        raise ParameterError("partition", "needs at least one block beyond I_0")
    best = -math.inf
    best_block = None
    for k in range(1, partition.k0 + 1):
        idx = partition.blocks[k]
        block = v[idx]
        nrm = float(np.linalg.norm(block))
        if nrm == 0.0:
            raise ContractViolation(f"block {k} has zero norm; cannot normalize")
        res = lcd_approx(block / nrm, params)
        if res.theta_star > best:
            best = res.theta_star
            best_block = k
    return best, best_block
