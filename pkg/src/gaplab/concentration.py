"""Exact Levy concentration of empirical samples and Monte Carlo small-ball
experiments for inner products of a fixed vector with a random sparse vector.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import SPARSE_SUBGAUSSIAN, derive_stream_rng, gen_sparse_symmetric, principal_minor, stream_for
from .errors import ParameterError
from .lcd import LCDParams, lcd_approx


@dataclass(frozen=True)
class LevyEstimate:
    """Largest fraction of samples inside any closed interval of radius epsilon."""

    epsilon: float
    value: float
    sample_count: int
    argmax_center: float


def _levy_sorted(s, eps):
    """Sliding-window sweep over sorted samples; returns (best_count, center).

    A maximizing closed interval [u - eps, u + eps] can always be slid so
    its left end sits on a sample, so anchoring at each sample is exact.
    Ties resolve to the leftmost maximizing interval.
    """
    width = 2.0 * eps
    ends = np.searchsorted(s, s + width, side="right")
    counts = ends - np.arange(s.size)
    i = int(np.argmax(counts))  # argmax takes the first, i.e. leftmost, maximizer
    return int(counts[i]), float(s[i]) + eps


def levy_concentration_scalar(samples, eps):
    """Exact empirical Levy concentration at radius eps."""
    if eps < 0.0:
        raise ParameterError("eps", "must be nonnegative")
    s = np.sort(np.asarray(samples, dtype=np.float64))
    if s.size == 0:
        raise ParameterError("samples", "must be nonempty")
    best, center = _levy_sorted(s, float(eps))
    return LevyEstimate(
        epsilon=float(eps),
        value=best / s.size,
        sample_count=int(s.size),
        argmax_center=float(center),
    )


def _draw_inner_products(w, spec, trials, stream_id):
    """trials samples of w . X with X coordinates xi_j * chi_j."""
    rng = derive_stream_rng(spec.master_seed, stream_id)
    n = w.size
    xi = spec.dist.sample(rng, (trials, n))
    chi = rng.random((trials, n)) < spec.p
    return np.where(chi, xi, 0.0) @ w


def small_ball_experiment(w, spec, eps_grid, trials, lcd_params=None, stream_id=0):
    """Empirical small-ball profile of w . X against the LCD reference curve.

    For each eps, reports the exact Levy concentration of the sample at
    radius sqrt(p)*eps next to the reference eps + 1/(sqrt(p)*theta_star(w))
    and their ratio, a Monte Carlo estimate of the (unspecified) constant
    in front of the reference.
    """
    w = np.asarray(w, dtype=np.float64)
    if abs(float(np.linalg.norm(w)) - 1.0) > 1e-12:
        raise ParameterError("w", "must be a unit vector")
    if trials < 1:
        raise ParameterError("trials", "must be positive")
    if lcd_params is None:
        lcd_params = LCDParams.for_sparsity(spec.p)
    samples = np.sort(_draw_inner_products(w, spec, int(trials), stream_id))
    theta_star = lcd_approx(w, lcd_params).theta_star
    sqrt_p = math.sqrt(spec.p)
    rows = []
    for eps in eps_grid:
        eps = float(eps)
        best, _ = _levy_sorted(samples, sqrt_p * eps)
        levy = best / samples.size
        reference = eps + 1.0 / (sqrt_p * theta_star)
        rows.append(
            {
                "eps": eps,
                "levy": levy,
                "reference": reference,
                "ratio": levy / reference,
            }
        )
    return rows


def eigenvector_inner_product_experiment(
    spec,
    trials,
    delta_grid,
    eigvec_index=None,
    threads=1,
):
    """Tail profile of |w^T X| where w is a minor eigenvector and X the removed column.

    Per trial: draw the matrix, remove a uniformly random coordinate, take
    the requested eigenvector of the minor (mid-spectrum by default), and
    test the removed column against it.  Reports, for each delta in the
    grid, the empirical probability that |w^T X| <= delta * sqrt(p).
    """
    from .util import pmap  # late import; util is dependency-free

    if spec.kind != SPARSE_SUBGAUSSIAN:
        raise ParameterError("kind", "experiment is defined for the sparse symmetric model")
    if spec.n < 20:
        raise ParameterError("n", "needs n >= 20")
    from .eigensolver import eig_sym

    deltas = np.asarray(list(delta_grid), dtype=np.float64)
    sqrt_p = math.sqrt(spec.p)

    def one_trial(t):
        m = gen_sparse_symmetric(spec, stream_id=stream_for(t, 0))
        aux = derive_stream_rng(spec.master_seed, stream_for(t, 1))
        drop = int(aux.integers(0, spec.n))
        minor, column, _ = principal_minor(m, drop)
        spectrum = eig_sym(minor)
        idx = (minor.n // 2) if eigvec_index is None else int(eigvec_index)
        w = spectrum.vectors[:, idx]
        return abs(float(w @ column))

    values = np.array(pmap(one_trial, range(int(trials)), threads))
    rows = []
    for d in deltas:
        rows.append(
            {
                "delta": float(d),
                "probability": float(np.mean(values <= d * sqrt_p)),
            }
        )
    return rows
