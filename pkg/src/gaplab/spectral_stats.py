"""Gap statistics and the headline Monte Carlo experiments: gap-tail
curves, minimum-gap scaling, simple-spectrum rates, operator-norm
concentration, and eigenvector non-degeneration.

All experiments draw one RNG stream per trial from (master_seed, trial),
so results are reproducible bit-for-bit at any parallelism level; trials
whose decomposition fails to converge are excluded and counted, never
silently dropped.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .eigensolver import eig_sym, operator_norm
from .ensemble import EnsembleSpec, gen_er_adjacency, gen_sparse_symmetric, stream_for
from .errors import ConvergenceError, ParameterError
from .params import DEFAULTS
from .util import pmap

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GapReport:
    gaps: np.ndarray
    min_gap: float
    max_gap: float
    min_gap_index: int
    scale: float  # sqrt(p/n), the natural gap unit


@dataclass
class TrialRecord:
    """One row of an experiment's JSONL log."""

    trial_id: int
    seed: int
    n: int
    p: float
    min_gap: float
    op_norm: float
    min_abs_coord: float | None
    simple_spectrum: bool

    def to_dict(self):
        return asdict(self)


def gap_report(spectrum, p):
    """Consecutive-gap summary in ascending-eigenvalue order."""
    if spectrum.n < 2:
        raise ParameterError("spectrum", "needs at least two eigenvalues")
    gaps = spectrum.gaps
    i = int(np.argmin(gaps))
    return GapReport(
        gaps=gaps,
        min_gap=float(gaps[i]),
        max_gap=float(np.max(gaps)),
        min_gap_index=i,
        scale=math.sqrt(p / spectrum.n),
    )


def simple_spectrum_check(spectrum, op_norm_value, tol_factor=DEFAULTS["tol_factor"]):
    """True when every gap clears tol_factor * max(1, ||M||)."""
    if spectrum.n < 2:
        return True
    return bool(np.min(spectrum.gaps) > tol_factor * max(1.0, op_norm_value))


def _generate(spec, trial):
    if spec.kind == "erdos_renyi":
        return gen_er_adjacency(spec, stream_id=stream_for(trial))
    return gen_sparse_symmetric(spec, stream_id=stream_for(trial))


def spectrum_trial(spec, trial, vectors=False, tol_factor=DEFAULTS["tol_factor"]):
    """Run one trial end to end and summarize it as a TrialRecord."""
    m = _generate(spec, trial)
    s = eig_sym(m, vectors=vectors)
    norm = operator_norm(s)
    min_abs = float(np.min(np.abs(s.vectors))) if vectors else None
    return TrialRecord(
        trial_id=trial,
        seed=stream_for(trial),
        n=spec.n,
        p=spec.p,
        min_gap=float(np.min(s.gaps)),
        op_norm=norm,
        min_abs_coord=min_abs,
        simple_spectrum=simple_spectrum_check(s, norm, tol_factor),
    )


def _run_trials(fn, trials, threads):
    """Run per-trial closures; returns (results, failed_trial_ids).

    Trials whose decomposition does not converge are excluded from the
    results but logged and counted, never silently dropped.
    """

    def guarded(t):
        try:
            return fn(t)
        except ConvergenceError as exc:
            log.warning("trial %d excluded: %s", t, exc)
            return None

    out = pmap(guarded, range(int(trials)), threads)
    failed = [t for t, r in enumerate(out) if r is None]
    if failed:
        log.warning("%d of %d trials failed to converge", len(failed), trials)
    return [r for r in out if r is not None], failed


def gap_tail_experiment(spec, trials, delta_grid, index_set=None, threads=1):
    """Empirical frequency of {gap_i <= delta * sqrt(p/n)} per index and delta.

    index_set entries are 1-based gap indices (gap i couples eigenvalues i
    and i+1); the bulk index n//2 is used when none are given.  A "sup"
    row per delta reports the largest frequency over all indices, the
    quantity the tail bound controls.
    """
    if trials < 1:
        raise ParameterError("trials", "must be positive")
    n = spec.n
    if index_set is None:
        index_set = [n // 2]
    index_set = [int(i) for i in index_set]
    for i in index_set:
        if not 1 <= i <= n - 1:
            raise ParameterError("index_set", f"gap index {i} outside [1, {n - 1}]")
    deltas = np.asarray(list(delta_grid), dtype=np.float64)
    scale = math.sqrt(spec.p / n)

    def one(t):
        m = _generate(spec, t)
        s = eig_sym(m, vectors=False)
        return s.gaps

    gaps_list, failed = _run_trials(one, trials, threads)
    done = len(gaps_list)
    counts = np.zeros((n - 1, deltas.size), dtype=np.int64)
    for gaps in gaps_list:
        counts += gaps[:, None] <= deltas[None, :] * scale

    rows = []
    for i in index_set:
        for d_idx, d in enumerate(deltas):
            rows.append(
                {
                    "index": str(i),
                    "delta": float(d),
                    "frequency": float(counts[i - 1, d_idx] / done),
                }
            )
    sup = counts.max(axis=0) / done
    for d_idx, d in enumerate(deltas):
        rows.append({"index": "sup", "delta": float(d), "frequency": float(sup[d_idx])})
    summary = {"trials": int(trials), "completed": done, "failed": len(failed)}
    return rows, summary


def min_gap_scaling_experiment(p, n_list, trials, dist=None, master_seed=0, threads=1):
    """Minimum-gap scaling across dimensions.

    Per n: median of min_gap over trials, and the fraction of trials at or
    below the union-bound floor sqrt(p) * n**(-3/2).  Also reports the
    least-squares slope of log(median) against log(n).
    """
    from .ensemble import rademacher

    if dist is None:
        dist = rademacher()
    n_list = [int(n) for n in n_list]
    for n in n_list:
        if n < 50:
            raise ParameterError("n_list", "all dimensions must be >= 50")

    rows = []
    medians = []
    for n in n_list:
        spec = EnsembleSpec(n=n, p=p, dist=dist, master_seed=master_seed)

        def one(t, spec=spec):
            m = _generate(spec, t)
            return float(np.min(eig_sym(m, vectors=False).gaps))

        mins, failed = _run_trials(one, trials, threads)
        mins = np.array(mins)
        floor = math.sqrt(p) * n ** (-1.5)
        med = float(np.median(mins))
        medians.append(med)
        rows.append(
            {
                "n": n,
                "median_min_gap": med,
                "floor": floor,
                "fraction_below_floor": float(np.mean(mins <= floor)),
                "completed": mins.size,
                "failed": len(failed),
            }
        )
    slope = float(np.polyfit(np.log(n_list), np.log(medians), 1)[0]) if len(n_list) > 1 else math.nan
    return rows, {"slope": slope}


def operator_norm_experiment(spec, trials, k_norm=DEFAULTS["k_norm"], threads=1):
    """Distribution of ||M|| / sqrt(pn) with the K assertion hook."""

    def one(t):
        m = _generate(spec, t)
        return operator_norm(eig_sym(m, vectors=False))

    norms, failed = _run_trials(one, trials, threads)
    ratios = np.array(norms) / math.sqrt(spec.p * spec.n)
    qs = [0.0, 0.25, 0.5, 0.75, 1.0]
    rows = [{"quantile": q, "ratio": float(np.quantile(ratios, q))} for q in qs]
    summary = {
        "max_ratio": float(ratios.max()),
        "median_ratio": float(np.median(ratios)),
        "k_norm": k_norm,
        "within_k": bool(ratios.max() <= k_norm),
        "completed": ratios.size,
        "failed": len(failed),
    }
    return rows, summary


def nondegeneration_experiment(spec, trials, exponent_c=10.0, threads=1):
    """Smallest eigenvector coordinate per trial versus the n**(-C) floor."""

    def one(t):
        rec = spectrum_trial(spec, t, vectors=True)
        return rec

    records, failed = _run_trials(one, trials, threads)
    floor = spec.n ** (-float(exponent_c))
    mins = np.array([r.min_abs_coord for r in records])
    rows = [r.to_dict() for r in records]
    summary = {
        "floor": floor,
        "fraction_below_floor": float(np.mean(mins < floor)),
        "min_observed": float(mins.min()),
        "completed": len(records),
        "failed": len(failed),
    }
    return rows, summary
