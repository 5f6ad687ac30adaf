"""Experiment runner CLI.

Subcommands generate matrices, decompose them, and run the bundled Monte
Carlo experiments ("presets").  Every run writes a manifest echoing the
complete configuration (including every numeric constant any module
consumes), a JSONL file of per-trial records, and summary tables.  Rerunning
with the same seed reproduces records and summaries byte for byte at any
parallelism level, and `replay` regenerates any single recorded trial from
its seed and checks it against the stored record.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .concentration import small_ball_experiment
from .eigensolver import _SWEEP_CAP_FACTOR, eig_sym, interlacing_check, operator_norm, save_spectrum
from .ensemble import (
    ERDOS_RENYI,
    SPARSE_SUBGAUSSIAN,
    EnsembleSpec,
    EntryDistribution,
    derive_stream_rng,
    gen_er_adjacency,
    gen_sparse_symmetric,
    load_matrix,
    save_matrix,
    stream_for,
)
from .errors import ContractViolation, ConvergenceError, ParameterError
from .lcd import FEASIBILITY_SLACK, LCDParams, dist_to_lattice, lcd_approx, lcd_threshold
from .nodal import Graph, default_zeta, nodal_report
from .params import DEFAULTS, rho_default
from .spectral_stats import gap_tail_experiment, spectrum_trial
from .util import pmap, read_jsonl, write_csv, write_jsonl
from .vector_geometry import (
    GeometryParams,
    Verdict,
    classify,
    incomp_spread_count,
    large_coordinate_set,
    level_block_norm_check,
    partition_indices,
)

RECORDS_FILE = "records.jsonl"
SUMMARY_FILE = "summary.csv"
SUMMARY_META_FILE = "summary.json"
MANIFEST_FILE = "manifest.json"

_DIST_NAMES = ("rademacher", "gaussian", "uniform_symmetric")


@dataclass
class RunConfig:
    """Fully resolved configuration of one run."""

    command: str
    preset: str | None = None
    n: int = 200
    p: float = 0.3
    dist: str = "rademacher"
    kind: str = SPARSE_SUBGAUSSIAN
    master_seed: int = 0
    trials: int = 100
    output_dir: str = "out"
    threads: int = 1
    constants: dict = field(default_factory=lambda: dict(DEFAULTS))
    options: dict = field(default_factory=dict)

    def ensemble(self, n=None, p=None, kind=None):
        return EnsembleSpec(
            n=int(n if n is not None else self.n),
            p=float(p if p is not None else self.p),
            dist=EntryDistribution(self.dist),
            master_seed=int(self.master_seed),
            kind=kind if kind is not None else self.kind,
        )

    def to_dict(self):
        return {
            "command": self.command,
            "preset": self.preset,
            "n": self.n,
            "p": self.p,
            "dist": self.dist,
            "kind": self.kind,
            "master_seed": self.master_seed,
            "trials": self.trials,
            "output_dir": self.output_dir,
            "threads": self.threads,
            "constants": dict(self.constants),
            "options": dict(self.options),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


# ---------------------------------------------------------------------------
# presets: each bundles defaults, a per-trial record function, a summarizer
# mapping the records to table rows, and assertion hooks


@dataclass(frozen=True)
class Preset:
    name: str
    defaults: dict
    per_trial: object  # fn(config, t) -> record dict, or None
    summarize: object  # fn(config, records) -> (rows, meta)
    check: object = None  # fn(config, meta) -> list of failure strings


def _interlacing_trial(config, t):
    spec = config.ensemble()
    m = gen_sparse_symmetric(spec, stream_id=stream_for(t, 0))
    aux = derive_stream_rng(spec.master_seed, stream_for(t, 1))
    drop = int(aux.integers(0, spec.n))
    holds, worst = interlacing_check(m, drop)
    return {
        "trial_id": t,
        "seed": stream_for(t, 0),
        "n": spec.n,
        "p": spec.p,
        "drop": drop,
        "holds": bool(holds),
        "max_violation": float(worst),
    }


def _interlacing_summary(config, records):
    slack = 1e-9 * math.sqrt(config.p * config.n)
    worst = max(r["max_violation"] for r in records)
    beyond = sum(r["max_violation"] > slack for r in records)
    meta = {
        "trials": len(records),
        "violations_beyond_slack": beyond,
        "slack": slack,
        "worst_violation": worst,
    }
    rows = [meta]
    return rows, meta


def _interlacing_check_hook(config, meta):
    if meta["violations_beyond_slack"]:
        return [f"{meta['violations_beyond_slack']} interlacing violations beyond slack"]
    return []


def _spectrum_record_trial(vectors):
    def fn(config, t):
        spec = config.ensemble()
        rec = spectrum_trial(spec, t, vectors=vectors, tol_factor=config.constants["tol_factor"])
        return rec.to_dict()

    return fn


def _simple_spectrum_summary(config, records):
    frac = sum(r["simple_spectrum"] for r in records) / len(records)
    meta = {
        "trials": len(records),
        "fraction_simple": frac,
        "min_min_gap": min(r["min_gap"] for r in records),
    }
    return [meta], meta


def _simple_spectrum_check(config, meta):
    if meta["fraction_simple"] < 1.0:
        return [f"simple-spectrum fraction {meta['fraction_simple']} < 1"]
    return []


def _gap_tail_trial(config, t):
    spec = config.ensemble()
    m = gen_sparse_symmetric(spec, stream_id=stream_for(t))
    s = eig_sym(m, vectors=False)
    return {
        "trial_id": t,
        "seed": stream_for(t),
        "n": spec.n,
        "p": spec.p,
        "gaps": [float(g) for g in s.gaps],
    }


def _gap_tail_summary(config, records):
    deltas = config.options.get("delta_grid") or [2.0**-k for k in range(6, 0, -1)]
    indices = config.options.get("indices") or [config.n // 2, "sup"]
    scale = math.sqrt(config.p / config.n)
    gaps = np.array([r["gaps"] for r in records])
    rows = []
    for idx in indices:
        for d in deltas:
            hits = gaps <= float(d) * scale
            if idx == "sup":
                freq = float(hits.mean(axis=0).max())
            else:
                freq = float(hits[:, int(idx) - 1].mean())
            rows.append({"index": str(idx), "delta": float(d), "frequency": freq})
    meta = {"trials": len(records), "rows": len(rows)}
    return rows, meta


def _min_gap_scaling_trial(config, t):
    n_list = config.options["n_list"]
    per = config.trials // len(n_list)
    n = n_list[min(t // per, len(n_list) - 1)]
    spec = config.ensemble(n=n)
    m = gen_sparse_symmetric(spec, stream_id=stream_for(t))
    s = eig_sym(m, vectors=False)
    return {
        "trial_id": t,
        "seed": stream_for(t),
        "n": n,
        "p": spec.p,
        "min_gap": float(np.min(s.gaps)),
    }


def _min_gap_scaling_summary(config, records):
    n_list = config.options["n_list"]
    rows = []
    medians = []
    for n in n_list:
        mins = np.array([r["min_gap"] for r in records if r["n"] == n])
        floor = math.sqrt(config.p) * n ** (-1.5)
        med = float(np.median(mins))
        medians.append(med)
        rows.append(
            {
                "n": n,
                "median_min_gap": med,
                "floor": floor,
                "fraction_below_floor": float(np.mean(mins <= floor)),
                "trials": int(mins.size),
            }
        )
    slope = float(np.polyfit(np.log(n_list), np.log(medians), 1)[0])
    meta = {
        "slope": slope,
        "max_fraction_below_floor": max(r["fraction_below_floor"] for r in rows),
    }
    return rows, meta


def _min_gap_scaling_check(config, meta):
    fails = []
    if meta["max_fraction_below_floor"] > 0.05:
        fails.append(f"floor fraction {meta['max_fraction_below_floor']} > 0.05")
    if not -1.6 <= meta["slope"] <= -0.6:
        fails.append(f"log-log slope {meta['slope']} outside [-1.6, -0.6]")
    return fails


def _opnorm_trial(config, t):
    spec = config.ensemble()
    m = (
        gen_er_adjacency(spec, stream_id=stream_for(t))
        if spec.kind == ERDOS_RENYI
        else gen_sparse_symmetric(spec, stream_id=stream_for(t))
    )
    s = eig_sym(m, vectors=False)
    norm = operator_norm(s)
    return {
        "trial_id": t,
        "seed": stream_for(t),
        "n": spec.n,
        "p": spec.p,
        "op_norm": norm,
        "ratio": norm / math.sqrt(spec.p * spec.n),
    }


def _opnorm_summary(config, records):
    ratios = np.array([r["ratio"] for r in records])
    rows = [
        {"quantile": q, "ratio": float(np.quantile(ratios, q))}
        for q in (0.0, 0.25, 0.5, 0.75, 1.0)
    ]
    meta = {
        "max_ratio": float(ratios.max()),
        "median_ratio": float(np.median(ratios)),
        "k_norm": config.constants["k_norm"],
        "within_k": bool(ratios.max() <= config.constants["k_norm"]),
    }
    return rows, meta


def _opnorm_check(config, meta):
    if not meta["within_k"]:
        return [f"max ratio {meta['max_ratio']} exceeds K = {meta['k_norm']}"]
    return []


def _nondegeneration_summary(config, records):
    expc = float(config.options.get("exponent_c", 10.0))
    floor = config.n ** (-expc)
    mins = np.array([r["min_abs_coord"] for r in records])
    meta = {
        "exponent_c": expc,
        "floor": floor,
        "fraction_below_floor": float(np.mean(mins < floor)),
        "min_observed": float(mins.min()),
    }
    return [meta], meta


def _nondegeneration_check(config, meta):
    if meta["fraction_below_floor"] > 0.05:
        return [f"non-degeneration fraction {meta['fraction_below_floor']} > 0.05"]
    return []


def _nodal_trial(config, t):
    spec = config.ensemble(kind=ERDOS_RENYI)
    adj = gen_er_adjacency(spec, stream_id=stream_for(t))
    graph = Graph.from_adjacency(adj)
    spectrum = eig_sym(adj)
    zeta_scale = config.constants["zeta"]
    weak_eq = two_dom = 0
    top_single = False
    for idx in range(spec.n):
        v = spectrum.vectors[:, idx]
        rep = nodal_report(graph, v, zeta=default_zeta(v, zeta_scale))
        if idx == spec.n - 1:
            top_single = len(rep.strong_domains) == 1
            continue
        weak_eq += rep.weak_eq_strong
        cover = sum(len(d) for d in rep.strong_domains)
        two_dom += len(rep.strong_domains) == 2 and cover == spec.n
    return {
        "trial_id": t,
        "seed": stream_for(t),
        "n": spec.n,
        "p": spec.p,
        "non_top": spec.n - 1,
        "weak_eq_strong": weak_eq,
        "two_domain": two_dom,
        "top_single_domain": bool(top_single),
    }


def _nodal_summary(config, records):
    non_top = sum(r["non_top"] for r in records)
    meta = {
        "graphs": len(records),
        "freq_weak_eq_strong": sum(r["weak_eq_strong"] for r in records) / non_top,
        "freq_two_domain": sum(r["two_domain"] for r in records) / non_top,
        "freq_top_single_domain": sum(r["top_single_domain"] for r in records) / len(records),
    }
    return [meta], meta


def _nodal_check(config, meta):
    fails = []
    if meta["freq_weak_eq_strong"] < 0.95:
        fails.append(f"weak==strong frequency {meta['freq_weak_eq_strong']} < 0.95")
    if meta["freq_two_domain"] < 0.95:
        fails.append(f"two-domain frequency {meta['freq_two_domain']} < 0.95")
    return fails


def _lcd_params(config):
    c = config.constants
    return LCDParams(
        gamma=c["gamma"],
        p=config.p,
        theta_max=math.exp(1.0 / c["alpha"]) / math.sqrt(config.p),
        coarse_step=c["coarse_step"],
        refine_iters=int(c["refine_iters"]),
    )


def _lcd_soundness_trial(config, t):
    params = _lcd_params(config)
    rng = derive_stream_rng(config.master_seed, stream_for(t))
    x = rng.standard_normal(config.n)
    x /= np.linalg.norm(x)
    res = lcd_approx(x, params)
    lower = 1.0 / (2.0 * float(np.max(np.abs(x))))
    if res.capped:
        feasible_ok = True  # nothing claimed feasible
    else:
        feasible_ok = (
            dist_to_lattice(res.theta_star * x) + FEASIBILITY_SLACK
            < lcd_threshold(res.theta_star, params)
        )
    return {
        "trial_id": t,
        "seed": stream_for(t),
        "theta_star": float(res.theta_star),
        "bracket_low": float(res.bracket_low),
        "capped": bool(res.capped),
        "feasible_ok": bool(feasible_ok),
        "lower_bound_ok": bool(res.capped or res.theta_star >= lower),
    }


def _lcd_soundness_summary(config, records):
    rows = [
        {
            "vector_id": r["trial_id"],
            "block": "all",
            "theta_star": r["theta_star"],
            "capped": r["capped"],
            "lower_bound_check": r["lower_bound_ok"],
        }
        for r in records
    ]
    meta = {
        "vectors": len(records),
        "capped": sum(r["capped"] for r in records),
        "feasibility_failures": sum(not r["feasible_ok"] for r in records),
        "lower_bound_failures": sum(not r["lower_bound_ok"] for r in records),
    }
    return rows, meta


def _lcd_soundness_check(config, meta):
    fails = []
    if meta["feasibility_failures"]:
        fails.append(f"{meta['feasibility_failures']} feasibility re-evaluations failed")
    if meta["lower_bound_failures"]:
        fails.append(f"{meta['lower_bound_failures']} results below 1/(2||x||_inf)")
    return fails


def _geometry_params(config, with_omega=True):
    c = config.constants
    omega = c["omega"] if with_omega else None
    m = math.ceil(c["omega"] * config.n)
    return GeometryParams(
        m=m,
        rho=rho_default(config.p, config.n, c["cbar"]),
        c_dom=c["c_dom"],
        omega=omega,
    )


def _partition_bounds_trial(config, t):
    from .lcd import regularized_lcd

    spec = config.ensemble()
    m = gen_sparse_symmetric(spec, stream_id=stream_for(t))
    s = eig_sym(m)
    gp = _geometry_params(config)
    lcdp = _lcd_params(config)
    omega = gp.omega
    n = spec.n
    dhat_floor = gp.c_dom**2 * 2.0**-5 * math.sqrt(n) * omega**1.5
    counts = {
        "eigenvectors": n,
        "incompressible": 0,
        "kbounds_ok": 0,
        "largeset_ok": 0,
        "blocknorm_ok": 0,
        "spread_ok": 0,
        "dhat_ok": 0,
    }
    for idx in range(n):
        v = s.vectors[:, idx]
        cls = classify(v, gp)
        if cls.verdict is not Verdict.INCOMPRESSIBLE:
            continue
        counts["incompressible"] += 1
        try:
            large_coordinate_set(v, gp)
            counts["largeset_ok"] += 1
        except ContractViolation:
            pass
        part = partition_indices(v, gp)
        if 1.0 / (2.0 * omega) <= part.k0 <= 1.0 / omega:
            counts["kbounds_ok"] += 1
        ok, _ = level_block_norm_check(v, part, gp)
        counts["blocknorm_ok"] += ok
        try:
            incomp_spread_count(v, gp.m, gp.rho)
            counts["spread_ok"] += 1
        except ContractViolation:
            pass
        dhat, _ = regularized_lcd(v, part, lcdp)
        counts["dhat_ok"] += dhat >= dhat_floor
    counts["trial_id"] = t
    counts["seed"] = stream_for(t)
    return counts


def _partition_bounds_summary(config, records):
    total = sum(r["incompressible"] for r in records)
    meta = {"incompressible": total}
    for key in ("kbounds_ok", "largeset_ok", "blocknorm_ok", "spread_ok", "dhat_ok"):
        meta[key] = sum(r[key] for r in records)
        meta[key.replace("_ok", "_fraction")] = meta[key] / total if total else 0.0
    return [meta], meta


def _partition_bounds_check(config, meta):
    fails = []
    for key in ("kbounds", "largeset", "blocknorm", "spread", "dhat"):
        if meta[f"{key}_fraction"] < 1.0:
            fails.append(f"{key} held for only {meta[f'{key}_fraction']:.4f} of eigenvectors")
    return fails


def _inner_product_trial(config, t):
    from .ensemble import principal_minor

    spec = config.ensemble()
    m = gen_sparse_symmetric(spec, stream_id=stream_for(t, 0))
    aux = derive_stream_rng(spec.master_seed, stream_for(t, 1))
    drop = int(aux.integers(0, spec.n))
    minor, column, _ = principal_minor(m, drop)
    s = eig_sym(minor)
    idx = int(config.options.get("eigvec_index", minor.n // 2))
    w = s.vectors[:, idx]
    return {
        "trial_id": t,
        "seed": stream_for(t, 0),
        "drop": drop,
        "inner": abs(float(w @ column)),
    }


def _inner_product_summary(config, records):
    deltas = config.options.get("delta_grid") or [2.0**-k for k in range(6, -1, -1)]
    sqrt_p = math.sqrt(config.p)
    values = np.array([r["inner"] for r in records])
    rows = [
        {"delta": float(d), "probability": float(np.mean(values <= float(d) * sqrt_p))}
        for d in deltas
    ]
    meta = {"trials": len(records)}
    return rows, meta


def _smallball_summary(config, records):
    spec = config.ensemble()
    w_kind = config.options.get("w_kind", "uniform")
    if w_kind == "e1":
        w = np.zeros(config.n)
        w[0] = 1.0
    else:
        w = np.full(config.n, 1.0 / math.sqrt(config.n))
    eps_grid = config.options.get("eps_grid") or [2.0**-k for k in range(6, 0, -1)]
    rows = small_ball_experiment(
        w, spec, eps_grid, trials=config.trials, lcd_params=_lcd_params(config)
    )
    meta = {"max_ratio": max(r["ratio"] for r in rows), "w_kind": w_kind}
    return rows, meta


PRESETS = {
    "interlacing": Preset(
        "interlacing",
        {"n": 50, "p": 0.3, "trials": 1000},
        _interlacing_trial,
        _interlacing_summary,
        _interlacing_check_hook,
    ),
    "simple-spectrum": Preset(
        "simple-spectrum",
        {"n": 400, "p": 0.1, "trials": 500, "dist": "rademacher"},
        _spectrum_record_trial(vectors=False),
        _simple_spectrum_summary,
        _simple_spectrum_check,
    ),
    "gap-tail": Preset(
        "gap-tail",
        {"n": 200, "p": 0.5, "trials": 500},
        _gap_tail_trial,
        _gap_tail_summary,
    ),
    "min-gap-scaling": Preset(
        "min-gap-scaling",
        {"p": 0.5, "trials": 600, "options": {"n_list": [100, 200, 400]}},
        _min_gap_scaling_trial,
        _min_gap_scaling_summary,
        _min_gap_scaling_check,
    ),
    "operator-norm": Preset(
        "operator-norm",
        {"n": 300, "p": 0.2, "trials": 200},
        _opnorm_trial,
        _opnorm_summary,
        _opnorm_check,
    ),
    "operator-norm-dense": Preset(
        "operator-norm-dense",
        {"n": 200, "p": 1.0, "trials": 50},
        _opnorm_trial,
        _opnorm_summary,
    ),
    "nondegeneration": Preset(
        "nondegeneration",
        {"n": 300, "p": 0.2, "trials": 100, "options": {"exponent_c": 10.0}},
        _spectrum_record_trial(vectors=True),
        _nondegeneration_summary,
        _nondegeneration_check,
    ),
    "nodal": Preset(
        "nodal",
        {"n": 300, "p": 0.2, "trials": 20, "kind": ERDOS_RENYI},
        _nodal_trial,
        _nodal_summary,
        _nodal_check,
    ),
    "lcd-soundness": Preset(
        "lcd-soundness",
        {"n": 20, "p": 0.3, "trials": 10000},
        _lcd_soundness_trial,
        _lcd_soundness_summary,
        _lcd_soundness_check,
    ),
    "partition-bounds": Preset(
        "partition-bounds",
        {"n": 200, "p": 0.3, "trials": 3},
        _partition_bounds_trial,
        _partition_bounds_summary,
        _partition_bounds_check,
    ),
    "smallball": Preset(
        "smallball",
        {"n": 50, "p": 0.3, "trials": 100000},
        None,
        _smallball_summary,
    ),
    "inner-product": Preset(
        "inner-product",
        {"n": 200, "p": 0.3, "trials": 2000},
        _inner_product_trial,
        _inner_product_summary,
    ),
}


# ---------------------------------------------------------------------------
# run/replay machinery


def _manifest_constants(config):
    consts = dict(config.constants)
    consts["feasibility_slack"] = FEASIBILITY_SLACK
    consts["sweep_cap_factor"] = _SWEEP_CAP_FACTOR
    return consts


def run(config):
    """Execute a configured experiment; returns the process exit status.

    Artifacts land in config.output_dir: manifest.json (config echo +
    version + timestamp), records.jsonl (one record per trial, ordered by
    trial id), summary.csv and summary.json.  Assertion-hook failures
    produce a nonzero status after all artifacts are written.
    """
    preset = PRESETS[config.preset]
    os.makedirs(config.output_dir, exist_ok=True)

    records = []
    if preset.per_trial is not None:
        records = pmap(
            lambda t: preset.per_trial(config, t), range(config.trials), config.threads
        )
        records.sort(key=lambda r: r["trial_id"])
    write_jsonl(os.path.join(config.output_dir, RECORDS_FILE), records)

    rows, meta = preset.summarize(config, records)
    write_csv(os.path.join(config.output_dir, SUMMARY_FILE), rows)
    with open(os.path.join(config.output_dir, SUMMARY_META_FILE), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
        fh.write("\n")

    manifest = {
        "version": __version__,
        "created_unix": time.time(),
        "config": config.to_dict(),
        "constants": _manifest_constants(config),
        "artifacts": {
            "records": RECORDS_FILE,
            "summary": SUMMARY_FILE,
            "summary_meta": SUMMARY_META_FILE,
        },
    }
    with open(os.path.join(config.output_dir, MANIFEST_FILE), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")

    failures = preset.check(config, meta) if preset.check else []
    for msg in failures:
        print(f"assertion failed: {msg}", file=sys.stderr)
    return 1 if failures else 0


def replay(manifest_path, trial_id):
    """Regenerate one recorded trial from its seed and compare field by field.

    Returns the regenerated record.  Raises ContractViolation naming the
    differing fields if it does not match the stored one, and
    ParameterError if the trial is missing.
    """
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("version") != __version__:
        print(
            f"warning: manifest version {manifest.get('version')} != {__version__}",
            file=sys.stderr,
        )
    config = RunConfig.from_dict(manifest["config"])
    preset = PRESETS[config.preset]
    if preset.per_trial is None:
        raise ParameterError("preset", f"{config.preset} keeps no per-trial records")
    records = read_jsonl(os.path.join(os.path.dirname(manifest_path), RECORDS_FILE))
    stored = next((r for r in records if r["trial_id"] == trial_id), None)
    if stored is None:
        raise ParameterError("trial_id", f"trial {trial_id} not found in records")
    fresh = json.loads(json.dumps(preset.per_trial(config, trial_id), sort_keys=True))
    diff = [k for k in sorted(set(stored) | set(fresh)) if stored.get(k) != fresh.get(k)]
    if diff:
        raise ContractViolation(f"replay mismatch in fields: {', '.join(diff)}")
    return fresh


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--out", default=None, help="output directory or file")
    sub.add_argument("--threads", type=int, default=None)
    sub.add_argument("--config", default=None, help="key=value config file; flags win")
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--p", type=float, default=None)
    sub.add_argument("--dist", choices=_DIST_NAMES, default=None)
    sub.add_argument("--trials", type=int, default=None)
    for key in DEFAULTS:
        sub.add_argument(f"--{key.replace('_', '-')}", type=float, default=None, dest=key)


def _build_parser():
    parser = argparse.ArgumentParser(prog="gaplab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("gen", help="generate one matrix to a text file")
    _add_common(sub)
    sub.add_argument("--kind", choices=(SPARSE_SUBGAUSSIAN, ERDOS_RENYI), default=SPARSE_SUBGAUSSIAN)

    sub = subs.add_parser("spectrum", help="decompose a matrix file (or a fresh draw)")
    _add_common(sub)
    sub.add_argument("--matrix", default=None, help="matrix text file; generated when absent")

    sub = subs.add_parser("gaps", help="gap-tail experiment")
    _add_common(sub)
    sub.add_argument("--delta-grid", default=None, help="comma-separated deltas")
    sub.add_argument("--indices", default=None, help="comma-separated gap indices; 'sup' allowed")

    sub = subs.add_parser("lcd", help="LCD search soundness sweep on random unit vectors")
    _add_common(sub)

    sub = subs.add_parser("classify", help="classify random unit vectors or eigenvectors")
    _add_common(sub)
    sub.add_argument("--source", choices=("random", "eigen"), default="eigen")
    sub.add_argument("--count", type=int, default=None, help="number of vectors")

    sub = subs.add_parser("nodal", help="nodal-domain experiment on G(n, p)")
    _add_common(sub)
    sub.add_argument("--edges", default=None, help="edge-list file instead of random graphs")

    sub = subs.add_parser("smallball", help="small-ball profile of w . X")
    _add_common(sub)
    sub.add_argument("--w-kind", choices=("uniform", "e1"), default="uniform")
    sub.add_argument("--eps-grid", default=None, help="comma-separated radii")

    sub = subs.add_parser("experiment", help="run a bundled experiment preset")
    _add_common(sub)
    sub.add_argument("--preset", choices=sorted(PRESETS), required=True)
    sub.add_argument("--n-list", default=None, help="dimension list for scaling presets")
    sub.add_argument("--exponent-c", type=float, default=None)

    sub = subs.add_parser("replay", help="regenerate one recorded trial and verify it")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--trial", type=int, required=True)
    return parser


def _read_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError("config", f"line {ln}: expected key = value")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _coerce(value, template):
    if isinstance(template, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    return value


def _resolve(args, preset=None):
    """Merge defaults < preset defaults < config file < explicit flags."""
    config = RunConfig(command=args.command)
    if preset is not None:
        config.preset = preset.name
        for key, val in preset.defaults.items():
            if key == "options":
                config.options.update(val)
            else:
                setattr(config, key, val)

    file_values = {}
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
    for key, val in file_values.items():
        if key in config.constants:
            config.constants[key] = float(val)
        elif hasattr(config, key):
            setattr(config, key, _coerce(val, getattr(config, key)))
        else:
            raise ParameterError("config", f"unknown key {key!r}")

    flag_map = {"seed": "master_seed", "out": "output_dir"}
    for flag in ("seed", "out", "threads", "n", "p", "dist", "trials"):
        val = getattr(args, flag, None)
        if val is not None:
            setattr(config, flag_map.get(flag, flag), val)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            config.constants[key] = val
    return config


def _parse_grid(text):
    return [float(v) for v in text.split(",") if v.strip()]


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4
    except ConvergenceError as exc:
        print(f"eigensolver error: {exc}", file=sys.stderr)
        return 5


def _dispatch(args):
    if args.command == "replay":
        record = replay(args.manifest, args.trial)
        print(json.dumps(record, sort_keys=True))
        return 0

    if args.command == "gen":
        config = _resolve(args)
        spec = config.ensemble(kind=args.kind)
        m = (
            gen_er_adjacency(spec)
            if args.kind == ERDOS_RENYI
            else gen_sparse_symmetric(spec)
        )
        out = config.output_dir if config.output_dir != "out" else "matrix.txt"
        save_matrix(m, out)
        print(out)
        return 0

    if args.command == "spectrum":
        config = _resolve(args)
        m = load_matrix(args.matrix) if args.matrix else gen_sparse_symmetric(config.ensemble())
        s = eig_sym(m)
        out = config.output_dir if config.output_dir != "out" else "spectrum.txt"
        save_spectrum(s, out)
        print(out)
        return 0

    if args.command == "gaps":
        config = _resolve(args, PRESETS["gap-tail"])
        config.command = "experiment"
        if args.delta_grid:
            config.options["delta_grid"] = _parse_grid(args.delta_grid)
        if args.indices:
            config.options["indices"] = [
                v.strip() if v.strip() == "sup" else int(v) for v in args.indices.split(",")
            ]
        return run(config)

    if args.command == "lcd":
        config = _resolve(args, PRESETS["lcd-soundness"])
        config.command = "experiment"
        return run(config)

    if args.command == "classify":
        return _run_classify(args)

    if args.command == "nodal":
        if args.edges:
            return _run_nodal_file(args)
        config = _resolve(args, PRESETS["nodal"])
        config.command = "experiment"
        return run(config)

    if args.command == "smallball":
        config = _resolve(args, PRESETS["smallball"])
        config.command = "experiment"
        if args.eps_grid:
            config.options["eps_grid"] = _parse_grid(args.eps_grid)
        config.options["w_kind"] = args.w_kind
        return run(config)

    if args.command == "experiment":
        config = _resolve(args, PRESETS[args.preset])
        if args.n_list:
            config.options["n_list"] = [int(v) for v in args.n_list.split(",")]
        if args.exponent_c is not None:
            config.options["exponent_c"] = args.exponent_c
        return run(config)

    raise ParameterError("command", f"unknown command {args.command!r}")


def _run_classify(args):
    config = _resolve(args)
    count = args.count or 100
    gp = _geometry_params(config)
    os.makedirs(config.output_dir, exist_ok=True)
    rows = []
    if args.source == "eigen":
        spec = config.ensemble()
        s = eig_sym(gen_sparse_symmetric(spec))
        vectors = (s.vectors[:, i] for i in range(min(count, spec.n)))
    else:
        def _random_units():
            for t in range(count):
                rng = derive_stream_rng(config.master_seed, stream_for(t))
                x = rng.standard_normal(config.n)
                yield x / np.linalg.norm(x)

        vectors = _random_units()
    for vid, v in enumerate(vectors):
        cls = classify(v, gp)
        row = {
            "vector_id": vid,
            "verdict": cls.verdict.value,
            "level_j": cls.level_j if cls.level_j is not None else "",
            "tail_norm": cls.tail_norm,
            "tail_inf": cls.tail_inf,
            "sigma_size": "",
            "k0": "",
        }
        if cls.verdict is Verdict.INCOMPRESSIBLE:
            row["sigma_size"] = int(large_coordinate_set(v, gp).size)
            row["k0"] = partition_indices(v, gp).k0
        rows.append(row)
    write_csv(
        os.path.join(config.output_dir, SUMMARY_FILE),
        rows,
        fieldnames=["vector_id", "verdict", "level_j", "tail_norm", "tail_inf", "sigma_size", "k0"],
    )
    print(os.path.join(config.output_dir, SUMMARY_FILE))
    return 0


def _run_nodal_file(args):
    config = _resolve(args)
    graph = Graph.from_edge_file(args.edges)
    a = np.zeros((graph.n, graph.n))
    for u, v in graph.edges:
        a[u, v] = a[v, u] = 1.0
    from .ensemble import SymMatrix

    s = eig_sym(SymMatrix(a))
    os.makedirs(config.output_dir, exist_ok=True)
    rows = []
    for idx in range(graph.n):
        v = s.vectors[:, idx]
        rep = nodal_report(graph, v, zeta=default_zeta(v, config.constants["zeta"]))
        rows.append(
            {
                "eig_index": idx,
                "weak_count": len(rep.weak_domains),
                "strong_count": len(rep.strong_domains),
                "zero_count": len(rep.zero_vertices),
                "weak_eq_strong": rep.weak_eq_strong,
            }
        )
    write_csv(os.path.join(config.output_dir, SUMMARY_FILE), rows)
    print(os.path.join(config.output_dir, SUMMARY_FILE))
    return 0


if __name__ == "__main__":
    sys.exit(main())
