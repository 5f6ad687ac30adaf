import math

import numpy as np
import pytest

from gaplab.eigensolver import Spectrum, eig_sym, operator_norm
from gaplab.ensemble import EnsembleSpec, SymMatrix, gaussian, gen_sparse_symmetric, rademacher
from gaplab.errors import ParameterError
from gaplab.spectral_stats import (
    gap_report,
    gap_tail_experiment,
    min_gap_scaling_experiment,
    nondegeneration_experiment,
    operator_norm_experiment,
    simple_spectrum_check,
    spectrum_trial,
)


def spec(n=100, p=0.5, seed=0, dist=None):
    return EnsembleSpec(n=n, p=p, dist=dist or rademacher(), master_seed=seed)


class TestGapReport:
    def test_simple_sequence(self):
        rep = gap_report(Spectrum(np.array([1.0, 2.0, 4.0]), None), p=0.5)
        np.testing.assert_array_equal(rep.gaps, [1.0, 2.0])
        assert rep.min_gap == 1.0 and rep.max_gap == 2.0 and rep.min_gap_index == 0
        assert rep.scale == pytest.approx(math.sqrt(0.5 / 3.0))

    def test_repeated_eigenvalue(self):
        rep = gap_report(Spectrum(np.array([2.0, 2.0, 3.0]), None), p=1.0)
        assert rep.min_gap == 0.0

    def test_gaps_telescope(self):
        m = gen_sparse_symmetric(spec(n=50, seed=8, dist=gaussian()))
        s = eig_sym(m, vectors=False)
        rep = gap_report(s, 0.5)
        assert rep.gaps.sum() == pytest.approx(s.eigenvalues[-1] - s.eigenvalues[0])

    def test_needs_two(self):
        with pytest.raises(ParameterError):
            gap_report(Spectrum(np.array([1.0]), None), 0.5)


class TestSimpleSpectrumCheck:
    def test_repeated_false(self):
        s = eig_sym(SymMatrix(np.diag([1.0, 1.0, 2.0])))
        assert not simple_spectrum_check(s, operator_norm(s))

    def test_distinct_true(self):
        s = eig_sym(SymMatrix(np.diag([1.0, 2.0, 3.0])))
        assert simple_spectrum_check(s, operator_norm(s))


@pytest.fixture(scope="module")
def gap_tail_outcome():
    grid = [2.0**-k for k in range(6, -1, -1)]
    return gap_tail_experiment(spec(seed=2024), 2000, grid, index_set=[50], threads=4)


class TestGapTail:

    def test_all_trials_complete(self, gap_tail_outcome):
        _, summary = gap_tail_outcome
        assert summary["completed"] == 2000 and summary["failed"] == 0

    def test_monotone_in_delta(self, gap_tail_outcome):
        rows, _ = gap_tail_outcome
        for idx in ("50", "sup"):
            freqs = [r["frequency"] for r in rows if r["index"] == idx]
            assert all(a <= b for a, b in zip(freqs, freqs[1:]))

    def test_saturation_at_huge_delta(self):
        rows, _ = gap_tail_experiment(spec(n=60, seed=1), 20, [1e6], index_set=[30])
        assert all(r["frequency"] == 1.0 for r in rows)

    def test_halving_delta_at_least_halves_frequency(self, gap_tail_outcome):
        # consistency with a linear-or-faster tail: compare consecutive
        # dyadic points wherever the smaller bucket has >= 10 hits
        rows, _ = gap_tail_outcome
        checked = 0
        for idx in ("50", "sup"):
            freqs = [r["frequency"] for r in rows if r["index"] == idx]
            for small, big in zip(freqs, freqs[1:]):
                if small * 2000 >= 10:
                    assert big / small >= 1.5
                    checked += 1
        assert checked >= 2

    def test_bad_index_rejected(self):
        with pytest.raises(ParameterError):
            gap_tail_experiment(spec(n=60), 5, [0.5], index_set=[60])


@pytest.fixture(scope="module")
def scaling_outcome():
    return min_gap_scaling_experiment(0.5, [50, 100, 200], trials=60, master_seed=77, threads=4)


class TestMinGapScaling:

    def test_medians_strictly_decreasing(self, scaling_outcome):
        rows, _ = scaling_outcome
        meds = [r["median_min_gap"] for r in rows]
        assert meds[0] > meds[1] > meds[2]

    def test_floor_rarely_crossed(self, scaling_outcome):
        rows, _ = scaling_outcome
        assert all(r["fraction_below_floor"] <= 0.05 for r in rows)

    def test_slope_near_minus_one(self, scaling_outcome):
        _, summary = scaling_outcome
        assert -1.6 <= summary["slope"] <= -0.6

    def test_small_n_rejected(self):
        with pytest.raises(ParameterError):
            min_gap_scaling_experiment(0.5, [10], trials=5)


class TestOperatorNorm:
    def test_dense_case_near_semicircle_edge(self):
        rows, summary = operator_norm_experiment(spec(n=150, p=1.0, seed=5), 40, threads=4)
        assert 1.8 <= summary["median_ratio"] <= 2.2

    def test_ratios_positive_finite(self):
        rows, summary = operator_norm_experiment(spec(n=80, p=0.3, seed=6), 30)
        ratios = [r["ratio"] for r in rows]
        assert all(np.isfinite(r) and r > 0 for r in ratios)
        assert summary["within_k"]


@pytest.fixture(scope="module")
def nondeg_outcome():
    return nondegeneration_experiment(spec(n=120, p=0.3, seed=9), 30, threads=4)


class TestNondegeneration:

    def test_no_tiny_coordinates(self, nondeg_outcome):
        _, summary = nondeg_outcome
        assert summary["fraction_below_floor"] <= 0.05

    def test_pigeonhole_upper_bound(self, nondeg_outcome):
        rows, _ = nondeg_outcome
        for r in rows:
            assert r["min_abs_coord"] <= 1.0 / math.sqrt(r["n"]) + 1e-12

    def test_strictly_positive_when_simple(self, nondeg_outcome):
        rows, _ = nondeg_outcome
        for r in rows:
            if r["simple_spectrum"]:
                assert r["min_abs_coord"] > 0.0


class TestSpectrumTrialRecord:
    def test_fields_and_determinism(self):
        rec1 = spectrum_trial(spec(n=40, seed=4), 7, vectors=True)
        rec2 = spectrum_trial(spec(n=40, seed=4), 7, vectors=True)
        assert rec1 == rec2
        assert rec1.trial_id == 7 and rec1.n == 40
        assert rec1.simple_spectrum == (rec1.min_gap > 1e-8 * max(1.0, rec1.op_norm))

    def test_values_only_leaves_coord_unset(self):
        rec = spectrum_trial(spec(n=40, seed=4), 0, vectors=False)
        assert rec.min_abs_coord is None
