import io
import math

import numpy as np
import pytest

from gaplab.ensemble import (
    ERDOS_RENYI,
    EnsembleSpec,
    EntryDistribution,
    SymMatrix,
    center_adjacency,
    derive_stream_rng,
    gaussian,
    gen_er_adjacency,
    gen_sparse_symmetric,
    load_matrix,
    principal_minor,
    rademacher,
    save_matrix,
    uniform_symmetric,
)
from gaplab.errors import ContractViolation, ParameterError


def spec(n=100, p=0.3, dist=None, seed=0, kind="sparse_subgaussian"):
    return EnsembleSpec(n=n, p=p, dist=dist or rademacher(), master_seed=seed, kind=kind)


class TestStreams:
    def test_same_inputs_same_stream(self):
        a = derive_stream_rng(42, 0).random(100)
        b = derive_stream_rng(42, 0).random(100)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_no_collisions(self):
        firsts = {int(derive_stream_rng(42, s).integers(0, 2**63)) for s in range(1000)}
        assert len(firsts) == 1000

    def test_golden_snapshot(self):
        # frozen at implementation time; changing the stream derivation is a
        # breaking change for every stored manifest
        assert int(derive_stream_rng(42, 7).integers(0, 2**63)) == 5989843002481335505
        assert derive_stream_rng(42, 7).random() == 0.649420079613736

    def test_seed_range_validated(self):
        with pytest.raises(ParameterError):
            derive_stream_rng(-1, 0)
        with pytest.raises(ParameterError):
            derive_stream_rng(0, 1 << 64)


class TestEntryDistributions:
    @pytest.mark.parametrize("dist", [rademacher(), gaussian(), uniform_symmetric()])
    def test_moments(self, dist):
        rng = derive_stream_rng(123, 5)
        x = dist.sample(rng, 10**6)
        # mean within 4 sigma/sqrt(N) of zero, variance within 1% of one
        assert abs(x.mean()) <= 4.0 / math.sqrt(10**6)
        assert abs(x.var() - 1.0) <= 0.01

    def test_uniform_is_bounded(self):
        x = uniform_symmetric().sample(derive_stream_rng(1, 1), 10**5)
        assert np.all(np.abs(x) <= math.sqrt(3.0) + 1e-15)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ParameterError):
            EntryDistribution("cauchy")


class TestSparseSymmetric:
    def test_p_one_rademacher_entries(self):
        m = gen_sparse_symmetric(spec(n=3, p=1.0))
        assert np.all(np.isin(m.a, [-1.0, 1.0]))
        np.testing.assert_array_equal(m.a, m.a.T)

    def test_determinism(self):
        a = gen_sparse_symmetric(spec(seed=9), stream_id=4)
        b = gen_sparse_symmetric(spec(seed=9), stream_id=4)
        assert a == b
        c = gen_sparse_symmetric(spec(seed=9), stream_id=5)
        assert not np.array_equal(a.a, c.a)

    def test_sparsity_within_binomial_ci(self):
        n, p = 200, 0.3
        m = gen_sparse_symmetric(spec(n=n, p=p, seed=3))
        iu = np.triu_indices(n)
        k = np.count_nonzero(m.a[iu])
        total = len(iu[0])
        sd = math.sqrt(total * p * (1 - p))
        assert abs(k - total * p) <= 4 * sd

    def test_invalid_p(self):
        with pytest.raises(ParameterError, match="p"):
            spec(p=1.5)
        with pytest.raises(ParameterError, match="p"):
            spec(p=0.0)

    def test_wrong_kind_rejected(self):
        with pytest.raises(ParameterError):
            gen_sparse_symmetric(spec(kind=ERDOS_RENYI, p=0.3))


class TestErdosRenyi:
    def test_p_one_complete_graph(self):
        m = gen_er_adjacency(spec(n=4, p=1.0, kind=ERDOS_RENYI))
        expected = np.ones((4, 4)) - np.eye(4)
        np.testing.assert_array_equal(m.a, expected)

    def test_p_zero_empty_graph(self):
        m = gen_er_adjacency(spec(n=4, p=0.0, kind=ERDOS_RENYI))
        np.testing.assert_array_equal(m.a, np.zeros((4, 4)))

    def test_edge_count_ci(self):
        n, p = 300, 0.2
        m = gen_er_adjacency(spec(n=n, p=p, seed=11, kind=ERDOS_RENYI))
        edges = np.count_nonzero(np.triu(m.a, 1))
        total = n * (n - 1) / 2
        sd = math.sqrt(total * p * (1 - p))
        assert abs(edges - total * p) <= 4 * sd
        assert np.all(np.diag(m.a) == 0.0)


class TestCenterAdjacency:
    def test_complete_graph_centers_to_zero(self):
        m = gen_er_adjacency(spec(n=4, p=1.0, kind=ERDOS_RENYI))
        c = center_adjacency(m, 1.0)
        np.testing.assert_array_equal(c.a, np.zeros((4, 4)))

    def test_empty_graph_offdiagonal(self):
        c = center_adjacency(SymMatrix(np.zeros((2, 2))), 0.3)
        np.testing.assert_allclose(c.a, [[0.0, -0.3], [-0.3, 0.0]])

    def test_entries_in_two_point_set(self):
        p = 0.4
        m = gen_er_adjacency(spec(n=50, p=p, seed=2, kind=ERDOS_RENYI))
        c = center_adjacency(m, p)
        off = c.a[~np.eye(50, dtype=bool)]
        assert set(np.unique(off)) <= {-p, 1 - p}
        assert np.all(np.diag(c.a) == 0.0)

    def test_column_sums_clt(self):
        n, p = 100, 0.4
        m = gen_er_adjacency(spec(n=n, p=p, seed=7, kind=ERDOS_RENYI))
        c = center_adjacency(m, p)
        bound = 4.0 * math.sqrt(n * p * (1 - p))
        assert np.all(np.abs(c.a.sum(axis=0)) <= bound)

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(ContractViolation):
            center_adjacency(SymMatrix(np.eye(3)), 0.5)


class TestPrincipalMinor:
    def test_diag_drop_last(self):
        m = SymMatrix(np.diag([1.0, 2.0, 3.0]))
        minor, col, piv = principal_minor(m, 2)
        np.testing.assert_array_equal(minor.a, np.diag([1.0, 2.0]))
        np.testing.assert_array_equal(col, [0.0, 0.0])
        assert piv == 3.0

    def test_drop_first_keeps_rest_verbatim(self):
        base = np.array([[0, 1, 2], [1, 11, 12], [2, 12, 22]], dtype=float)
        m = SymMatrix(base)
        minor, col, piv = principal_minor(m, 0)
        np.testing.assert_array_equal(minor.a, base[1:, 1:])
        np.testing.assert_array_equal(col, base[1:, 0])
        assert piv == base[0, 0]

    def test_round_trip(self):
        m = gen_sparse_symmetric(spec(n=5, p=0.8, dist=gaussian(), seed=21))
        for drop in range(5):
            minor, col, piv = principal_minor(m, drop)
            rebuilt = np.zeros((5, 5))
            keep = np.arange(5) != drop
            rebuilt[np.ix_(keep, keep)] = minor.a
            rebuilt[keep, drop] = col
            rebuilt[drop, keep] = col
            rebuilt[drop, drop] = piv
            np.testing.assert_array_equal(rebuilt, m.a)

    def test_bad_index(self):
        m = SymMatrix(np.eye(3))
        with pytest.raises(ParameterError):
            principal_minor(m, 3)
        with pytest.raises(ParameterError):
            principal_minor(SymMatrix(np.eye(2)), 0)


class TestSerialization:
    def test_round_trip_bit_exact(self):
        m = gen_sparse_symmetric(spec(n=17, p=0.5, dist=gaussian(), seed=5))
        buf = io.StringIO()
        save_matrix(m, buf)
        again = load_matrix(io.StringIO(buf.getvalue()))
        np.testing.assert_array_equal(m.a, again.a)

    def test_serialized_form_deterministic(self):
        def dump(seed):
            buf = io.StringIO()
            save_matrix(gen_sparse_symmetric(spec(n=10, seed=seed)), buf)
            return buf.getvalue()

        assert dump(4) == dump(4)
        assert dump(4) != dump(6)


class TestSymMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(ParameterError):
            SymMatrix(np.array([[1.0, 2.0], [3.0, 4.0]]))

    def test_from_upper_mirrors(self):
        m = SymMatrix.from_upper(np.array([[1.0, 2.0], [99.0, 4.0]]))
        np.testing.assert_array_equal(m.a, [[1.0, 2.0], [2.0, 4.0]])
        assert m.entry(1, 0) == m.entry(0, 1) == 2.0
