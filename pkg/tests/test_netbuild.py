import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import gene_names, network_from_dense
from oracles import brute_top_k, random_symmetric_weights
from hierprop.errors import InvalidInputError
from hierprop.netbuild import (
    FeatureMatrix, SparseNetwork, align_genes, combine, normalize,
    pearson_correlation, pearson_network, top_k_filter,
)


def rows_with_correlation(R, p=40, seed=0):
    """Feature rows whose sample correlation matrix is exactly ``R``."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(p, R.shape[0]))
    X -= X.mean(axis=0)
    Q, _ = np.linalg.qr(X)
    return (Q @ np.linalg.cholesky(R).T).T


def dense(net):
    return net.matrix.toarray()


def assert_network_invariants(net):
    W = dense(net)
    assert np.array_equal(W, W.T)
    assert (W >= 0).all()
    assert not np.diag(W).any()


class TestPearson:
    def test_identical_rows_single_unit_edge(self):
        fm = FeatureMatrix(("a", "b"), np.array([[1.0, 2, 3, 5], [1.0, 2, 3, 5]]))
        net = pearson_network(fm, k=1)
        edges = list(net.edges())
        assert len(edges) == 1
        assert edges[0][:2] == ("a", "b")
        assert edges[0][2] == pytest.approx(1.0, abs=1e-12)

    def test_anticorrelated_rows_give_no_edges(self):
        fm = FeatureMatrix(("a", "b"), np.array([[1.0, 2, 3], [3.0, 2, 1]]))
        assert list(pearson_network(fm, k=1).edges()) == []

    def test_three_gene_either_endpoint(self):
        R = np.array([[1, 0.9, 0.5], [0.9, 1, 0.2], [0.5, 0.2, 1]])
        fm = FeatureMatrix(("g1", "g2", "g3"), rows_with_correlation(R))
        got = {(a, b): w for a, b, w in pearson_network(fm, k=1).edges()}
        assert set(got) == {("g1", "g2"), ("g1", "g3")}
        assert got["g1", "g2"] == pytest.approx(0.9, abs=1e-12)
        assert got["g1", "g3"] == pytest.approx(0.5, abs=1e-12)
        # the same decision from the brute-force filter on the exact matrix
        np.fill_diagonal(R, 0)
        assert np.array_equal(brute_top_k(R, 1), top_k_filter(R, 1).toarray() > 0)

    def test_matches_numpy_corrcoef_without_missing(self, rng):
        X = rng.normal(size=(15, 9))
        r = np.vstack([blk for _, blk in pearson_correlation(X, chunk_rows=4)])
        ref = np.corrcoef(X)
        np.fill_diagonal(ref, 0)
        assert np.allclose(r, ref, atol=1e-12)

    def test_pairwise_complete_matches_masked_oracle(self, rng):
        X = rng.normal(size=(12, 10))
        X[rng.random(X.shape) < 0.25] = np.nan
        r = pearson_correlation(X)
        for i in range(12):
            for j in range(12):
                if i == j:
                    continue
                both = ~np.isnan(X[i]) & ~np.isnan(X[j])
                a, b = X[i, both], X[j, both]
                if both.sum() < 3 or np.ptp(a) == 0 or np.ptp(b) == 0:
                    expect = 0.0
                else:
                    expect = np.corrcoef(a, b)[0, 1]
                assert r[i, j] == pytest.approx(expect, abs=1e-10)

    def test_constant_row_has_zero_correlation(self):
        X = np.array([[1.0, 1, 1, 1], [1.0, 2, 3, 4], [2.0, 4, 6, 9]])
        r = pearson_correlation(X)
        assert not r[0].any() and not r[:, 0].any()

    @pytest.mark.parametrize("k", [1, 2, 3, 5, 20])
    def test_top_k_matches_brute_force(self, rng, k):
        X = rng.normal(size=(25, 6))
        net = pearson_network(FeatureMatrix(gene_names(25), X), k=k, chunk_rows=7)
        r = np.corrcoef(X)
        np.fill_diagonal(r, 0)
        assert np.array_equal(dense(net) > 0, brute_top_k(r, k))
        assert_network_invariants(net)
        W = dense(net)
        assert np.allclose(W[W > 0], r[W > 0], atol=1e-12)

    def test_ties_at_kth_value_are_all_kept(self):
        r = np.array([[0, .5, .5, .1], [.5, 0, 0, 0], [.5, 0, 0, 0], [.1, 0, 0, 0]])
        kept = top_k_filter(r, 1).toarray() > 0
        assert kept[0, 1] and kept[0, 2]

    def test_rejects_single_gene(self):
        with pytest.raises(InvalidInputError):
            pearson_network(FeatureMatrix(("a",), np.ones((1, 4))), k=1)

    @given(st.integers(0, 10_000), st.integers(1, 6))
    def test_no_nonpositive_edges(self, seed, k):
        X = np.random.default_rng(seed).normal(size=(10, 5))
        W = dense(pearson_network(FeatureMatrix(gene_names(10), X), k=k))
        r = np.corrcoef(X)
        assert (r[W > 0] > 0).all()


class TestNormalize:
    def test_single_edge(self):
        net = network_from_dense(np.array([[0, 1.0], [1.0, 0]]))
        assert dense(normalize(net))[0, 1] == pytest.approx(1.0)

    def test_path(self):
        W = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        Wn = dense(normalize(network_from_dense(W)))
        assert Wn[0, 1] == pytest.approx(1 / np.sqrt(2), abs=1e-15)
        assert Wn[1, 2] == pytest.approx(1 / np.sqrt(2), abs=1e-15)

    def test_isolated_gene_is_safe(self):
        W = np.zeros((3, 3))
        W[0, 1] = W[1, 0] = 2.0
        Wn = dense(normalize(network_from_dense(W)))
        assert np.isfinite(Wn).all() and not Wn[2].any()

    def test_spectral_radius_random(self, rng):
        W = random_symmetric_weights(rng, 20, density=0.3)
        Wn = dense(normalize(network_from_dense(W)))
        assert np.max(np.abs(np.linalg.eigvalsh(Wn))) <= 1 + 1e-12
        assert_network_invariants(normalize(network_from_dense(W)))

    @given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, seed, c):
        W = random_symmetric_weights(np.random.default_rng(seed), 12, density=0.3)
        a = dense(normalize(network_from_dense(W)))
        b = dense(normalize(network_from_dense(c * W)))
        assert np.max(np.abs(a - b)) <= 1e-12


class TestCombine:
    def test_single_input(self, rng):
        net = network_from_dense(random_symmetric_weights(rng, 8, 0.4))
        assert np.array_equal(dense(combine([net])), dense(normalize(net)))

    def test_disjoint_edges_union(self):
        genes = gene_names(4)
        a = SparseNetwork.from_edges(genes, [(genes[0], genes[1], 1.0)])
        b = SparseNetwork.from_edges(genes, [(genes[2], genes[3], 3.0)])
        W = dense(combine([a, b]))
        assert set(zip(*np.nonzero(np.triu(W)))) == {(0, 1), (2, 3)}
        assert W[0, 1] == pytest.approx(1.0) and W[2, 3] == pytest.approx(1.0)

    def test_duplicate_copy_equals_single(self):
        # 5-node example: W + W = 2W and the factor 2 cancels in D^-1/2 W D^-1/2
        W = np.zeros((5, 5))
        for i, j, w in [(0, 1, .3), (1, 2, .8), (2, 3, .5), (3, 4, .9), (0, 4, .2), (1, 3, .4)]:
            W[i, j] = W[j, i] = w
        net = network_from_dense(W)
        d = W.sum(axis=1)
        oracle = W / np.sqrt(np.outer(d, d))
        assert np.allclose(dense(combine([net, net])), oracle, atol=1e-15)
        assert np.max(np.abs(dense(combine([net, net])) - dense(normalize(net)))) <= 1e-12

    def test_mismatched_universe(self):
        a = SparseNetwork.from_edges(("a", "b"), [("a", "b", 1.0)])
        b = SparseNetwork.from_edges(("a", "c"), [("a", "c", 1.0)])
        with pytest.raises(InvalidInputError):
            combine([a, b])


class TestAlign:
    def test_identity(self, rng):
        net = network_from_dense(random_symmetric_weights(rng, 6, 0.5))
        out = align_genes(net, net.gene_ids)
        assert np.array_equal(dense(out), dense(net))

    def test_new_gene_is_isolated(self):
        net = SparseNetwork.from_edges(("a", "b"), [("a", "b", 1.0)])
        out = align_genes(net, ("a", "b", "z"))
        assert out.n_genes == 3 and not dense(out)[2].any()

    def test_permutation_preserves_edges(self, rng):
        net = network_from_dense(random_symmetric_weights(rng, 9, 0.4))
        universe = tuple(np.array(net.gene_ids)[rng.permutation(9)])
        out = align_genes(net, universe)
        assert sorted(w for *_, w in out.edges()) == sorted(w for *_, w in net.edges())
        for a, b, w in net.edges():
            assert out.matrix[out.index_of(a), out.index_of(b)] == w

    def test_unknown_gene(self):
        net = SparseNetwork.from_edges(("a", "b"), [("a", "b", 1.0)])
        with pytest.raises(InvalidInputError):
            align_genes(net, ("a",))


class TestSparseNetwork:
    def test_rejects_asymmetric_and_negative(self):
        from scipy import sparse
        with pytest.raises(InvalidInputError):
            SparseNetwork(("a", "b"), sparse.csr_matrix(np.array([[0, 1.0], [0, 0]])))
        with pytest.raises(InvalidInputError):
            SparseNetwork.from_edges(("a", "b"), [("a", "b", -1.0)])

    def test_rejects_duplicates_and_self_loops(self):
        with pytest.raises(InvalidInputError):
            SparseNetwork.from_edges(("a", "b"), [("a", "b", 1.0), ("b", "a", 1.0)])
        with pytest.raises(InvalidInputError):
            SparseNetwork.from_edges(("a",), [("a", "a", 1.0)])

    def test_laplacian_rows_sum_to_zero(self, rng):
        net = network_from_dense(random_symmetric_weights(rng, 10, 0.4))
        assert np.allclose(net.laplacian() @ np.ones(10), 0, atol=1e-14)
