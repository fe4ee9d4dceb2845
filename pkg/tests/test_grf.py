import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import sparse

from conftest import network_from_dense
from oracles import dense_grf, random_symmetric_weights
from hierprop.bias import LabelBiasMatrix
from hierprop.errors import ConvergenceError, InvalidInputError
from hierprop.grf import (
    SolverSettings, cg_solve, grf_objective, solve_grf, solve_grf_matrix,
)
from hierprop.netbuild import SparseNetwork


def random_spd(rng, n):
    M = rng.normal(size=(n, n))
    return M @ M.T + n * np.eye(n)


class TestCG:
    def test_identity_one_iteration(self):
        b = np.arange(1.0, 6.0)
        res = cg_solve(np.eye(5), b)
        assert np.allclose(res.x, b) and res.iterations == 1

    def test_diagonal(self):
        res = cg_solve(sparse.diags(np.arange(1.0, 6.0)).tocsr(), np.ones(5))
        assert np.allclose(res.x, 1 / np.arange(1.0, 6.0), rtol=1e-10)

    def test_random_spd(self, rng):
        A = random_spd(rng, 100)
        b = rng.normal(size=100)
        res = cg_solve(lambda v: A @ v, b)
        ref = np.linalg.solve(A, b)
        assert np.max(np.abs(res.x - ref)) <= 1e-8 * max(1.0, np.max(np.abs(ref)))
        assert np.linalg.norm(A @ res.x - b) / np.linalg.norm(b) <= 1e-8
        assert res.residual <= 1e-8

    def test_jacobi_same_answer(self, rng):
        A = sparse.csr_matrix(random_spd(rng, 30) * np.linspace(1, 50, 30))
        A = (A + A.T) * 0.5
        b = rng.normal(size=30)
        plain = cg_solve(A, b).x
        pre = cg_solve(A, b, SolverSettings(jacobi=True)).x
        assert np.allclose(plain, pre, atol=1e-7)

    def test_zero_rhs(self):
        res = cg_solve(np.eye(3), np.zeros(3))
        assert not res.x.any() and res.iterations == 0

    def test_nonconvergence_reports_residual(self, rng):
        A = random_spd(rng, 40)
        with pytest.raises(ConvergenceError) as exc:
            cg_solve(A, rng.normal(size=40), SolverSettings(tolerance=1e-14, max_iterations=2))
        assert exc.value.residual > 0 and exc.value.iterations == 2

    def test_warm_start(self, rng):
        A = random_spd(rng, 20)
        b = rng.normal(size=20)
        x = np.linalg.solve(A, b)
        assert cg_solve(A, b, x0=x + 1e-12).iterations <= 1

    def test_settings_validation(self):
        with pytest.raises(InvalidInputError):
            SolverSettings(tolerance=0)
        with pytest.raises(InvalidInputError):
            SolverSettings(max_iterations=0)
        with pytest.raises(InvalidInputError):
            SolverSettings(sigma=np.array([1.0, -1.0]))


class TestGRF:
    def test_empty_network(self):
        net = SparseNetwork.from_edges(("a", "b", "c"), [])
        y = np.array([1.0, -1.0, 0.3])
        assert np.array_equal(solve_grf(net, y).scores, y)

    def test_two_genes(self):
        # (I + L) = [[2, -1], [-1, 2]]; solving against (1, 0) by hand gives (2/3, 1/3)
        net = SparseNetwork.from_edges(("a", "b"), [("a", "b", 1.0)])
        f = solve_grf(net, [1.0, 0.0]).scores
        assert np.allclose(f, [2 / 3, 1 / 3], atol=1e-12)

    def test_dense_oracle_200(self, rng):
        W = random_symmetric_weights(rng, 200, density=0.03)
        y = rng.uniform(-1, 1, 200)
        f = solve_grf(network_from_dense(W), y).scores
        ref = dense_grf(W, y)
        assert np.linalg.norm(f - ref) / np.linalg.norm(ref) <= 1e-6

    def test_sigma_right_hand_side(self, rng):
        W = random_symmetric_weights(rng, 30, density=0.2)
        sigma = rng.uniform(0.5, 2.0, 30)
        y = rng.uniform(-1, 1, 30)
        f = solve_grf(network_from_dense(W), y, SolverSettings(sigma=sigma)).scores
        assert np.allclose(f, dense_grf(W, y, sigma), atol=1e-7)

    def test_dimension_mismatch(self):
        net = SparseNetwork.from_edges(("a", "b"), [("a", "b", 1.0)])
        with pytest.raises(InvalidInputError):
            solve_grf(net, [1.0])
        with pytest.raises(InvalidInputError):
            solve_grf(net, [1.0, np.nan])

    def test_convergence_error(self, rng):
        net = network_from_dense(random_symmetric_weights(rng, 50, 0.2))
        with pytest.raises(ConvergenceError):
            solve_grf(net, rng.normal(size=50), SolverSettings(tolerance=1e-14, max_iterations=1))

    def test_matrix_columns(self, rng):
        net = network_from_dense(random_symmetric_weights(rng, 25, 0.2))
        Y = LabelBiasMatrix(net.gene_ids, ("c1", "c2", "c3"), rng.uniform(-1, 1, (25, 3)))
        F = solve_grf_matrix(net, Y, workers=2)
        for j in range(3):
            assert np.array_equal(F.scores[:, j], solve_grf(net, Y.values[:, j]).scores)


def _instance(seed, n=25):
    rng = np.random.default_rng(seed)
    W = random_symmetric_weights(rng, n, density=0.2)
    return rng, W, network_from_dense(W)


@given(st.integers(0, 10_000))
def test_maximum_principle(seed):
    rng, _, net = _instance(seed)
    y = rng.uniform(-1, 1, net.n_genes)
    f = solve_grf(net, y).scores
    assert f.min() >= y.min() - 1e-9 and f.max() <= y.max() + 1e-9


@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, alpha, beta):
    rng, _, net = _instance(seed)
    y1, y2 = rng.normal(size=(2, net.n_genes))
    lhs = solve_grf(net, alpha * y1 + beta * y2).scores
    rhs = alpha * solve_grf(net, y1).scores + beta * solve_grf(net, y2).scores
    assert np.allclose(lhs, rhs, atol=1e-7 * (1 + abs(alpha) + abs(beta)))


@given(st.integers(0, 10_000))
def test_permutation_equivariance(seed):
    rng, W, net = _instance(seed)
    y = rng.normal(size=net.n_genes)
    perm = rng.permutation(net.n_genes)
    f = solve_grf(net, y).scores
    fp = solve_grf(network_from_dense(W[np.ix_(perm, perm)]), y[perm]).scores
    assert np.allclose(fp, f[perm], atol=1e-7)


@given(st.integers(0, 10_000))
def test_objective_not_worse_than_start(seed):
    rng, _, net = _instance(seed)
    y = rng.uniform(-1, 1, net.n_genes)
    f = solve_grf(net, y).scores
    assert grf_objective(net, y, f) <= grf_objective(net, y, y) + 1e-12
