"""
Gaussian random field label propagation for a single category.

The discriminant scores minimize

    (f - y)^T S (f - y) + f^T L f

with ``S = diag(sigma)`` and ``L`` the network Laplacian, so
``f = (S + L)^{-1} S y``. The sparse SPD system is solved by conjugate
gradients.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse

from ._parallel import parallel_map
from .errors import ConvergenceError, InvalidInputError

__all__ = [
    "SolverSettings",
    "CGResult",
    "DiscriminantVector",
    "DiscriminantMatrix",
    "cg_solve",
    "grf_system",
    "grf_objective",
    "solve_grf",
    "solve_grf_matrix",
]


@dataclass(frozen=True)
class SolverSettings:
    """Conjugate-gradient controls.

    ``max_iterations=None`` means ten times the system size. ``sigma=None``
    means unit precision for every gene.
    """

    tolerance: float = 1e-8
    max_iterations: int = None
    sigma: np.ndarray = None
    jacobi: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidInputError("tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be at least 1")
        if self.sigma is not None:
            sigma = np.asarray(self.sigma, dtype=np.float64)
            if not (sigma > 0).all():
                raise InvalidInputError("sigma must be strictly positive")
            object.__setattr__(self, "sigma", sigma)

    def sigma_for(self, n):
        if self.sigma is None:
            return np.ones(n)
        if self.sigma.shape != (n,):
            raise InvalidInputError(f"sigma has shape {self.sigma.shape}, expected ({n},)")
        return self.sigma

    def iteration_cap(self, n):
        return self.max_iterations if self.max_iterations is not None else 10 * max(n, 1)


class CGResult(NamedTuple):
    x: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True)
class DiscriminantVector:
    gene_ids: tuple
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.shape != (len(self.gene_ids),):
            raise InvalidInputError("score length does not match gene count")
        if not np.isfinite(scores).all():
            raise InvalidInputError("scores must be finite")
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        object.__setattr__(self, "scores", scores)


@dataclass(frozen=True)
class DiscriminantMatrix:
    """n x d discriminant scores with optional solver metadata in ``info``."""

    gene_ids: tuple
    category_ids: tuple
    scores: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.shape != (len(self.gene_ids), len(self.category_ids)):
            raise InvalidInputError("scores shape does not match gene/category ids")
        if not np.isfinite(scores).all():
            raise InvalidInputError("scores must be finite")
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        object.__setattr__(self, "category_ids", tuple(self.category_ids))
        object.__setattr__(self, "scores", scores)

    def column(self, c):
        return self.scores[:, self.category_ids.index(c)]


def cg_solve(apply_A, b, settings=SolverSettings(), x0=None, diagonal=None):
    """Conjugate gradients for a symmetric positive definite operator.

    Parameters
    ----------
    apply_A : callable or sparse matrix
        Matrix-vector product ``v -> A v``.
    b : ndarray
        Right-hand side.
    settings : SolverSettings
        ``tolerance`` bounds ``||b - A x|| / ||b||``.
    x0 : ndarray, optional
        Starting iterate; zero by default.
    diagonal : ndarray, optional
        Diagonal of ``A``; enables the Jacobi preconditioner when
        ``settings.jacobi`` is set.

    Returns
    -------
    CGResult
        Solution, iteration count and final relative residual.

    Raises
    ------
    ConvergenceError
        If the tolerance is not met within the iteration cap.
    """
    if not callable(apply_A):
        A = apply_A
        apply_A = A.dot
        if diagonal is None and sparse.issparse(A):
            diagonal = A.diagonal()
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(np.zeros(n), 0, 0.0)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply_A(x) if x0 is not None else b.copy()
    precond = settings.jacobi and diagonal is not None
    inv_diag = 1.0 / np.asarray(diagonal) if precond else None
    z = r * inv_diag if precond else r
    p = z.copy()
    rz = r @ z
    tol = settings.tolerance * bnorm
    cap = settings.iteration_cap(n)

    it = 0
    rnorm = np.linalg.norm(r)
    while rnorm > tol:
        if it >= cap:
            raise ConvergenceError("conjugate gradient did not converge", rnorm / bnorm, it)
        Ap = apply_A(p)
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        it += 1
        rnorm = np.linalg.norm(r)
        if rnorm <= tol:
            # guard against drift between recursive and true residual
            r = b - apply_A(x)
            rnorm = np.linalg.norm(r)
            if rnorm <= tol:
                break
            z = r * inv_diag if precond else r
            rz = r @ z
            p = z.copy()
            continue
        z = r * inv_diag if precond else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return CGResult(x, it, rnorm / bnorm)


def grf_system(net, sigma, shift=0.0):
    """Sparse matrix ``diag(sigma) + L + shift * I`` for network ``net``."""
    n = net.n_genes
    diag = np.asarray(sigma, dtype=np.float64) + net.degrees() + shift
    return (sparse.diags(diag) - net.matrix).tocsr() if n else sparse.csr_matrix((0, 0))


def grf_objective(net, y, f, sigma=None):
    """``(f - y)^T S (f - y) + f^T L f``."""
    y = np.asarray(y, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    sigma = np.ones_like(y) if sigma is None else np.asarray(sigma)
    diff = f - y
    return float(diff @ (sigma * diff) + f @ net.laplacian().dot(f))


def _check_bias(net, y):
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (net.n_genes,):
        raise InvalidInputError(f"bias vector has shape {y.shape}, network has {net.n_genes} genes")
    if not np.isfinite(y).all():
        raise InvalidInputError("bias vector must be finite")
    return y


def solve_grf(net, y, settings=SolverSettings(), x0=None):
    """Solve the single-category GRF problem.

    Parameters
    ----------
    net : SparseNetwork
    y : array_like, shape (n,)
        Label biases, any finite values.
    settings : SolverSettings

    Returns
    -------
    DiscriminantVector
    """
    y = _check_bias(net, y)
    sigma = settings.sigma_for(net.n_genes)
    A = grf_system(net, sigma)
    res = cg_solve(A, sigma * y, settings, x0=x0)
    return DiscriminantVector(net.gene_ids, res.x)


def solve_grf_matrix(net, Y, settings=SolverSettings(), workers=None):
    """Solve every column of a :class:`LabelBiasMatrix` independently."""
    values = np.asarray(Y.values)
    if values.shape[0] != net.n_genes or tuple(Y.gene_ids) != net.gene_ids:
        raise InvalidInputError("bias matrix genes do not match the network")
    sigma = settings.sigma_for(net.n_genes)
    A = grf_system(net, sigma)

    def column(j):
        y = _check_bias(net, values[:, j])
        return cg_solve(A, sigma * y, settings).x

    cols = parallel_map(column, range(values.shape[1]), workers=workers)
    F = np.column_stack(cols) if cols else np.zeros((net.n_genes, 0))
    return DiscriminantMatrix(net.gene_ids, Y.category_ids, F)
