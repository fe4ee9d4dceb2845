"""
Joint label propagation over all categories with hierarchy coupling.

The scores ``F`` (n x d) minimize

    sum_c (f_c - y_c)^T S (f_c - y_c) + f_c^T L f_c
        + lam * sum_{(m, c) in H} ||f_m - f_c||^2

whose stationarity condition is ``(S + L) F + lam F G = S Y`` with ``G`` the
Laplacian of the undirected hierarchy. Equivalently
``A vec(F) = vec(S Y)`` with ``A = I_d (x) (S + L) + lam G (x) I_n``.

:func:`solve_hlprop` never forms ``A``: it does block Gauss-Seidel sweeps,
each block being an n x n sparse GRF-type system

    (S + L + lam v_m I) f_m = S y_m + lam sum_{c ~ m} f_c

solved by warm-started conjugate gradients.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse

from .errors import ConvergenceError, InvalidInputError, SizeError
from .grf import DiscriminantMatrix, SolverSettings, cg_solve, grf_system
from .ontology import hierarchy_laplacian

__all__ = [
    "DiscriminantMatrix",
    "HLPropSettings",
    "hlprop_objective",
    "solve_hlprop",
    "assemble_kron",
    "solve_dense_oracle",
    "MAX_DENSE_SIZE",
]

MAX_DENSE_SIZE = 5000


@dataclass(frozen=True)
class HLPropSettings:
    lam: float = 1.0
    sweep_tolerance: float = 1e-6
    max_sweeps: int = 100
    inner: SolverSettings = field(default_factory=SolverSettings)
    scheme: str = "gauss-seidel"
    track_objective: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidInputError("lambda must be nonnegative")
        if not self.sweep_tolerance > 0:
            raise InvalidInputError("sweep_tolerance must be positive")
        if self.max_sweeps < 1:
            raise InvalidInputError("max_sweeps must be at least 1")
        if self.scheme not in ("gauss-seidel", "jacobi"):
            raise InvalidInputError(f"unknown sweep scheme {self.scheme!r}")


def _check_inputs(net, Y, h):
    if tuple(Y.gene_ids) != net.gene_ids:
        raise InvalidInputError("bias matrix genes do not match the network")
    if tuple(Y.category_ids) != h.category_ids:
        raise InvalidInputError("bias matrix categories do not match the hierarchy")
    values = np.asarray(Y.values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise InvalidInputError("bias matrix must be finite")
    return values


def _neighbours(h):
    nbr = [[] for _ in h.category_ids]
    for m, c in h.edges:
        i, j = h.index_of(m), h.index_of(c)
        nbr[i].append(j)
        nbr[j].append(i)
    return [sorted(x) for x in nbr]


def hlprop_objective(net, Y, h, F, lam=1.0, sigma=None):
    """Value of the joint objective at ``F`` (includes the constant ``Y^T S Y``)."""
    Yv = np.asarray(getattr(Y, "values", Y), dtype=np.float64)
    F = np.asarray(getattr(F, "scores", F), dtype=np.float64)
    sigma = np.ones(F.shape[0]) if sigma is None else np.asarray(sigma)
    diff = F - Yv
    fit = float(np.sum(sigma[:, None] * diff * diff))
    smooth = float(np.sum(F * (net.laplacian() @ F)))
    coupling = 0.0
    for m, c in h.edges:
        d = F[:, h.index_of(m)] - F[:, h.index_of(c)]
        coupling += float(d @ d)
    return fit + smooth + lam * coupling


def solve_hlprop(net, Y, h, settings=HLPropSettings(), order=None, callback=None):
    """Solve the hierarchy-coupled problem by block sweeps.

    Parameters
    ----------
    net : SparseNetwork
    Y : LabelBiasMatrix
        Columns in ``h.category_ids`` order.
    h : Hierarchy
    settings : HLPropSettings
    order : sequence of category ids, optional
        Block visiting order within each sweep; defaults to category order.
    callback : callable, optional
        Called as ``callback(sweep, F, max_change)`` after every sweep of every
        hierarchy component. ``F`` is the full working matrix; do not modify it.

    Returns
    -------
    DiscriminantMatrix
        ``info`` holds ``sweeps`` (max over components), per-sweep
        ``max_changes`` per component, and ``objectives`` when
        ``settings.track_objective`` is set.

    Raises
    ------
    ConvergenceError
        When a component is still changing by more than ``sweep_tolerance``
        after ``max_sweeps`` sweeps.
    """
    Yv = _check_inputs(net, Y, h)
    n, d = Yv.shape
    inner = settings.inner
    sigma = inner.sigma_for(n)
    lam = float(settings.lam)
    rhs_base = sigma[:, None] * Yv
    nbr = _neighbours(h) if lam > 0 else [[] for _ in range(d)]

    rank = {h.index_of(c): r for r, c in enumerate(order)} if order is not None else None
    if rank is not None and sorted(rank) != list(range(d)):
        raise InvalidInputError("order must be a permutation of the hierarchy categories")

    systems = {}

    def system(v):
        if v not in systems:
            systems[v] = grf_system(net, sigma, shift=lam * v)
        return systems[v]

    F = Yv.copy()
    info = {"sweeps": 0, "max_changes": [], "objectives": []}
    comps = h.components() if lam > 0 else [(c,) for c in h.category_ids]
    for comp in comps:
        idx = [h.index_of(c) for c in comp]
        if rank is not None:
            idx.sort(key=rank.__getitem__)
        if len(idx) == 1:
            j = idx[0]
            F[:, j] = cg_solve(system(0), rhs_base[:, j], inner).x
            info["sweeps"] = max(info["sweeps"], 1)
            continue

        changes, objectives = [], []
        if settings.track_objective:
            objectives.append(_component_objective(net, Yv, F, idx, nbr, lam, sigma))
        converged = False
        for sweep in range(1, settings.max_sweeps + 1):
            source = F.copy() if settings.scheme == "jacobi" else F
            max_change = 0.0
            for j in idx:
                rhs = rhs_base[:, j].copy()
                for c in nbr[j]:
                    rhs += lam * source[:, c]
                new = cg_solve(system(len(nbr[j])), rhs, inner, x0=F[:, j]).x
                max_change = max(max_change, float(np.max(np.abs(new - F[:, j]))) if n else 0.0)
                F[:, j] = new
            changes.append(max_change)
            if settings.track_objective:
                objectives.append(_component_objective(net, Yv, F, idx, nbr, lam, sigma))
            if callback is not None:
                callback(sweep, F, max_change)
            if max_change <= settings.sweep_tolerance:
                converged = True
                break
        info["sweeps"] = max(info["sweeps"], len(changes))
        info["max_changes"].append(changes)
        info["objectives"].append(objectives)
        if not converged:
            raise ConvergenceError("hierarchical propagation sweeps did not converge",
                                   changes[-1], len(changes))
    return DiscriminantMatrix(net.gene_ids, h.category_ids, F, info=info)


def _component_objective(net, Yv, F, idx, nbr, lam, sigma):
    L = net.laplacian()
    members = set(idx)
    total = 0.0
    for j in idx:
        diff = F[:, j] - Yv[:, j]
        total += float(diff @ (sigma * diff) + F[:, j] @ L.dot(F[:, j]))
        for c in nbr[j]:
            if c in members and c > j:
                e = F[:, j] - F[:, c]
                total += lam * float(e @ e)
    return total


def assemble_kron(net, h, lam=1.0, sigma=None, max_size=MAX_DENSE_SIZE):
    """Dense ``A = I_d (x) (S + L) + lam G (x) I_n``.

    Raises
    ------
    SizeError
        If ``n * d`` exceeds ``max_size``.
    """
    n, d = net.n_genes, len(h)
    if n * d > max_size:
        raise SizeError(f"dense system of size {n * d} exceeds guard {max_size}")
    sigma = np.ones(n) if sigma is None else np.asarray(sigma, dtype=np.float64)
    base = (sparse.diags(sigma) + net.laplacian()).toarray()
    G = hierarchy_laplacian(h)
    return np.kron(np.eye(d), base) + lam * np.kron(G, np.eye(n))


def solve_dense_oracle(A, vec_y):
    """Direct solve of ``A x = vec_y`` (Cholesky, since ``A`` is SPD)."""
    A = np.asarray(A, dtype=np.float64)
    vec_y = np.asarray(vec_y, dtype=np.float64)
    try:
        return linalg.cho_solve(linalg.cho_factor(A), vec_y)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"oracle system is not positive definite: {exc}") from None
