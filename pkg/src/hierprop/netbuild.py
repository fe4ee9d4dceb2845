"""
Similarity network construction.

Networks are symmetric, nonnegative, zero-diagonal sparse matrices indexed by
an ordered list of gene identifiers. Feature matrices are turned into networks
by pairwise Pearson correlation followed by a per-gene top-k filter; networks
are normalized as ``D^{-1/2} W D^{-1/2}`` and combined by summation.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import InvalidInputError

__all__ = [
    "FeatureMatrix",
    "SparseNetwork",
    "pearson_correlation",
    "top_k_filter",
    "pearson_network",
    "normalize",
    "combine",
    "align_genes",
]


@dataclass(frozen=True)
class FeatureMatrix:
    """Gene-by-feature matrix; ``NaN`` marks a missing value."""

    gene_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        gene_ids = tuple(self.gene_ids)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidInputError("feature values must be a 2-d array")
        if len(set(gene_ids)) != len(gene_ids):
            raise InvalidInputError("gene_ids must be unique")
        if values.shape[0] != len(gene_ids):
            raise InvalidInputError(
                f"{values.shape[0]} feature rows for {len(gene_ids)} gene ids"
            )
        if values.shape[1] and np.isnan(values).all(axis=1).any():
            bad = gene_ids[int(np.flatnonzero(np.isnan(values).all(axis=1))[0])]
            raise InvalidInputError(f"gene {bad!r} has no observed features")
        values.setflags(write=False)
        object.__setattr__(self, "gene_ids", gene_ids)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class SparseNetwork:
    """Undirected weighted gene network.

    ``matrix`` is a symmetric CSR matrix with nonnegative entries and an
    empty diagonal; each undirected edge is stored in both triangles.
    """

    gene_ids: tuple
    matrix: sparse.csr_matrix
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gene_ids = tuple(self.gene_ids)
        if len(set(gene_ids)) != len(gene_ids):
            raise InvalidInputError("gene_ids must be unique")
        W = sparse.csr_matrix(self.matrix, dtype=np.float64)
        n = len(gene_ids)
        if W.shape != (n, n):
            raise InvalidInputError(f"matrix shape {W.shape} does not match {n} genes")
        W.eliminate_zeros()
        W.sort_indices()
        if W.nnz:
            if W.data.min() < 0 or not np.isfinite(W.data).all():
                raise InvalidInputError("edge weights must be finite and nonnegative")
            if W.diagonal().any():
                raise InvalidInputError("self-loops are not allowed")
            if (W != W.T).nnz:
                raise InvalidInputError("network matrix must be symmetric")
        object.__setattr__(self, "gene_ids", gene_ids)
        object.__setattr__(self, "matrix", W)
        object.__setattr__(self, "_index", {g: i for i, g in enumerate(gene_ids)})

    @classmethod
    def from_edges(cls, gene_ids, edges):
        """Build from ``(gene_a, gene_b, weight)`` triples, one per undirected edge."""
        gene_ids = tuple(gene_ids)
        index = {g: i for i, g in enumerate(gene_ids)}
        rows, cols, vals = [], [], []
        seen = set()
        for a, b, w in edges:
            if a not in index or b not in index:
                missing = a if a not in index else b
                raise InvalidInputError(f"edge references unknown gene {missing!r}")
            i, j = index[a], index[b]
            if i == j:
                raise InvalidInputError(f"self-loop on gene {a!r}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InvalidInputError(f"duplicate edge {a!r}-{b!r}")
            seen.add(key)
            rows += [i, j]
            cols += [j, i]
            vals += [float(w), float(w)]
        n = len(gene_ids)
        W = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=np.float64)
        return cls(gene_ids, W)

    @property
    def n_genes(self):
        return len(self.gene_ids)

    def index_of(self, gene):
        try:
            return self._index[gene]
        except KeyError:
            raise InvalidInputError(f"unknown gene {gene!r}") from None

    def edges(self):
        """Yield ``(gene_a, gene_b, weight)`` once per undirected edge, ``a`` before ``b``."""
        upper = sparse.triu(self.matrix, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        for i, j, w in zip(upper.row[order], upper.col[order], upper.data[order]):
            yield self.gene_ids[i], self.gene_ids[j], float(w)

    def degrees(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def laplacian(self):
        """Return ``L = D - W`` as a CSR matrix."""
        return (sparse.diags(self.degrees()) - self.matrix).tocsr()


def pearson_correlation(values, chunk_rows=None):
    """Pairwise Pearson correlation between the rows of ``values``.

    Missing entries (``NaN``) are handled pairwise-complete: each pair uses only
    the columns observed in both rows. A pair with fewer than 3 shared columns,
    or whose rows are constant on the shared support, gets ``r = 0``. The
    diagonal is set to 0.

    Parameters
    ----------
    values : ndarray, shape (n, p)
    chunk_rows : int, optional
        If given, yields ``(row_slice, block)`` pairs of at most this many rows
        instead of returning the full matrix.
    """
    X = np.asarray(values, dtype=np.float64)
    n = X.shape[0]
    if chunk_rows is None:
        out = np.empty((n, n))
        for rows, block in _pearson_blocks(X, n or 1):
            out[rows] = block
        return out
    return _pearson_blocks(X, chunk_rows)


def _pearson_blocks(X, chunk_rows):
    n, p = X.shape
    mask = ~np.isnan(X)
    if mask.all():
        centered = X - X.mean(axis=1, keepdims=True)
        norms = np.sqrt(np.einsum("ij,ij->i", centered, centered))
        constant = np.ptp(X, axis=1) == 0
        safe = np.where(constant, 1.0, norms)
        Z = centered / safe[:, None]
        Z[constant] = 0.0
        for start in range(0, n, chunk_rows):
            rows = slice(start, min(n, start + chunk_rows))
            block = np.clip(Z[rows] @ Z.T, -1.0, 1.0)
            if p < 3:
                block[:] = 0.0
            block[np.arange(block.shape[0]), np.arange(rows.start, rows.stop)] = 0.0
            yield rows, block
        return

    M = mask.astype(np.float64)
    X0 = np.where(mask, X, 0.0)
    X2 = X0 * X0
    for start in range(0, n, chunk_rows):
        rows = slice(start, min(n, start + chunk_rows))
        N = M[rows] @ M.T
        sx = X0[rows] @ M.T  # sum of row-i values over shared columns
        sy = M[rows] @ X0.T  # sum of row-j values over shared columns
        sxx = X2[rows] @ M.T
        syy = M[rows] @ X2.T
        sxy = X0[rows] @ X0.T
        vx = N * sxx - sx * sx
        vy = N * syy - sy * sy
        cov = N * sxy - sx * sy
        eps = 1e-12
        ok = (N >= 3) & (vx > eps * N * sxx) & (vy > eps * N * syy)
        with np.errstate(invalid="ignore", divide="ignore"):
            block = np.where(ok, cov / np.sqrt(np.where(ok, vx * vy, 1.0)), 0.0)
        block = np.clip(block, -1.0, 1.0)
        block[np.arange(block.shape[0]), np.arange(rows.start, rows.stop)] = 0.0
        yield rows, block


def _row_keep_mask(block, self_cols, k):
    """Entries of each row that are positive and tied-or-above the row's k-th value."""
    work = block.copy()
    work[np.arange(work.shape[0]), self_cols] = -np.inf
    n = work.shape[1]
    if k >= n - 1:
        return (work > 0) & np.isfinite(work)
    kth = -np.partition(-work, k - 1, axis=1)[:, k - 1]
    return (work >= kth[:, None]) & (work > 0)


def top_k_filter(r, k):
    """Sparsify a dense correlation matrix with the either-endpoint top-k rule.

    Edge ``(i, j)`` survives iff ``r_ij > 0`` and ``r_ij`` ranks within the top
    ``k`` of row ``i`` or of row ``j``. Ties at the k-th value are all kept.
    Returns a symmetric CSR matrix of retained correlations.
    """
    r = np.asarray(r, dtype=np.float64)
    n = r.shape[0]
    keep = _row_keep_mask(r, np.arange(n), k)
    keep = keep | keep.T
    i, j = np.nonzero(keep)
    return sparse.csr_matrix((r[i, j], (i, j)), shape=(n, n))


def pearson_network(features, k=50, chunk_rows=2048):
    """Build a sparse positive-correlation network from a feature matrix.

    Parameters
    ----------
    features : FeatureMatrix
    k : int
        Number of highest correlations kept per gene (either endpoint suffices).
    chunk_rows : int
        Rows of the correlation matrix held in memory at once.

    Returns
    -------
    SparseNetwork
        Weights are the raw correlations ``r_ij > 0``; not normalized.
    """
    n, p = features.values.shape
    if n < 2:
        raise InvalidInputError("need at least 2 genes to build a network")
    if p < 2:
        raise InvalidInputError("need at least 2 feature columns to build a network")
    if int(k) != k or k < 1:
        raise InvalidInputError(f"k must be a positive integer, got {k!r}")
    k = int(k)

    rows_out, cols_out, vals_out = [], [], []
    for rows, block in pearson_correlation(features.values, chunk_rows=chunk_rows):
        keep = _row_keep_mask(block, np.arange(rows.start, rows.stop), k)
        i, j = np.nonzero(keep)
        rows_out.append(i + rows.start)
        cols_out.append(j)
        vals_out.append(block[i, j])
    i = np.concatenate(rows_out)
    j = np.concatenate(cols_out)
    v = np.concatenate(vals_out)
    # union with the transpose: r is symmetric so either direction carries r_ij
    W = sparse.csr_matrix((v, (i, j)), shape=(n, n))
    W = W.maximum(W.T).tocsr()
    return SparseNetwork(features.gene_ids, W)


def normalize(net):
    """Symmetric degree normalization ``D^{-1/2} W D^{-1/2}``.

    Genes with zero degree stay isolated.
    """
    deg = net.degrees()
    inv = np.zeros_like(deg)
    nz = deg > 0
    inv[nz] = 1.0 / np.sqrt(deg[nz])
    W = net.matrix.tocoo()
    data = W.data * inv[W.row] * inv[W.col]
    Wn = sparse.csr_matrix((data, (W.row, W.col)), shape=W.shape)
    # enforce exact symmetry against rounding in the two scale factors
    Wn = (Wn + Wn.T) * 0.5
    return SparseNetwork(net.gene_ids, Wn)


def combine(nets):
    """Sum networks over a shared gene list, then normalize the sum.

    Inputs are summed as given; to follow the usual normalize-each, sum,
    renormalize recipe pass already-normalized networks.
    """
    nets = list(nets)
    if not nets:
        raise InvalidInputError("combine needs at least one network")
    genes = nets[0].gene_ids
    for other in nets[1:]:
        if other.gene_ids != genes:
            raise InvalidInputError("networks are indexed against different gene lists")
    total = nets[0].matrix.copy()
    for other in nets[1:]:
        total = total + other.matrix
    return normalize(SparseNetwork(genes, total))


def align_genes(net, universe):
    """Re-index ``net`` onto ``universe``; genes absent from ``net`` become isolated."""
    universe = tuple(universe)
    index = {g: i for i, g in enumerate(universe)}
    if len(index) != len(universe):
        raise InvalidInputError("universe contains duplicate genes")
    missing = [g for g in net.gene_ids if g not in index]
    if missing:
        raise InvalidInputError(f"gene {missing[0]!r} is not in the universe")
    perm = np.array([index[g] for g in net.gene_ids], dtype=np.int64)
    W = net.matrix.tocoo()
    m = len(universe)
    Wa = sparse.csr_matrix((W.data, (perm[W.row], perm[W.col])), shape=(m, m))
    return SparseNetwork(universe, Wa)
