"""
Label bias construction.

Two schemes are provided. The baseline labels positives +1, negatives -1 and
all other genes with the mean label ``k = (n+ - n-) / (n+ + n-)``. The
hierarchical scheme (HLBias) keeps positives at +1, marks genes annotated to a
sibling category -1, and gives genes annotated to ancestors the mean of
``2 * n+_ac / n+_a - 1`` over those ancestors.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "LabelBiasMatrix",
    "mean_label",
    "baseline_bias",
    "baseline_negatives",
    "hlbias_vector",
    "bias_matrix",
]


@dataclass(frozen=True)
class LabelBiasMatrix:
    """n x d bias values, genes on rows and categories on columns."""

    gene_ids: tuple
    category_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.gene_ids), len(self.category_ids)):
            raise InvalidInputError("bias values shape does not match gene/category ids")
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        object.__setattr__(self, "category_ids", tuple(self.category_ids))
        object.__setattr__(self, "values", values)

    def column(self, c):
        return self.values[:, self.category_ids.index(c)]


def mean_label(n_pos, n_neg):
    """``(n+ - n-) / (n+ + n-)``, or 0 when nothing is labeled."""
    total = n_pos + n_neg
    return 0.0 if total == 0 else (n_pos - n_neg) / total


def baseline_bias(positives, negatives, universe):
    """Three-valued bias: +1, -1, and ``k`` for every other gene in ``universe``."""
    positives, negatives = set(positives), set(negatives)
    if positives & negatives:
        raise InvalidInputError("positive and negative gene sets overlap")
    index = {g: i for i, g in enumerate(universe)}
    if not all(g in index for g in positives | negatives):
        raise InvalidInputError("labeled genes missing from the universe")
    return _baseline_column(positives, negatives, index, len(index))


def _baseline_column(positives, negatives, index, n):
    y = np.full(n, mean_label(len(positives), len(negatives)), dtype=np.float64)
    y[_indices(positives, index)] = 1.0
    y[_indices(negatives, index)] = -1.0
    return y


def baseline_negatives(c, ann, h, universe=None):
    """Genes with at least one annotation in ``h`` that are not positive for ``c``."""
    cats = set(h.category_ids)
    annotated = {g for g, cc in ann.pairs if cc in cats}
    if universe is not None:
        annotated &= set(universe)
    return annotated - ann.genes_in(c)


def hlbias_vector(c, ann, h, universe, unlabeled_default, negative_default=None):
    """HLBias label biases for category ``c``.

    Parameters
    ----------
    c : category id
    ann : AnnotationSet
        Closed training annotations; held-out genes must already be removed.
    h : Hierarchy
    universe : sequence of gene ids
    unlabeled_default : float
        Bias for genes no rule applies to.
    negative_default : float, optional
        Overrides ``unlabeled_default`` for genes that do carry training
        annotations in ``h``, just none relevant to ``c``.

    Returns
    -------
    ndarray, shape (n,)

    Notes
    -----
    Rules are applied in order and the first match wins: positive for ``c``;
    annotated to a sibling of ``c``; annotated to an ancestor of ``c`` (mean
    over ancestors with at least one positive); otherwise the default.
    """
    if c not in h:
        raise InvalidInputError(f"unknown category {c!r}")
    universe = tuple(universe)
    index = {g: i for i, g in enumerate(universe)}
    annotated = _annotated_genes(ann, h, index) if negative_default is not None else ()
    return _hlbias_column(c, ann, h, index, len(universe), unlabeled_default,
                          annotated, negative_default)


def _annotated_genes(ann, h, genes):
    cats = set(h.category_ids)
    return {g for g in ann.genes() if g in genes and ann.categories_of(g) & cats}


def _indices(genes, index):
    return np.fromiter((index[g] for g in genes if g in index), dtype=np.int64)


def _hlbias_column(c, ann, h, index, n, default, annotated=(), negative_default=None):
    pos_c = ann.genes_in(c)
    sums = np.zeros(n)
    counts = np.zeros(n)
    # category order keeps the floating-point summation order deterministic
    for a in sorted(h.ancestors(c), key=h.index_of):
        pos_a = ann.genes_in(a)
        if pos_a:
            idx = _indices(pos_a, index)
            sums[idx] += 2.0 * len(pos_a & pos_c) / len(pos_a) - 1.0
            counts[idx] += 1
    y = np.full(n, float(default))
    if negative_default is not None:
        y[_indices(annotated, index)] = float(negative_default)
    has = counts > 0
    y[has] = sums[has] / counts[has]
    for s in h.siblings(c):
        y[_indices(ann.genes_in(s), index)] = -1.0
    y[_indices(pos_c, index)] = 1.0
    return y


def bias_matrix(method, ann, h, universe, negatives="annotated", unlabeled="k",
                negative_default=None):
    """Stack per-category bias vectors for every category of ``h``.

    Parameters
    ----------
    method : {"baseline", "hlbias"}
    ann : AnnotationSet
        Closed training annotations.
    h : Hierarchy
    universe : sequence of gene ids
    negatives : {"annotated", "none"}
        Negative set for the baseline (and for ``k``): genes annotated elsewhere
        in the hierarchy, or nobody.
    unlabeled : "k" or float
        HLBias default for genes no rule covers. ``"k"`` uses the category's
        baseline mean label.
    negative_default : float, optional
        HLBias value for annotated genes no rule covers; see
        :func:`hlbias_vector`.
    """
    if method not in ("baseline", "hlbias"):
        raise InvalidInputError(f"unknown bias method {method!r}")
    if negatives not in ("annotated", "none"):
        raise InvalidInputError(f"unknown negative policy {negatives!r}")
    universe = tuple(universe)
    genes = set(universe)
    index = {g: i for i, g in enumerate(universe)}
    annotated = _annotated_genes(ann, h, genes)
    Y = np.empty((len(universe), len(h)))
    for j, c in enumerate(h.category_ids):
        pos = ann.genes_in(c) & genes
        neg = annotated - pos if negatives == "annotated" else set()
        if method == "baseline":
            Y[:, j] = _baseline_column(pos, neg, index, len(universe))
        else:
            default = mean_label(len(pos), len(neg)) if unlabeled == "k" else float(unlabeled)
            Y[:, j] = _hlbias_column(c, ann, h, index, len(universe), default,
                                     annotated, negative_default)
    return LabelBiasMatrix(universe, h.category_ids, Y)
