"""
Prediction scoring and evaluation protocols.

Errors are reported as ``1 - AUC`` of the ROC curve. Two protocols are
provided: k-fold cross-validation, where each held-out gene's annotations are
hidden from training, and the novel setting, where a model trained on an old
annotation snapshot is scored on the annotations added in a newer one.
"""
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidInputError, UndefinedMetricError

__all__ = [
    "EvalRecord",
    "EvalReport",
    "DEFAULT_BUCKETS",
    "auc_roc",
    "auprc",
    "score_category",
    "cross_validate",
    "novel_eval",
    "summarize",
    "parse_buckets",
]

DEFAULT_BUCKETS = ((3, 10), (11, 30), (31, 100), (101, 300))


@dataclass(frozen=True)
class EvalRecord:
    category_id: str
    n_pos: int
    auc_roc: float
    auprc: float
    n_neg: int = 0

    @property
    def error(self):
        return 1.0 - self.auc_roc

    def to_dict(self):
        out = asdict(self)
        out["error"] = self.error
        return out


@dataclass
class EvalReport:
    """Per-category records plus aggregate statistics.

    ``mean``, ``median`` and ``se`` are ``None`` when there are no records.
    """

    records: list
    mean: float = None
    median: float = None
    se: float = None
    buckets: list = field(default_factory=list)
    cumulative: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def to_dict(self):
        return {
            "records": [r.to_dict() for r in self.records],
            "mean": self.mean,
            "median": self.median,
            "se": self.se,
            "buckets": self.buckets,
            "cumulative": [{"percentile": p, "error": e} for p, e in self.cumulative],
            "skipped": list(self.skipped),
        }

    def errors(self):
        return np.array([r.error for r in self.records])


def _binary(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InvalidInputError("scores and labels must be 1-d arrays of equal length")
    return scores, labels


def auc_roc(scores, labels):
    """Probability that a random positive outscores a random negative; ties count 1/2."""
    scores, labels = _binary(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative")
    ranks = rankdata(scores, method="average")
    # rank-sum minus its minimum equals concordant pairs + half the tied pairs
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auprc(scores, labels):
    """Area under the precision-recall step curve, equal scores entering together."""
    scores, labels = _binary(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("AUPRC needs at least one positive")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    tp = np.cumsum(labels[order])
    # last position of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = tp[ends].astype(np.float64)
    seen = (ends + 1).astype(np.float64)
    precision = tp / seen
    recall_step = np.diff(np.r_[0.0, tp]) / n_pos
    return float(np.sum(precision * recall_step))


def score_category(category_id, scores, labels):
    scores, labels = _binary(scores, labels)
    return EvalRecord(
        category_id=category_id,
        n_pos=int(labels.sum()),
        n_neg=int((~labels).sum()),
        auc_roc=auc_roc(scores, labels),
        auprc=auprc(scores, labels),
    )


def _run(pipeline, net, ann_train, h, setting):
    if isinstance(pipeline, str):
        from .pipelines import run_method

        return run_method(pipeline, net, ann_train, h, setting=setting)
    return pipeline(net, ann_train, h, setting)


def fold_assignment(genes, folds, seed):
    """Seeded shuffle of ``genes`` split into ``folds`` nearly equal parts."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(genes))
    return [tuple(genes[i] for i in part) for part in np.array_split(perm, folds)]


def cross_validate(pipeline, net, ann, h, folds=3, seed=0, buckets=DEFAULT_BUCKETS,
                   fold_callback=None, ann_eval=None):
    """k-fold cross-validation over the genes of ``net``.

    Parameters
    ----------
    pipeline : str or callable
        Method name understood by :func:`hierprop.pipelines.run_method`, or a
        callable ``(net, ann_train, h, setting) -> DiscriminantMatrix``.
    net : SparseNetwork
    ann : AnnotationSet
        Closed annotations; the evaluation labels.
    h : Hierarchy
    folds : int
    seed : int
    buckets : sequence of (lo, hi)
    fold_callback : callable, optional
        ``fold_callback(fold, test_genes, ann_train, scores)`` after each fold.
    ann_eval : AnnotationSet, optional
        Closed labels used for scoring held-out genes instead of ``ann``, e.g.
        the complete annotation of a synthetic instance.

    Returns
    -------
    EvalReport
        One record per category with at least one positive and one negative
        among the pooled held-out scores; other categories are listed in
        ``skipped``.
    """
    if folds < 2:
        raise InvalidInputError("need at least 2 folds")
    if not ann.closed:
        raise InvalidInputError("cross_validate expects a closed annotation set")
    genes = net.gene_ids
    if folds > len(genes):
        raise InvalidInputError(f"{folds} folds for {len(genes)} genes")
    pooled = np.zeros((len(genes), len(h)))
    for k, test in enumerate(fold_assignment(genes, folds, seed)):
        ann_train = ann.without_genes(test)
        F = _run(pipeline, net, ann_train, h, "test")
        cols = [F.category_ids.index(c) for c in h.category_ids]
        rows = [net.index_of(g) for g in test]
        pooled[rows] = F.scores[np.ix_(rows, cols)]
        if fold_callback is not None:
            fold_callback(k, test, ann_train, F)

    truth = ann if ann_eval is None else ann_eval
    records, skipped = [], []
    gene_set = set(genes)
    for j, c in enumerate(h.category_ids):
        labels = np.zeros(len(genes), dtype=bool)
        labels[[net.index_of(g) for g in truth.genes_in(c) & gene_set]] = True
        if labels.all() or not labels.any():
            skipped.append(c)
            continue
        records.append(score_category(c, pooled[:, j], labels))
    return summarize(records, buckets, skipped=skipped, allow_empty=True)


def novel_partition(c, ann_old, ann_new, universe):
    """Positives and negatives for category ``c`` in the novel setting."""
    old = ann_old.genes_in(c)
    new = (ann_new.genes_in(c) - old) & set(universe)
    negatives = set(universe) - old - new
    return new, negatives


def novel_eval(pipeline, net, ann_old, ann_new, h, min_new=3, buckets=DEFAULT_BUCKETS):
    """Train on ``ann_old`` and score categories that gained ``>= min_new`` genes.

    Positives are the newly annotated genes; negatives are all other genes not
    annotated to the category in ``ann_old``.
    """
    if not (ann_old.closed and ann_new.closed):
        raise InvalidInputError("novel_eval expects closed annotation sets")
    universe = net.gene_ids
    targets = []
    for c in h.category_ids:
        pos, neg = novel_partition(c, ann_old, ann_new, universe)
        if len(pos) >= min_new and neg:
            targets.append((c, pos))
    if not targets:
        return EvalReport(records=[])
    F = _run(pipeline, net, ann_old, h, "novel")
    records = []
    for c, pos in targets:
        old = ann_old.genes_in(c)
        keep = np.array([g not in old for g in universe])
        labels = np.array([g in pos for g in universe])
        records.append(score_category(c, F.column(c)[keep], labels[keep]))
    return summarize(records, buckets, allow_empty=True)


def parse_buckets(text):
    """``"3-10,11-30"`` -> ``((3, 10), (11, 30))``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            lo, hi = part.split("-")
            out.append((int(lo), int(hi)))
        except ValueError:
            raise InvalidInputError(f"bad bucket {part!r}; expected LO-HI") from None
    return tuple(out)


def summarize(records, buckets=DEFAULT_BUCKETS, skipped=(), allow_empty=False):
    """Aggregate per-category errors into an :class:`EvalReport`.

    Bucket means are keyed by ``n_pos``; the cumulative distribution is a list
    of ``(percentile, error)`` pairs over the sorted errors.
    """
    records = list(records)
    if not records:
        if allow_empty:
            return EvalReport(records=[], skipped=list(skipped))
        raise InvalidInputError("cannot summarize an empty record list")
    err = np.array([r.error for r in records])
    n = err.size
    se = float(np.std(err, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    bucket_rows = []
    for lo, hi in buckets:
        sel = [r.error for r in records if lo <= r.n_pos <= hi]
        bucket_rows.append({
            "lo": lo,
            "hi": hi,
            "count": len(sel),
            "mean": float(np.mean(sel)) if sel else None,
        })
    srt = np.sort(err)
    cumulative = [(100.0 * (i + 1) / n, float(e)) for i, e in enumerate(srt)]
    return EvalReport(
        records=records,
        mean=float(np.mean(err)),
        median=float(np.median(err)),
        se=se,
        buckets=bucket_rows,
        cumulative=cumulative,
        skipped=list(skipped),
    )
