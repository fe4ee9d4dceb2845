"""
Tab-separated file formats.

=================  ==========================================================
feature matrix     header ``gene<TAB>f1<TAB>...``; ``NA`` marks missing values
network            ``gene_a<TAB>gene_b<TAB>weight``; a line holding a single
                   gene declares a node (used for isolated genes and to pin
                   the gene order)
hierarchy          ``parent<TAB>child``; a single-field line declares a
                   category without edges
annotations        ``gene<TAB>category[<TAB>evidence_code]``
bias matrix        ``gene<TAB>category<TAB>bias``
scores             ``category<TAB>gene<TAB>score``
=================  ==========================================================

Blank lines and lines starting with ``#`` are ignored. Floats are written with
``repr`` so that reading back reproduces them exactly. All writers go through
a temporary file and an atomic rename.
"""
import json
import os
import tempfile
from contextlib import contextmanager

import numpy as np

from .bias import LabelBiasMatrix
from .errors import InvalidInputError
from .grf import DiscriminantMatrix
from .netbuild import FeatureMatrix, SparseNetwork
from .ontology import AnnotationSet, load_hierarchy

__all__ = [
    "atomic_write",
    "read_features",
    "write_features",
    "read_network",
    "write_network",
    "read_hierarchy",
    "write_hierarchy",
    "read_annotations",
    "write_annotations",
    "read_bias",
    "write_bias",
    "read_scores",
    "write_scores",
    "write_report_json",
    "write_report_tsv",
    "write_cumulative_tsv",
]


@contextmanager
def atomic_write(path):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def _float(text, path, lineno):
    try:
        return float(text)
    except ValueError:
        raise InvalidInputError(f"{path}:{lineno}: not a number: {text!r}") from None


def read_features(path):
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise InvalidInputError(f"{path}: empty feature file") from None
    width = len(header)
    genes, values = [], []
    for lineno, fields in rows:
        if len(fields) != width:
            raise InvalidInputError(f"{path}:{lineno}: expected {width} fields, got {len(fields)}")
        genes.append(fields[0])
        values.append([np.nan if v == "NA" else _float(v, path, lineno) for v in fields[1:]])
    return FeatureMatrix(tuple(genes), np.array(values, dtype=np.float64).reshape(len(genes), width - 1))


def write_features(path, features, column_names=None):
    p = features.values.shape[1]
    names = column_names or [f"f{i + 1}" for i in range(p)]
    with atomic_write(path) as fh:
        fh.write("\t".join(["gene", *names]) + "\n")
        for g, row in zip(features.gene_ids, features.values):
            fh.write("\t".join([g, *("NA" if np.isnan(v) else repr(float(v)) for v in row)]) + "\n")


def read_network(path):
    genes, seen, edges = [], set(), []

    def declare(g):
        if g not in seen:
            seen.add(g)
            genes.append(g)

    for lineno, fields in _rows(path):
        if len(fields) == 1:
            declare(fields[0])
        elif len(fields) == 3:
            a, b, w = fields
            declare(a)
            declare(b)
            edges.append((a, b, _float(w, path, lineno)))
        else:
            raise InvalidInputError(f"{path}:{lineno}: expected 1 or 3 fields")
    return SparseNetwork.from_edges(genes, edges)


def write_network(path, net):
    with atomic_write(path) as fh:
        for g in net.gene_ids:
            fh.write(f"{g}\n")
        for a, b, w in net.edges():
            fh.write(f"{a}\t{b}\t{w!r}\n")


def read_hierarchy(path):
    edges, cats = [], []
    for lineno, fields in _rows(path):
        if len(fields) == 1:
            cats.append(fields[0])
        elif len(fields) == 2:
            edges.append((fields[0], fields[1]))
        else:
            raise InvalidInputError(f"{path}:{lineno}: expected parent<TAB>child")
    return load_hierarchy(edges, cats)


def write_hierarchy(path, h):
    with atomic_write(path) as fh:
        linked = set()
        for m, c in h.sorted_edges():
            linked.update((m, c))
            fh.write(f"{m}\t{c}\n")
        for c in h.category_ids:
            if c not in linked:
                fh.write(f"{c}\n")


def read_annotations(path, drop_iea=False):
    """Read gene/category pairs; with ``drop_iea`` skip records whose evidence is ``IEA``."""
    pairs = set()
    for lineno, fields in _rows(path):
        if len(fields) not in (2, 3):
            raise InvalidInputError(f"{path}:{lineno}: expected gene<TAB>category[<TAB>evidence]")
        if drop_iea and len(fields) == 3 and fields[2].strip().upper() == "IEA":
            continue
        pairs.add((fields[0], fields[1]))
    return AnnotationSet(frozenset(pairs))


def write_annotations(path, ann):
    with atomic_write(path) as fh:
        for g, c in sorted(ann.pairs):
            fh.write(f"{g}\t{c}\n")


def _read_long(path, first, second):
    cells = {}
    rows_order, cols_order = {}, {}
    for lineno, fields in _rows(path):
        if len(fields) != 3:
            raise InvalidInputError(f"{path}:{lineno}: expected 3 fields")
        a, b, v = fields
        key = (a, b) if first == "gene" else (b, a)
        if key in cells:
            raise InvalidInputError(f"{path}:{lineno}: duplicate entry {a!r}/{b!r}")
        cells[key] = _float(v, path, lineno)
        rows_order.setdefault(key[0], len(rows_order))
        cols_order.setdefault(key[1], len(cols_order))
    genes, cats = tuple(rows_order), tuple(cols_order)
    if len(cells) != len(genes) * len(cats):
        raise InvalidInputError(f"{path}: matrix is incomplete")
    M = np.empty((len(genes), len(cats)))
    for (g, c), v in cells.items():
        M[rows_order[g], cols_order[c]] = v
    return genes, cats, M


def read_bias(path):
    genes, cats, M = _read_long(path, "gene", "category")
    return LabelBiasMatrix(genes, cats, M)


def write_bias(path, Y):
    with atomic_write(path) as fh:
        for i, g in enumerate(Y.gene_ids):
            for j, c in enumerate(Y.category_ids):
                fh.write(f"{g}\t{c}\t{float(Y.values[i, j])!r}\n")


def read_scores(path):
    genes, cats, M = _read_long(path, "category", "gene")
    return DiscriminantMatrix(genes, cats, M)


def write_scores(path, F):
    with atomic_write(path) as fh:
        for j, c in enumerate(F.category_ids):
            for i, g in enumerate(F.gene_ids):
                fh.write(f"{c}\t{g}\t{float(F.scores[i, j])!r}\n")


def write_report_json(path, report):
    with atomic_write(path) as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def write_report_tsv(path, report):
    with atomic_write(path) as fh:
        fh.write("category\tn_pos\tn_neg\tauc_roc\terror\tauprc\n")
        for r in report.records:
            fh.write(f"{r.category_id}\t{r.n_pos}\t{r.n_neg}\t{r.auc_roc!r}\t{r.error!r}\t{r.auprc!r}\n")


def write_cumulative_tsv(path, report):
    with atomic_write(path) as fh:
        fh.write("percentile\terror\n")
        for p, e in report.cumulative:
            fh.write(f"{p!r}\t{e!r}\n")
