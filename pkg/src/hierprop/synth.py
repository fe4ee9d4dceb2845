"""
Synthetic benchmarks with planted hierarchical structure.

A rooted category tree (optionally with extra cross-links making it a DAG)
is generated level by level. Every gene is assigned one leaf; its full
annotation is that leaf plus all ancestors. Network edges are drawn with a
probability that depends on how deep the two genes' categories agree. A
fraction of genes then has its observed annotation truncated at a random
proper ancestor of its leaf, mimicking incomplete internal-node annotation.
"""
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import InvalidInputError
from .netbuild import SparseNetwork, normalize
from .ontology import AnnotationSet, load_hierarchy, true_path_closure

__all__ = ["SynthParams", "SynthInstance", "generate"]


@dataclass(frozen=True)
class SynthParams:
    n_genes: int = 300
    depth: int = 3
    branching: int = 3
    p_in: float = 0.15
    p_mid: float = 0.05
    p_out: float = 0.01
    hide_fraction: float = 0.3
    extra_parent_prob: float = 0.0

    def __post_init__(self):
        if self.n_genes < 2:
            raise InvalidInputError("need at least 2 genes")
        if self.depth < 2 or self.branching < 1:
            raise InvalidInputError("DAG needs depth >= 2 and branching >= 1")
        for name in ("p_in", "p_mid", "p_out", "extra_parent_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError(f"{name} must be a probability, got {v}")
        if not 0.0 <= self.hide_fraction < 1.0:
            raise InvalidInputError("hide_fraction must be in [0, 1)")


@dataclass(frozen=True)
class SynthInstance:
    network: SparseNetwork
    hierarchy: object
    ann_full: AnnotationSet
    ann_observed: AnnotationSet
    leaf_of: dict


def _category_tree(params, rng):
    levels = [["C0"]]
    edges = []
    counter = 1
    for _ in range(params.depth - 1):
        nxt = []
        for parent in levels[-1]:
            for _ in range(params.branching):
                name = f"C{counter}"
                counter += 1
                nxt.append(name)
                edges.append((parent, name))
        if params.extra_parent_prob > 0 and len(levels[-1]) > 1:
            tree_parent = {c: m for m, c in edges}
            for c in nxt:
                if rng.random() < params.extra_parent_prob:
                    others = [m for m in levels[-1] if m != tree_parent[c]]
                    edges.append((others[rng.integers(len(others))], c))
        levels.append(nxt)
    return levels, edges


def generate(seed=0, params=None, **overrides):
    """Draw one synthetic instance.

    Parameters
    ----------
    seed : int
    params : SynthParams, optional
    **overrides
        Field overrides applied on top of ``params``.

    Returns
    -------
    SynthInstance
        ``network`` is already normalized.
    """
    params = params or SynthParams()
    if overrides:
        params = SynthParams(**{**params.__dict__, **overrides})
    rng = np.random.default_rng(seed)

    levels, edges = _category_tree(params, rng)
    h = load_hierarchy(edges)
    leaves = levels[-1]
    n = params.n_genes
    genes = tuple(f"G{i:04d}" for i in range(n))
    leaf_idx = rng.integers(len(leaves), size=n)
    leaf_of = {g: leaves[k] for g, k in zip(genes, leaf_idx)}

    ann_full = true_path_closure(AnnotationSet({(g, leaf_of[g]) for g in genes}), h)

    # deepest non-root agreement decides the edge probability
    non_root = sorted(set(h.category_ids) - set(h.roots()))
    member = np.zeros((n, len(non_root)), dtype=bool)
    col = {c: j for j, c in enumerate(non_root)}
    for i, g in enumerate(genes):
        for c in ann_full.categories_of(g):
            if c in col:
                member[i, col[c]] = True
    same_leaf = leaf_idx[:, None] == leaf_idx[None, :]
    m = member.astype(np.int32)
    share_internal = (m @ m.T) > 0
    prob = np.where(same_leaf, params.p_in, np.where(share_internal, params.p_mid, params.p_out))
    draws = rng.random((n, n))
    upper = np.triu(draws < prob, k=1)
    W = sparse.csr_matrix(upper.astype(np.float64))
    net = normalize(SparseNetwork(genes, W + W.T))

    hidden = rng.random(n) < params.hide_fraction
    pairs = set()
    for i, g in enumerate(genes):
        leaf = leaf_of[g]
        if hidden[i]:
            anc = sorted(h.ancestors(leaf))
            pairs.add((g, anc[rng.integers(len(anc))]))
        else:
            pairs.add((g, leaf))
    ann_observed = true_path_closure(AnnotationSet(pairs), h)
    return SynthInstance(net, h, ann_full, ann_observed, leaf_of)
