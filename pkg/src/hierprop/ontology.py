"""
Category hierarchy and annotation handling.

A :class:`Hierarchy` is a DAG over categories with parent -> child edges. Solvers
use its undirected view (``h_mc = h_cm = 1`` for every edge) through
:func:`hierarchy_laplacian`. Annotations obey the true-path rule once
:func:`true_path_closure` has been applied.
"""
import graphlib
import heapq
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import CyclicHierarchyError, InvalidInputError

__all__ = [
    "Hierarchy",
    "AnnotationSet",
    "load_hierarchy",
    "true_path_closure",
    "filter_categories",
    "induced_hierarchy",
    "hierarchy_laplacian",
]


@dataclass(frozen=True, eq=False)
class Hierarchy:
    """Validated category DAG.

    Build instances with :func:`load_hierarchy`; the constructor assumes
    ``category_ids`` is sorted and ``edges`` is acyclic and duplicate-free.
    """

    category_ids: tuple
    edges: frozenset
    _parents: dict = field(init=False, repr=False)
    _children: dict = field(init=False, repr=False)
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        parents = {c: [] for c in self.category_ids}
        children = {c: [] for c in self.category_ids}
        for m, c in self.edges:
            parents[c].append(m)
            children[m].append(c)
        object.__setattr__(self, "_parents", {c: tuple(sorted(v)) for c, v in parents.items()})
        object.__setattr__(self, "_children", {c: tuple(sorted(v)) for c, v in children.items()})
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.category_ids)})

    def __eq__(self, other):
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return self.category_ids == other.category_ids and self.edges == other.edges

    def __hash__(self):
        return hash((self.category_ids, self.edges))

    def __len__(self):
        return len(self.category_ids)

    def __contains__(self, c):
        return c in self._index

    def _check(self, c):
        if c not in self._index:
            raise InvalidInputError(f"unknown category {c!r}")

    def index_of(self, c):
        self._check(c)
        return self._index[c]

    def parents(self, c):
        self._check(c)
        return self._parents[c]

    def children(self, c):
        self._check(c)
        return self._children[c]

    def siblings(self, c):
        """Categories other than ``c`` sharing at least one parent with it."""
        self._check(c)
        out = set()
        for m in self._parents[c]:
            out.update(self._children[m])
        out.discard(c)
        return frozenset(out)

    def ancestors(self, c):
        self._check(c)
        return self._ancestors[c]

    def descendants(self, c):
        self._check(c)
        return self._descendants[c]

    def roots(self):
        return tuple(c for c in self.category_ids if not self._parents[c])

    def sorted_edges(self):
        return sorted(self.edges)

    @cached_property
    def _topo(self):
        indeg = {c: len(self._parents[c]) for c in self.category_ids}
        heap = [self._index[c] for c in self.category_ids if indeg[c] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            c = self.category_ids[heapq.heappop(heap)]
            order.append(c)
            for ch in self._children[c]:
                indeg[ch] -= 1
                if indeg[ch] == 0:
                    heapq.heappush(heap, self._index[ch])
        return tuple(order)

    def topological_order(self):
        """Parents before children; ties broken by category order."""
        return self._topo

    @cached_property
    def _ancestors(self):
        anc = {}
        for c in self._topo:
            acc = set()
            for m in self._parents[c]:
                acc.add(m)
                acc |= anc[m]
            anc[c] = frozenset(acc)
        return anc

    @cached_property
    def _descendants(self):
        desc = {}
        for c in reversed(self._topo):
            acc = set()
            for ch in self._children[c]:
                acc.add(ch)
                acc |= desc[ch]
            desc[c] = frozenset(acc)
        return desc

    def components(self):
        """Connected components of the undirected view, each in category order."""
        seen = set()
        out = []
        for c in self.category_ids:
            if c in seen:
                continue
            stack, comp = [c], []
            seen.add(c)
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in self._parents[x] + self._children[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            out.append(tuple(sorted(comp, key=self._index.__getitem__)))
        return out


def load_hierarchy(edges, categories=()):
    """Validate a parent -> child edge list and build a :class:`Hierarchy`.

    Parameters
    ----------
    edges : iterable of (parent, child)
    categories : iterable, optional
        Extra categories to declare, e.g. ones without any edge.

    Raises
    ------
    InvalidInputError
        On duplicate edges or self-edges.
    CyclicHierarchyError
        If the edges contain a directed cycle.
    """
    edge_set = set()
    cats = set(categories)
    for m, c in edges:
        if m == c:
            raise InvalidInputError(f"self-edge on category {m!r}")
        if (m, c) in edge_set:
            raise InvalidInputError(f"duplicate edge {m!r} -> {c!r}")
        edge_set.add((m, c))
        cats.update((m, c))

    graph = {c: set() for c in cats}
    for m, c in edge_set:
        graph[c].add(m)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        # predecessors are parents, so graphlib lists the cycle parent -> child
        raise CyclicHierarchyError(exc.args[1]) from None
    return Hierarchy(tuple(sorted(cats)), frozenset(edge_set))


@dataclass(frozen=True)
class AnnotationSet:
    """Positive gene-category assignments."""

    pairs: frozenset
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair):
        return pair in self.pairs

    @cached_property
    def by_category(self):
        out = {}
        for g, c in self.pairs:
            out.setdefault(c, set()).add(g)
        return {c: frozenset(v) for c, v in out.items()}

    @cached_property
    def by_gene(self):
        out = {}
        for g, c in self.pairs:
            out.setdefault(g, set()).add(c)
        return {g: frozenset(v) for g, v in out.items()}

    def genes_in(self, c):
        return self.by_category.get(c, frozenset())

    def categories_of(self, g):
        return self.by_gene.get(g, frozenset())

    def genes(self):
        return frozenset(self.by_gene)

    def without_genes(self, genes):
        """Drop every pair whose gene is in ``genes``; closure status is preserved."""
        genes = set(genes)
        return AnnotationSet(frozenset(p for p in self.pairs if p[0] not in genes), self.closed)

    def restrict(self, categories):
        categories = set(categories)
        return AnnotationSet(frozenset(p for p in self.pairs if p[1] in categories), self.closed)


def true_path_closure(ann, h):
    """Add every ancestor of each annotated category."""
    pairs = set()
    for g, c in ann.pairs:
        if c not in h:
            raise InvalidInputError(f"annotation ({g!r}, {c!r}) uses unknown category")
        pairs.add((g, c))
        pairs.update((g, a) for a in h.ancestors(c))
    return AnnotationSet(frozenset(pairs), closed=True)


def induced_hierarchy(h, keep):
    """Sub-hierarchy on ``keep`` wired to nearest retained ancestors.

    ``(m, c)`` is an edge of the result iff both are kept, ``m`` is a proper
    ancestor of ``c`` in ``h``, and no kept category lies strictly between
    them on any path.
    """
    keep = set(keep)
    for c in keep:
        h._check(c)
    edges = set()
    for c in keep:
        anc = h.ancestors(c) & keep
        for m in anc:
            # m is nearest unless some kept r is both a descendant of m and ancestor of c
            if not (h.descendants(m) & anc):
                edges.add((m, c))
    return Hierarchy(tuple(sorted(keep)), frozenset(edges))


def filter_categories(h, ann, min_pos, max_pos):
    """Keep categories with ``min_pos <= #positives <= max_pos``.

    Returns the induced hierarchy (see :func:`induced_hierarchy`) and the
    annotations restricted to the retained categories.
    """
    if min_pos > max_pos:
        raise InvalidInputError(f"min_pos={min_pos} exceeds max_pos={max_pos}")
    if not ann.closed:
        raise InvalidInputError("filter_categories expects a closed annotation set")
    keep = [c for c in h.category_ids if min_pos <= len(ann.genes_in(c)) <= max_pos]
    return induced_hierarchy(h, keep), ann.restrict(keep)


def hierarchy_laplacian(h, as_sparse=False):
    """Laplacian ``G = V - H`` of the undirected category graph (d x d)."""
    d = len(h)
    rows, cols = [], []
    for m, c in h.edges:
        i, j = h.index_of(m), h.index_of(c)
        rows += [i, j]
        cols += [j, i]
    H = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(d, d))
    G = (sparse.diags(np.asarray(H.sum(axis=1)).ravel()) - H).tocsr()
    return G if as_sparse else G.toarray()
