"""
Isotonic reconciliation of per-gene category scores.

For one gene with unreconciled scores ``x`` the problem is

    min_z  sum_c q_c (x_c - z_c)^2   subject to  z_m >= z_c  for (m, c) in H

solved with the generalized pool-adjacent-violators heuristic (GPAV): visit
categories leaves-first; start a block at the visited category and keep
absorbing the adjacent child-side block with the largest value while that
value exceeds the current block's weighted mean.
"""
import graphlib
import heapq
from dataclasses import dataclass

import numpy as np

from .errors import CyclicHierarchyError, InvalidInputError
from .grf import DiscriminantMatrix

__all__ = ["IsotonicProblem", "gpav", "gpav_blocks", "is_feasible", "reconcile_matrix"]


@dataclass(frozen=True)
class IsotonicProblem:
    """One reconciliation instance.

    ``constraints`` holds index pairs ``(m, c)`` meaning ``z[m] >= z[c]``.
    """

    x: np.ndarray
    constraints: tuple
    q: np.ndarray = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        d = x.shape[0]
        q = np.ones(d) if self.q is None else np.asarray(self.q, dtype=np.float64)
        if q.shape != (d,) or not (q > 0).all():
            raise InvalidInputError("weights must be positive, one per score")
        cons = tuple((int(m), int(c)) for m, c in self.constraints)
        for m, c in cons:
            if not (0 <= m < d and 0 <= c < d) or m == c:
                raise InvalidInputError(f"bad constraint ({m}, {c})")
        graph = {i: set() for i in range(d)}
        for m, c in cons:
            graph[c].add(m)
        try:
            tuple(graphlib.TopologicalSorter(graph).static_order())
        except graphlib.CycleError as exc:
            raise CyclicHierarchyError(exc.args[1]) from None
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "constraints", cons)


def _leaves_first(d, cons):
    """Reverse topological order of the parent -> child graph, low index first on ties."""
    parents = [[] for _ in range(d)]
    outdeg = [0] * d
    for m, c in cons:
        parents[c].append(m)
        outdeg[m] += 1
    heap = [i for i in range(d) if outdeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        i = heapq.heappop(heap)
        order.append(i)
        for m in parents[i]:
            outdeg[m] -= 1
            if outdeg[m] == 0:
                heapq.heappush(heap, m)
    return order


def gpav_blocks(problem):
    """Run GPAV and return ``(z, blocks)``; ``blocks`` lists member indices per pooled block."""
    x, q, cons = problem.x, problem.q, problem.constraints
    d = x.shape[0]
    children = [[] for _ in range(d)]
    for m, c in cons:
        children[m].append(c)

    block_of = [-1] * d
    members = {}
    wsum = {}
    qsum = {}

    for j in _leaves_first(d, cons):
        block_of[j] = j
        members[j] = [j]
        wsum[j] = q[j] * x[j]
        qsum[j] = q[j]
        while True:
            value = wsum[j] / qsum[j]
            best = None
            for node in members[j]:
                for ch in children[node]:
                    b = block_of[ch]
                    if b == j:
                        continue
                    v = wsum[b] / qsum[b]
                    if v > value and (best is None or v > best[0]
                                      or (v == best[0] and min(members[b]) < best[2])):
                        best = (v, b, min(members[b]))
            if best is None:
                break
            b = best[1]
            for node in members[b]:
                block_of[node] = j
            members[j].extend(members.pop(b))
            wsum[j] += wsum.pop(b)
            qsum[j] += qsum.pop(b)

    z = np.empty(d)
    for b, nodes in members.items():
        z[nodes] = wsum[b] / qsum[b]
    return z, [sorted(v) for v in members.values()]


def gpav(problem):
    """Reconciled scores for an :class:`IsotonicProblem`."""
    return gpav_blocks(problem)[0]


def is_feasible(z, constraints, slack=1e-12):
    z = np.asarray(z)
    return all(z[m] >= z[c] - slack for m, c in constraints)


def reconcile_matrix(F, h, q=None):
    """Apply GPAV to every gene's row of ``F`` under the hierarchy's constraints.

    Rows that already satisfy every constraint are returned unchanged.
    """
    if set(F.category_ids) != set(h.category_ids) or len(F.category_ids) != len(h):
        raise InvalidInputError("score categories do not match the hierarchy")
    pos = {c: j for j, c in enumerate(F.category_ids)}
    cons = tuple(sorted((pos[m], pos[c]) for m, c in h.edges))
    S = np.array(F.scores, dtype=np.float64)
    if not cons:
        return DiscriminantMatrix(F.gene_ids, F.category_ids, S)
    par = np.array([m for m, _ in cons])
    chi = np.array([c for _, c in cons])
    violating = np.flatnonzero((S[:, par] < S[:, chi]).any(axis=1))
    for i in violating:
        S[i] = gpav(IsotonicProblem(S[i], cons, q))
    return DiscriminantMatrix(F.gene_ids, F.category_ids, S)
