"""
One-directional message passing over the category DAG.

Down-propagation solves categories parents-first; each category's bias is
its own bias plus the sum of its parents' solved scores. Up-propagation is the
mirror image, children first, adding the children's scores.
"""
import numpy as np

from .grf import DiscriminantMatrix, SolverSettings, cg_solve, grf_system
from .hlprop import _check_inputs

__all__ = ["down_propagate", "up_propagate"]


def _propagate(net, Y, h, settings, order, senders):
    Yv = _check_inputs(net, Y, h)
    sigma = settings.sigma_for(net.n_genes)
    A = grf_system(net, sigma)
    F = np.zeros_like(Yv)
    for c in order:
        j = h.index_of(c)
        y = Yv[:, j].copy()
        for m in senders(c):
            y += F[:, h.index_of(m)]
        F[:, j] = cg_solve(A, sigma * y, settings).x
    return DiscriminantMatrix(net.gene_ids, h.category_ids, F, info={"solves": len(order)})


def down_propagate(net, Y, h, settings=SolverSettings()):
    """Parents-first propagation; ``f_c = GRF(y_c + sum of parent scores)``.

    Parameters
    ----------
    net : SparseNetwork
    Y : LabelBiasMatrix
    h : Hierarchy
    settings : SolverSettings

    Returns
    -------
    DiscriminantMatrix
    """
    return _propagate(net, Y, h, settings, h.topological_order(), h.parents)


def up_propagate(net, Y, h, settings=SolverSettings()):
    """Children-first propagation; ``f_m = GRF(y_m + sum of child scores)``."""
    return _propagate(net, Y, h, settings, h.topological_order()[::-1], h.children)
