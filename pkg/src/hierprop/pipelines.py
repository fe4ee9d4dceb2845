"""
Named prediction methods: bias construction followed by a solver.

=========  ==================================================
``grf``    baseline biases, independent GRF per category
``hlbias`` hierarchical biases, independent GRF per category
``hlprop`` baseline biases, hierarchy-coupled joint solve
``down``   baseline biases, parents-first message passing
``up``     baseline biases, children-first message passing
``ir``     ``grf`` followed by isotonic reconciliation
=========  ==================================================

``setting`` selects the HLBias default for genes without relevant
annotations: the category mean label ``k`` for cross-validation (``"test"``),
-1 for the novel setting.
"""
from .bias import bias_matrix
from .errors import InvalidInputError
from .grf import SolverSettings, solve_grf_matrix
from .hlprop import HLPropSettings, solve_hlprop
from .msgprop import down_propagate, up_propagate
from .reconcile import reconcile_matrix

METHODS = ("grf", "hlbias", "hlprop", "down", "up", "ir")

UNLABELED_DEFAULT = {"test": "k", "novel": -1.0}


def run_method(name, net, ann_train, h, setting="test", solver=None, hlprop=None):
    """Score every gene of ``net`` in every category of ``h``.

    Parameters
    ----------
    name : str
        One of :data:`METHODS`.
    net : SparseNetwork
    ann_train : AnnotationSet
        Closed training annotations.
    h : Hierarchy
    setting : {"test", "novel"}
    solver : SolverSettings, optional
    hlprop : HLPropSettings, optional
        Only used by ``hlprop``; its ``inner`` settings are used as given.

    Returns
    -------
    DiscriminantMatrix
    """
    if name not in METHODS:
        raise InvalidInputError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    if setting not in UNLABELED_DEFAULT:
        raise InvalidInputError(f"unknown setting {setting!r}")
    solver = solver or SolverSettings()
    universe = net.gene_ids
    if name == "hlbias":
        Y = bias_matrix("hlbias", ann_train, h, universe, unlabeled=UNLABELED_DEFAULT[setting],
                        negative_default=-1.0)
        return solve_grf_matrix(net, Y, solver)

    Y = bias_matrix("baseline", ann_train, h, universe)
    if name == "grf":
        return solve_grf_matrix(net, Y, solver)
    if name == "ir":
        return reconcile_matrix(solve_grf_matrix(net, Y, solver), h)
    if name == "hlprop":
        return solve_hlprop(net, Y, h, hlprop or HLPropSettings(inner=solver))
    if name == "down":
        return down_propagate(net, Y, h, solver)
    return up_propagate(net, Y, h, solver)
