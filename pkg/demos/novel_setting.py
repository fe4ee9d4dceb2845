"""
Novel-annotation evaluation.

The synthetic observed annotations play the role of an old snapshot and the
complete annotations the role of a newer one. Models train on the old
snapshot and are scored on the genes that gain a category, with genes
already annotated to that category left out.
"""
from hierprop.evaluation import novel_eval
from hierprop.ontology import filter_categories
from hierprop.synth import generate

inst = generate(seed=3, hide_fraction=0.5)
n = inst.network.n_genes
h, ann_old = filter_categories(inst.hierarchy, inst.ann_observed, 3, n - 1)
ann_new = inst.ann_full.restrict(h.category_ids)

for method in ("grf", "hlbias", "hlprop", "down", "up"):
    rep = novel_eval(method, inst.network, ann_old, ann_new, h, min_new=3)
    print(f"{method:7s} {len(rep.records):2d} categories  mean error {rep.mean:.4f}")
