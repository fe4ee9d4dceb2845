"""
Compare all six methods over a batch of synthetic instances.

Each instance plants a three-level category tree in the network: genes that
share a leaf link often, genes sharing only an internal category link less
often. A fraction of genes is annotated only down to an internal category,
which is the situation hierarchy-aware methods are meant to exploit.

Usage: ``python demos/compare_methods.py [n_seeds] [hide_fraction]``
"""
import sys
import time

import numpy as np

from hierprop.evaluation import cross_validate
from hierprop.ontology import filter_categories
from hierprop.pipelines import METHODS
from hierprop.synth import generate

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 10
hide = float(sys.argv[2]) if len(sys.argv) > 2 else 0.3

errors = {m: [] for m in METHODS}
start = time.perf_counter()
for seed in range(n_seeds):
    inst = generate(seed, hide_fraction=hide)
    h, ann = filter_categories(inst.hierarchy, inst.ann_observed, 3, inst.network.n_genes - 1)
    for m in METHODS:
        errors[m].append(cross_validate(m, inst.network, ann, h, folds=3, seed=seed).mean)

print(f"{n_seeds} instances, hide fraction {hide}, {time.perf_counter() - start:.1f} s")
print(f"{'method':8s} {'mean error':>10s} {'vs grf':>8s}")
base = np.mean(errors["grf"])
for m in METHODS:
    e = np.mean(errors[m])
    print(f"{m:8s} {e:10.4f} {e - base:+8.4f}")
