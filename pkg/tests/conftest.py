import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hierprop.netbuild import SparseNetwork

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def gene_names(n):
    return tuple(f"g{i:03d}" for i in range(n))


def network_from_dense(W, genes=None):
    genes = genes or gene_names(W.shape[0])
    edges = [(genes[i], genes[j], W[i, j]) for i in range(len(genes))
             for j in range(i + 1, len(genes)) if W[i, j] != 0]
    return SparseNetwork.from_edges(genes, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
