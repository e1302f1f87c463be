"""Shared fixtures-in-code: tiny graphs and independent dense references."""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from spic.graphdata import Graph


def build_graph(n, edges, *, features=None, labels=None, roles=None, num_classes=None):
    rows = [e[0] for e in edges] + [e[1] for e in edges]
    cols = [e[1] for e in edges] + [e[0] for e in edges]
    adjacency = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    adjacency.sum_duplicates()
    adjacency.data[:] = 1.0
    if features is None:
        features = np.arange(n * 2, dtype=np.float64).reshape(n, 2) + 1.0
    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
    if roles is None:
        roles = np.full(n, "none", dtype="<U5")
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.ndim == 1 else labels.shape[1]
    return Graph(
        adjacency=adjacency,
        features=np.asarray(features, dtype=np.float64),
        labels=np.asarray(labels),
        roles=np.asarray(roles, dtype="<U5"),
        num_classes=num_classes,
    )


def triangle():
    return build_graph(3, [(0, 1), (1, 2), (0, 2)])


def pair():
    """Two nodes joined by one edge."""
    return build_graph(2, [(0, 1)])


def star(leaves=3):
    """Node 0 joined to each leaf."""
    return build_graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def two_triangles():
    """Two triangles bridged by one edge; labels are triangle identity."""
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]
    labels = np.array([0, 0, 0, 1, 1, 1], dtype=np.int64)
    roles = np.array(["train", "val", "test", "train", "val", "test"], dtype="<U5")
    rng = np.random.default_rng(0)
    features = rng.random((6, 4))
    return build_graph(6, edges, features=features, labels=labels, roles=roles, num_classes=2)


def random_graph(n, p, seed, *, d=4, c=2, connected=False):
    rng = np.random.default_rng(seed)
    while True:
        upper = np.triu(rng.random((n, n)) < p, k=1)
        dense = (upper | upper.T).astype(np.float64)
        if not upper.any():
            continue
        adjacency = sp.csr_matrix(dense)
        if connected:
            num, _ = connected_components(adjacency, directed=False)
            if num != 1:
                continue
        break
    labels = rng.integers(0, c, size=n).astype(np.int64)
    roles = np.full(n, "none", dtype="<U5")
    return Graph(
        adjacency=adjacency,
        features=rng.random((n, d)),
        labels=labels,
        roles=roles,
        num_classes=c,
    )


def dense_power_apply(agg, x, k):
    """Independent reference: dense (beta*I + M)^k X via repeated matmul."""
    s = agg.matrix.toarray() + agg.shift * np.eye(agg.num_nodes)
    out = np.array(x, dtype=np.float64)
    for _ in range(k):
        out = s @ out
    return out


def relative_frobenius(a, b):
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))
