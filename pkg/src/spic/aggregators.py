"""Sparse neighborhood aggregators.

Every builder returns a row-indexed CSR operator whose sparsity pattern is
contained in A + I (the adjacency plus self-loops), so applying it k times
only ever mixes information across k-hop neighborhoods. Families:

* ``IDENTITY``  I, the do-nothing baseline
* ``DAD``       D^-1/2 (A + I) D^-1/2, symmetric
* ``DA``        D^-1 (A + I), row-stochastic
* ``AGNN``      row softmax of epsilon-scaled feature cosines
* ``GAT_SYM``/``GAT_ASYM``  row softmax of leaky-ReLU attention scores,
  optionally symmetrized as (Z + Z^T) / 2
* ``RL_SYM``/``RL_ASYM``    adjacency reweighted by U[0,1) draws plus I

where D is always the degree matrix of A + I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graphdata import Graph


@dataclass(frozen=True)
class Aggregator:
    """A sparse propagation operator.

    Attributes:
        matrix: n x n CSR operator M.
        family: tag naming the construction (``DAD``, ``DA``, ...).
        symmetric: whether M equals its transpose by construction.
        shift: diagonal shift beta; propagation applies beta * I + M.
    """

    matrix: sp.csr_matrix
    family: str
    symmetric: bool
    shift: float = 0.0

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]


def _with_self_loops(g: Graph) -> sp.csr_matrix:
    at = (g.adjacency + sp.eye(g.num_nodes, format="csr")).tocsr()
    at.sum_duplicates()
    at.sort_indices()
    return at


def _degrees(at: sp.csr_matrix) -> np.ndarray:
    return np.asarray(at.sum(axis=1)).ravel()


def _row_entries(mat: sp.csr_matrix) -> np.ndarray:
    """Row index of every stored entry."""
    return np.repeat(np.arange(mat.shape[0]), np.diff(mat.indptr))


def _row_softmax(mat: sp.csr_matrix) -> sp.csr_matrix:
    """Softmax the stored entries of each row in place; rows must be nonempty."""
    data = mat.data
    starts = mat.indptr[:-1]
    rows = _row_entries(mat)
    peak = np.maximum.reduceat(data, starts)
    data = np.exp(data - peak[rows])
    total = np.add.reduceat(data, starts)
    mat.data = data / total[rows]
    return mat


def build_identity(g: Graph) -> Aggregator:
    """The identity operator; propagation leaves features unchanged."""
    return Aggregator(sp.eye(g.num_nodes, format="csr"), "IDENTITY", symmetric=True)


def build_dad(g: Graph, shift: float = 0.0) -> Aggregator:
    """Symmetric normalization D^-1/2 (A + I) D^-1/2.

    The spectrum lies in (-1, 1] with the top eigenvalue exactly 1, so
    repeated application converges instead of exploding.
    """
    at = _with_self_loops(g)
    dinv = sp.diags(1.0 / np.sqrt(_degrees(at)))
    mat = (dinv @ at @ dinv).tocsr()
    mat.sort_indices()
    return Aggregator(mat, "DAD", symmetric=True, shift=shift)


def build_da(g: Graph, shift: float = 0.0) -> Aggregator:
    """Random-walk normalization D^-1 (A + I); rows sum to one."""
    at = _with_self_loops(g)
    dinv = sp.diags(1.0 / _degrees(at))
    mat = (dinv @ at).tocsr()
    mat.sort_indices()
    return Aggregator(mat, "DA", symmetric=False, shift=shift)


def build_agnn(g: Graph, epsilon: float = 1.0, shift: float = 0.0) -> Aggregator:
    """Row softmax of epsilon * cos(x_i, x_j) over each closed neighborhood.

    With epsilon = 0 every score ties and the softmax reproduces the DA
    operator exactly.
    """
    at = _with_self_loops(g)
    norms = np.linalg.norm(g.features, axis=1)
    if np.any(norms == 0.0):
        node = int(np.flatnonzero(norms == 0.0)[0])
        raise ValueError(f"node {node} has a zero-norm feature row; cosine is undefined")
    xn = g.features / norms[:, None]
    rows = _row_entries(at)
    cols = at.indices
    scores = np.empty(at.nnz, dtype=np.float64)
    step = 1 << 17
    for lo in range(0, at.nnz, step):
        hi = min(lo + step, at.nnz)
        scores[lo:hi] = np.einsum("ij,ij->i", xn[rows[lo:hi]], xn[cols[lo:hi]])
    mat = sp.csr_matrix((epsilon * scores, cols.copy(), at.indptr.copy()), shape=at.shape)
    return Aggregator(_row_softmax(mat), "AGNN", symmetric=False, shift=shift)


@dataclass(frozen=True)
class AttentionParams:
    """Attention scoring weights: score(i, j) = leaky(a . [P x_i, P x_j]).

    Attributes:
        proj: (d, h) projection applied to raw features before scoring.
        attn: (2h,) scoring vector split across the source and target halves.
        leaky_slope: negative-branch slope of the leaky ReLU.
    """

    proj: np.ndarray
    attn: np.ndarray
    leaky_slope: float = 0.2

    @classmethod
    def random(cls, num_features: int, width: int = 8, seed: int = 0, leaky_slope: float = 0.2) -> "AttentionParams":
        rng = np.random.default_rng(seed)
        bound_p = 1.0 / np.sqrt(num_features)
        bound_a = 1.0 / np.sqrt(2 * width)
        return cls(
            proj=rng.uniform(-bound_p, bound_p, size=(num_features, width)),
            attn=rng.uniform(-bound_a, bound_a, size=2 * width),
            leaky_slope=leaky_slope,
        )


def build_gat(g: Graph, params: AttentionParams, symmetric: bool = True, shift: float = 0.0) -> Aggregator:
    """Row softmax of leaky-ReLU attention scores on the A + I pattern.

    With symmetric=True the row-stochastic scores Z are averaged with their
    transpose, trading row sums for symmetry; otherwise Z is kept as is.
    With an all-zero scoring vector every score ties and both variants
    collapse onto DA (whose pattern is already symmetric in the tied case).
    """
    if params.proj.shape[0] != g.num_features:
        raise ValueError(
            f"projection expects {params.proj.shape[0]} features, graph has {g.num_features}"
        )
    width = params.proj.shape[1]
    if params.attn.shape != (2 * width,):
        raise ValueError(f"attn must have shape ({2 * width},)")
    at = _with_self_loops(g)
    u = g.features @ params.proj
    left = u @ params.attn[:width]
    right = u @ params.attn[width:]
    raw = left[_row_entries(at)] + right[at.indices]
    scores = np.where(raw >= 0.0, raw, params.leaky_slope * raw)
    z = sp.csr_matrix((scores, at.indices.copy(), at.indptr.copy()), shape=at.shape)
    z = _row_softmax(z)
    if symmetric:
        mat = ((z + z.T) * 0.5).tocsr()
        mat.sort_indices()
        return Aggregator(mat, "GAT_SYM", symmetric=True, shift=shift)
    z.sort_indices()
    return Aggregator(z, "GAT_ASYM", symmetric=False, shift=shift)


def build_random_laplacian(g: Graph, seed: int = 0, symmetric: bool = True) -> Aggregator:
    """Adjacency entries reweighted by independent U[0,1) draws, plus I.

    One draw is made per stored directed entry, so H is asymmetric; the
    symmetric variant averages H with its transpose before adding the
    identity. The diagonal comes from I alone, so the shift stays 0.
    """
    rng = np.random.default_rng(seed)
    h = g.adjacency.copy().tocsr()
    h.sort_indices()
    h.data = rng.random(h.nnz)
    eye = sp.eye(g.num_nodes, format="csr")
    if symmetric:
        mat = ((h + h.T) * 0.5 + eye).tocsr()
        mat.sort_indices()
        return Aggregator(mat, "RL_SYM", symmetric=True)
    mat = (h + eye).tocsr()
    mat.sort_indices()
    return Aggregator(mat, "RL_ASYM", symmetric=False)


def attention_entropy(agg: Aggregator) -> np.ndarray:
    """Per-row entropy H_i = -sum_j w_ij ln w_ij of the stored weights.

    Raises ValueError if any stored entry is negative; zero entries
    contribute nothing.
    """
    mat = agg.matrix
    data = mat.data
    if data.size and data.min() < 0.0:
        raise ValueError(f"{agg.family} has negative entries; entropy needs nonnegative weights")
    terms = np.where(data > 0.0, -data * np.log(np.where(data > 0.0, data, 1.0)), 0.0)
    out = np.zeros(mat.shape[0], dtype=np.float64)
    counts = np.diff(mat.indptr)
    nonempty = counts > 0
    if nonempty.any():
        sums = np.add.reduceat(terms, mat.indptr[:-1][nonempty])
        out[nonempty] = sums
    return out
