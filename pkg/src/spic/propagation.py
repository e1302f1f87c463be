"""Power-iteration propagation and a dense spectral oracle.

The workhorse is ``propagate``, which applies the shifted operator
beta * I + M to a dense feature block k times. ``appnp_propagate`` mixes a
teleport term back in at every step and ``polynomial_propagate`` forms an
arbitrary polynomial in M. ``spectral_oracle`` eigendecomposes the dense
operator so that what the iteration converges to can be checked against the
eigen-expansion  M^k v0 = sum_i c_i lambda_i^k x_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregators import Aggregator

ORACLE_CAP = 2000


@dataclass(frozen=True)
class Embedding:
    """Propagated features.

    Attributes:
        values: dense (n, d) result, always finite.
        k: number of operator applications.
        beta: diagonal shift that was applied (0 when the op ignores it).
        normalized: whether per-column max-abs rescaling ran each iteration.
        source_family: family tag of the aggregator that produced this.
    """

    values: np.ndarray
    k: int
    beta: float
    normalized: bool
    source_family: str


@dataclass(frozen=True)
class SpectralDecomposition:
    """Dense eigendecomposition sorted by eigenvalue magnitude, descending.

    Attributes:
        eigenvalues: (n,) array, |lambda_1| >= |lambda_2| >= ...
        eigenvectors: (n, n) unit-norm columns x_i, orthonormal when the
            operator is symmetric.
        coefficients: (n,) solution c of v0 = sum_i c_i x_i, or None when no
            v0 was supplied.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    coefficients: np.ndarray | None


def _apply(agg: Aggregator, y: np.ndarray) -> np.ndarray:
    out = agg.matrix @ y
    if agg.shift:
        out = out + agg.shift * y
    return out


def _apply_transpose(agg: Aggregator, y: np.ndarray) -> np.ndarray:
    out = agg.matrix.T @ y
    if agg.shift:
        out = out + agg.shift * y
    return out


def dense_operator(agg: Aggregator) -> np.ndarray:
    """The effective operator beta * I + M as a dense array."""
    s = agg.matrix.toarray()
    if agg.shift:
        s[np.diag_indices_from(s)] += agg.shift
    return s


def _check_rows(agg: Aggregator, x: np.ndarray) -> None:
    if x.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {x.shape}")
    if x.shape[0] != agg.num_nodes:
        raise ValueError(f"X has {x.shape[0]} rows, aggregator expects {agg.num_nodes}")


def propagate(agg: Aggregator, x: np.ndarray, k: int, normalize: bool | None = None) -> Embedding:
    """Apply (beta * I + M) to X for k iterations.

    Parameters:
        agg: the sparse operator M with its diagonal shift beta.
        x: dense (n, d) feature block.
        k: number of applications; k=0 returns X unchanged.
        normalize: rescale every column by its max-abs value (when nonzero)
            after each iteration. Rescaling preserves each column's
            direction, which a trained head can absorb, while preventing
            overflow at large k. Defaults to off for k <= 5 and on for
            k > 5.

    Raises:
        ValueError: on shape mismatch, k < 0, or non-finite values, naming
            the iteration that produced them.
    """
    _check_rows(agg, x)
    if k < 0:
        raise ValueError("k must be >= 0")
    if normalize is None:
        normalize = k > 5
    y = np.array(x, dtype=np.float64, copy=True)
    if not np.isfinite(y).all():
        raise ValueError("input features contain non-finite values")
    for it in range(1, k + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            y = _apply(agg, y)
        if not np.isfinite(y).all():
            raise ValueError(
                f"non-finite values at iteration {it} of {k}; enable normalize to rescale columns"
            )
        if normalize:
            peak = np.abs(y).max(axis=0)
            y /= np.where(peak > 0.0, peak, 1.0)
    return Embedding(values=y, k=k, beta=agg.shift, normalized=bool(normalize), source_family=agg.family)


def appnp_propagate(agg: Aggregator, x: np.ndarray, alpha: float, big_k: int) -> Embedding:
    """Teleport propagation X^t = (1 - alpha) * M X^(t-1) + alpha * X^0.

    Runs big_k steps from X^0 = X. Operates on M itself; the aggregator's
    diagonal shift plays no role here because the teleport term already
    remixes the identity. For big_k = 3 this equals the closed-form
    polynomial with coefficients
    [alpha, alpha(1-alpha), alpha(1-alpha)^2, (1-alpha)^3].
    """
    _check_rows(agg, x)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0,1)")
    if big_k < 1:
        raise ValueError("K must be >= 1")
    x0 = np.array(x, dtype=np.float64, copy=True)
    y = x0.copy()
    for it in range(1, big_k + 1):
        y = (1.0 - alpha) * (agg.matrix @ y) + alpha * x0
        if not np.isfinite(y).all():
            raise ValueError(f"non-finite values at iteration {it} of {big_k}")
    return Embedding(values=y, k=big_k, beta=0.0, normalized=False, source_family=agg.family)


def polynomial_propagate(agg: Aggregator, x: np.ndarray, theta) -> Embedding:
    """Polynomial propagation sum_i theta_i M^i X via Horner accumulation.

    len(theta) - 1 sparse applications total; theta = [1] returns X and
    theta = [0, 1] returns M X. The aggregator's diagonal shift plays no
    role here since a shift is expressible through theta.
    """
    _check_rows(agg, x)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 1 or theta.size < 1:
        raise ValueError("theta must be a nonempty 1-dimensional sequence")
    x0 = np.array(x, dtype=np.float64, copy=True)
    y = theta[-1] * x0
    for coeff in theta[-2::-1]:
        y = agg.matrix @ y + coeff * x0
    if not np.isfinite(y).all():
        raise ValueError("non-finite values in polynomial propagation")
    degree = theta.size - 1
    return Embedding(values=y, k=degree, beta=0.0, normalized=False, source_family=agg.family)


def spectral_oracle(agg: Aggregator, v0: np.ndarray | None = None, cap: int = ORACLE_CAP) -> SpectralDecomposition:
    """Dense eigendecomposition of the effective operator beta * I + M.

    Eigenpairs are sorted by |lambda| descending with unit-norm eigenvector
    columns. When v0 is given, the coefficients c solving v0 = sum c_i x_i
    come back too. Symmetric families always qualify; asymmetric operators
    that miss the residual tolerance or have a singular eigenbasis raise,
    with the advice to use a symmetric family instead.
    """
    n = agg.num_nodes
    if n > cap:
        raise ValueError(f"matrix of size {n} exceeds the dense oracle cap {cap}")
    s = dense_operator(agg)
    if agg.symmetric:
        w, v = np.linalg.eigh(s)
    else:
        w, v = np.linalg.eig(s)
        scale = max(1.0, float(np.abs(w).max(initial=0.0)))
        if np.iscomplexobj(w) and max(np.abs(w.imag).max(initial=0.0), np.abs(v.imag).max(initial=0.0)) <= 1e-12 * scale:
            w, v = w.real, v.real
    order = np.argsort(-np.abs(w), kind="stable")
    w, v = w[order], v[:, order]
    v = v / np.linalg.norm(v, axis=0)

    residual = s @ v - v * w[np.newaxis, :]
    bound = 1e-8 * np.maximum(1.0, np.abs(w))
    worst = np.linalg.norm(residual, axis=0) - bound
    if worst.max(initial=-1.0) > 0.0:
        bad = int(np.argmax(worst))
        raise RuntimeError(
            f"eigenpair {bad} misses the residual tolerance; the operator may not be "
            "diagonalizable. Use a symmetric family (DAD, GAT_SYM, RL_SYM) for oracle checks."
        )

    coefficients = None
    if v0 is not None:
        v0 = np.asarray(v0, dtype=np.float64).ravel()
        if v0.shape[0] != n:
            raise ValueError(f"v0 has length {v0.shape[0]}, expected {n}")
        try:
            coefficients = np.linalg.solve(v, v0.astype(v.dtype))
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(
                "eigenbasis is singular so v0 has no unique expansion; the operator is "
                "not diagonalizable. Use a symmetric family (DAD, GAT_SYM, RL_SYM)."
            ) from exc
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v, coefficients=coefficients)


def convergence_report(agg: Aggregator, v0: np.ndarray, k_max: int) -> np.ndarray:
    """Cosine similarity of (beta * I + M)^k v0 to the dominant eigenvector.

    Returns an array of k_max + 1 similarities for k = 0..k_max. The iterate
    is renormalized every step, which changes nothing about its direction
    but keeps the magnitudes representable. When |lambda_1| > |lambda_2| the
    similarity climbs toward 1 at the rate set by the spectral gap.

    Raises:
        ValueError: if v0 is orthogonal to the dominant eigenvector, in
            which case power iteration converges elsewhere.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    v0 = np.asarray(v0, dtype=np.float64).ravel()
    oracle = spectral_oracle(agg, v0)
    if abs(oracle.coefficients[0]) <= 1e-12:
        raise ValueError("v0 orthogonal to dominant eigenvector")
    x1 = oracle.eigenvectors[:, 0]
    u = v0.copy()
    sims = np.empty(k_max + 1, dtype=np.float64)
    for k in range(k_max + 1):
        norm = np.linalg.norm(u)
        if norm == 0.0:
            raise ValueError(f"iterate collapsed to zero at k={k}")
        sims[k] = abs(np.vdot(x1, u)) / norm
        if k < k_max:
            u = _apply(agg, u) / norm
    return sims
