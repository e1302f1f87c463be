"""Graph containers, on-disk format, and synthetic block-model generators.

A graph lives in a directory of five files:

* ``graph.json``   header with node/feature/class counts and a multilabel flag
* ``edges.tsv``    one undirected edge per line as ``src<TAB>dst``
* ``features.tsv`` one node per line, tab-separated floats
* ``labels.tsv``   one node per line; single-label graphs store one integer,
  multilabel graphs store ``num_classes`` space-separated 0/1 flags
* ``masks.tsv``    one role token per line: ``train``, ``val``, ``test`` or ``none``

Adjacency is stored symmetric with an empty diagonal; self-loops are added
later by the aggregator builders, never by the data layer.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

ROLES = ("train", "val", "test", "none")

HEADER_KEYS = ("num_nodes", "num_features", "num_classes", "multilabel")


class GraphFormatError(ValueError):
    """Raised when a graph directory is missing, malformed, or inconsistent.

    The message always names the offending file and, where one exists, the
    1-based line number.
    """


def _fail(filename: str, msg: str, line: int | None = None) -> None:
    where = f"{filename}:{line}" if line is not None else filename
    raise GraphFormatError(f"{where}: {msg}")


@dataclass(frozen=True)
class Graph:
    """Immutable node-classification graph.

    Attributes:
        adjacency: symmetric n x n CSR matrix with unit weights and an empty
            diagonal.
        features: float64 array of shape (n, d).
        labels: int64 array of shape (n,) for single-label graphs, or an
            int64 0/1 array of shape (n, c) for multilabel graphs.
        roles: array of shape (n,) holding one of ``train``, ``val``,
            ``test``, ``none`` per node.
        num_classes: number of target classes c.
    """

    adjacency: sp.csr_matrix
    features: np.ndarray
    labels: np.ndarray
    roles: np.ndarray
    num_classes: int

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def multilabel(self) -> bool:
        return self.labels.ndim == 2

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    def mask(self, role: str) -> np.ndarray:
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}; expected one of {ROLES}")
        return self.roles == role

    @property
    def train_mask(self) -> np.ndarray:
        return self.mask("train")

    @property
    def val_mask(self) -> np.ndarray:
        return self.mask("val")

    @property
    def test_mask(self) -> np.ndarray:
        return self.mask("test")

    def validate(self) -> None:
        """Check structural invariants, raising ValueError on violation.

        Every class must appear at least once among train-mask nodes for a
        trainable dataset; propagation-only fixtures may carry empty masks,
        so that condition only warns.
        """
        n = self.adjacency.shape[0]
        if self.adjacency.shape != (n, n):
            raise ValueError("adjacency must be square")
        diff = self.adjacency - self.adjacency.T
        if diff.nnz and np.max(np.abs(diff.data)) > 0:
            raise ValueError("adjacency must be symmetric")
        if self.adjacency.diagonal().any():
            raise ValueError("adjacency diagonal must be empty; self-loops are added by aggregators")
        if self.features.shape[0] != n:
            raise ValueError(f"features have {self.features.shape[0]} rows, expected {n}")
        if self.labels.shape[0] != n:
            raise ValueError(f"labels have {self.labels.shape[0]} rows, expected {n}")
        if self.multilabel:
            if self.labels.shape[1] != self.num_classes:
                raise ValueError("multilabel labels must have num_classes columns")
            bad = ~np.isin(self.labels, (0, 1))
            if bad.any():
                raise ValueError("multilabel labels must be 0/1")
        else:
            if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= self.num_classes:
                raise ValueError(f"labels must lie in [0, {self.num_classes})")
        if not np.isin(self.roles, ROLES).all():
            raise ValueError(f"roles must be one of {ROLES}")
        train = self.train_mask
        if train.any():
            if self.multilabel:
                covered = self.labels[train].any(axis=0)
            else:
                covered = np.isin(np.arange(self.num_classes), self.labels[train])
            if not covered.all():
                missing = np.flatnonzero(~covered)
                warnings.warn(
                    f"classes {missing.tolist()} have no train-mask examples",
                    stacklevel=2,
                )


def _read_lines(directory: Path, name: str) -> list[str]:
    path = directory / name
    if not path.is_file():
        _fail(name, f"missing from {directory}")
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse_header(directory: Path) -> dict:
    lines = "\n".join(_read_lines(directory, "graph.json"))
    try:
        header = json.loads(lines)
    except json.JSONDecodeError as exc:
        _fail("graph.json", f"invalid JSON ({exc})")
    if not isinstance(header, dict):
        _fail("graph.json", "header must be a JSON object")
    for key in HEADER_KEYS:
        if key not in header:
            _fail("graph.json", f"missing key {key!r}")
    for key in ("num_nodes", "num_features", "num_classes"):
        if not isinstance(header[key], int) or header[key] <= 0:
            _fail("graph.json", f"{key} must be a positive integer")
    if not isinstance(header["multilabel"], bool):
        _fail("graph.json", "multilabel must be a boolean")
    return header


def _parse_edges(directory: Path, n: int) -> sp.csr_matrix:
    lines = _read_lines(directory, "edges.tsv")
    pairs = set()
    for i, line in enumerate(lines, start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            _fail("edges.tsv", f"expected 'src<TAB>dst', got {line!r}", i)
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError:
            _fail("edges.tsv", f"non-integer endpoint in {line!r}", i)
        if not (0 <= src < n and 0 <= dst < n):
            _fail("edges.tsv", f"endpoint out of range [0, {n}) in {line!r}", i)
        if src == dst:
            _fail("edges.tsv", f"self-loop at node {src}", i)
        pairs.add((min(src, dst), max(src, dst)))
    if pairs:
        arr = np.array(sorted(pairs), dtype=np.int64)
        rows = np.concatenate([arr[:, 0], arr[:, 1]])
        cols = np.concatenate([arr[:, 1], arr[:, 0]])
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
    data = np.ones(rows.shape[0], dtype=np.float64)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _parse_features(directory: Path, n: int, d: int) -> np.ndarray:
    lines = _read_lines(directory, "features.tsv")
    if len(lines) != n:
        _fail("features.tsv", f"expected {n} rows, found {len(lines)}")
    parts = [line.split("\t") for line in lines]
    for i, row in enumerate(parts, start=1):
        if len(row) != d:
            _fail("features.tsv", f"expected {d} columns, found {len(row)}", i)
    try:
        return np.asarray(parts, dtype=np.float64)
    except ValueError:
        for i, row in enumerate(parts, start=1):
            for cell in row:
                try:
                    float(cell)
                except ValueError:
                    _fail("features.tsv", f"non-numeric value {cell!r}", i)
        raise


def _parse_labels(directory: Path, n: int, c: int, multilabel: bool) -> np.ndarray:
    lines = _read_lines(directory, "labels.tsv")
    if len(lines) != n:
        _fail("labels.tsv", f"expected {n} rows, found {len(lines)}")
    if multilabel:
        out = np.zeros((n, c), dtype=np.int64)
        for i, line in enumerate(lines, start=1):
            parts = line.split()
            if len(parts) != c:
                _fail("labels.tsv", f"expected {c} flags, found {len(parts)}", i)
            for j, cell in enumerate(parts):
                if cell not in ("0", "1"):
                    _fail("labels.tsv", f"flag must be 0 or 1, got {cell!r}", i)
                out[i - 1, j] = int(cell)
        return out
    out = np.zeros(n, dtype=np.int64)
    for i, line in enumerate(lines, start=1):
        try:
            value = int(line.strip())
        except ValueError:
            _fail("labels.tsv", f"non-integer label {line!r}", i)
        if not 0 <= value < c:
            _fail("labels.tsv", f"label {value} out of range [0, {c})", i)
        out[i - 1] = value
    return out


def _parse_masks(directory: Path, n: int) -> np.ndarray:
    lines = _read_lines(directory, "masks.tsv")
    if len(lines) != n:
        _fail("masks.tsv", f"expected {n} rows, found {len(lines)}")
    out = np.empty(n, dtype="<U5")
    for i, line in enumerate(lines, start=1):
        token = line.strip()
        if token not in ROLES:
            _fail("masks.tsv", f"unknown role {token!r}; expected one of {ROLES}", i)
        out[i - 1] = token
    return out


def load_graph(path: str | Path) -> Graph:
    """Load a graph directory into a validated Graph.

    Parameters:
        path: directory containing graph.json, edges.tsv, features.tsv,
            labels.tsv and masks.tsv.

    Returns:
        The parsed Graph with a symmetric unit-weight adjacency.

    Raises:
        GraphFormatError: on any missing file, malformed line, out-of-range
            index, or row-count mismatch, naming the file and line.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise GraphFormatError(f"{directory}: not a directory")
    header = _parse_header(directory)
    n = header["num_nodes"]
    g = Graph(
        adjacency=_parse_edges(directory, n),
        features=_parse_features(directory, n, header["num_features"]),
        labels=_parse_labels(directory, n, header["num_classes"], header["multilabel"]),
        roles=_parse_masks(directory, n),
        num_classes=header["num_classes"],
    )
    g.validate()
    return g


def save_graph(g: Graph, path: str | Path) -> None:
    """Write a graph directory; load_graph(save_graph(g)) round-trips exactly."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    header = {
        "num_nodes": g.num_nodes,
        "num_features": g.num_features,
        "num_classes": g.num_classes,
        "multilabel": g.multilabel,
    }
    (directory / "graph.json").write_text(json.dumps(header) + "\n", encoding="utf-8")

    upper = sp.triu(g.adjacency, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    edge_lines = [f"{upper.row[i]}\t{upper.col[i]}" for i in order]
    (directory / "edges.tsv").write_text("\n".join(edge_lines) + ("\n" if edge_lines else ""), encoding="utf-8")

    feat_lines = ["\t".join(repr(float(v)) for v in row) for row in g.features]
    (directory / "features.tsv").write_text("\n".join(feat_lines) + "\n", encoding="utf-8")

    if g.multilabel:
        label_lines = [" ".join(str(int(v)) for v in row) for row in g.labels]
    else:
        label_lines = [str(int(v)) for v in g.labels]
    (directory / "labels.tsv").write_text("\n".join(label_lines) + "\n", encoding="utf-8")

    (directory / "masks.tsv").write_text("\n".join(str(r) for r in g.roles) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class SbmSpec:
    """Stochastic block model configuration.

    Attributes:
        blocks: number of equally sized communities.
        block_size: nodes per community.
        p_in: edge probability inside a community.
        p_out: edge probability across communities.
        labeled_per_block: train-mask nodes drawn per community; remaining
            nodes split 1:1 into val and test.
        feature_dim: feature columns d.
        feature_mode: ``random`` for U[0,1) features, ``onehot`` for
            0.1 * U[0,1) noise plus 1.0 on the block-indicator column
            (block id modulo d).
        seed: generator seed; equal specs produce identical graphs.
    """

    blocks: int
    block_size: int
    p_in: float
    p_out: float
    labeled_per_block: int
    feature_dim: int = 16
    feature_mode: str = "random"
    seed: int = 0

    def validate(self) -> None:
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.block_size < 2:
            raise ValueError("block_size must be >= 2")
        for name in ("p_in", "p_out"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0 < self.labeled_per_block <= self.block_size:
            raise ValueError("labeled_per_block must lie in (0, block_size]")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if self.feature_mode not in ("random", "onehot"):
            raise ValueError("feature_mode must be 'random' or 'onehot'")
        if self.blocks > 1 and self.p_in <= self.p_out:
            warnings.warn(
                "p_in <= p_out gives no detectable community structure",
                UserWarning,
                stacklevel=2,
            )


def generate_sbm(spec: SbmSpec) -> Graph:
    """Sample a stochastic block model graph with masks and features.

    Labels are block identities. The realized edge count is checked against
    its binomial expectation within four standard deviations, which guards
    against probability or generator misuse.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    b, s = spec.blocks, spec.block_size
    n = b * s
    block = np.repeat(np.arange(b), s)

    rows_parts: list[np.ndarray] = []
    cols_parts: list[np.ndarray] = []
    for a in range(b):
        lo_a = a * s
        iu, ju = np.triu_indices(s, k=1)
        keep = rng.random(iu.shape[0]) < spec.p_in
        rows_parts.append(lo_a + iu[keep])
        cols_parts.append(lo_a + ju[keep])
        for c in range(a + 1, b):
            lo_c = c * s
            hit = rng.random((s, s)) < spec.p_out
            ii, jj = np.nonzero(hit)
            rows_parts.append(lo_a + ii)
            cols_parts.append(lo_c + jj)
    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)

    pairs_in = b * (s * (s - 1) // 2)
    pairs_out = (b * (b - 1) // 2) * s * s
    expected = pairs_in * spec.p_in + pairs_out * spec.p_out
    variance = pairs_in * spec.p_in * (1 - spec.p_in) + pairs_out * spec.p_out * (1 - spec.p_out)
    if abs(rows.shape[0] - expected) > 4.0 * np.sqrt(variance) + 1e-12:
        raise RuntimeError(
            f"realized edge count {rows.shape[0]} outside 4 sigma of expectation {expected:.1f}"
        )

    data = np.ones(2 * rows.shape[0], dtype=np.float64)
    adjacency = sp.csr_matrix(
        (data, (np.concatenate([rows, cols]), np.concatenate([cols, rows]))), shape=(n, n)
    )

    if spec.feature_mode == "random":
        features = rng.random((n, spec.feature_dim))
    else:
        features = 0.1 * rng.random((n, spec.feature_dim))
        features[np.arange(n), block % spec.feature_dim] += 1.0

    roles = np.full(n, "none", dtype="<U5")
    unlabeled: list[np.ndarray] = []
    for a in range(b):
        members = np.arange(a * s, (a + 1) * s)
        chosen = rng.choice(members, size=spec.labeled_per_block, replace=False)
        roles[chosen] = "train"
        unlabeled.append(np.setdiff1d(members, chosen))
    pool = np.concatenate(unlabeled)
    rng.shuffle(pool)
    half = pool.shape[0] // 2
    roles[pool[:half]] = "val"
    roles[pool[half:]] = "test"

    g = Graph(
        adjacency=adjacency,
        features=features,
        labels=block.astype(np.int64),
        roles=roles,
        num_classes=b,
    )
    g.validate()
    return g


def randomize_features(g: Graph, dim: int, seed: int) -> Graph:
    """Replace features with U[0,1) draws of width dim; topology unchanged."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    return dataclasses.replace(g, features=rng.random((g.num_nodes, dim)))


def reduce_features(g: Graph, keep) -> Graph:
    """Keep a subset of feature columns.

    keep is either a column count (the first ``keep`` columns survive) or an
    explicit list of column indices selected in the given order.
    """
    if np.isscalar(keep):
        num = int(keep)
        if not 0 < num <= g.num_features:
            raise ValueError(f"keep must lie in (0, {g.num_features}]")
        cols = np.arange(num)
    else:
        cols = np.asarray(keep, dtype=np.int64)
        if cols.size == 0:
            raise ValueError("empty feature selection")
        if cols.min() < 0 or cols.max() >= g.num_features:
            raise ValueError(f"feature index out of range [0, {g.num_features})")
    return dataclasses.replace(g, features=np.ascontiguousarray(g.features[:, cols]))
