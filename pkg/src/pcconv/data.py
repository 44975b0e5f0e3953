"""Node-classification datasets: text-format I/O, SBM generation, split protocols.

On-disk layout of a dataset directory::

    edges.tsv     one undirected edge per line: two 0-based node ids, tab/space separated
    features.csv  m rows of d comma-separated reals
    labels.csv    m rows, one integer class id each (classes 0..C-1, none skipped)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidArgumentError
from .graph import Graph, edge_homophily

__all__ = [
    "Dataset",
    "Split",
    "load_dataset",
    "save_dataset",
    "sbm_generate",
    "split_sparse",
    "split_ratio",
    "make_split",
    "parse_split",
]

EDGES_FILE = "edges.tsv"
FEATURES_FILE = "features.csv"
LABELS_FILE = "labels.csv"


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: Graph
    X: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        m = self.graph.n_nodes
        if X.ndim != 2 or X.shape[0] != m:
            raise InvalidArgumentError(f"features must have {m} rows, got shape {X.shape}")
        if labels.shape != (m,):
            raise InvalidArgumentError(f"expected {m} labels, got shape {labels.shape}")
        if m and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise InvalidArgumentError(f"labels must lie in 0..{self.n_classes - 1}")
        if len(np.unique(labels)) != self.n_classes:
            raise InvalidArgumentError("every class 0..C-1 must occur at least once")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def homophily(self) -> float:
        return edge_homophily(self.graph, self.labels)

    def row_normalized(self) -> "Dataset":
        """Copy with each feature row scaled to unit L1 norm (zero rows kept)."""
        norms = np.abs(self.X).sum(axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return Dataset(self.graph, self.X / norms, self.labels, self.n_classes)


@dataclass(frozen=True, eq=False)
class Split:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        for name in ("train_idx", "val_idx", "test_idx"):
            idx = np.asarray(getattr(self, name), dtype=np.int64)
            if idx.ndim != 1 or len(idx) == 0:
                raise InvalidArgumentError(f"{name} must be a non-empty index vector")
            if len(np.unique(idx)) != len(idx):
                raise InvalidArgumentError(f"{name} contains repeated nodes")
            object.__setattr__(self, name, idx)
        a, b, c = self.train_idx, self.val_idx, self.test_idx
        if np.intersect1d(a, b).size or np.intersect1d(a, c).size or np.intersect1d(b, c).size:
            raise InvalidArgumentError("train/val/test index sets must be disjoint")

    def check_bounds(self, n_nodes: int) -> None:
        for idx in (self.train_idx, self.val_idx, self.test_idx):
            if idx.min() < 0 or idx.max() >= n_nodes:
                raise InvalidArgumentError(f"split index out of range for {n_nodes} nodes")

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train_idx), len(self.val_idx), len(self.test_idx)


# -- I/O ---------------------------------------------------------------

def _read_lines(path: Path):
    if not path.is_file():
        raise DataFormatError(path, None, "file not found")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if line:
                yield lineno, line


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    fpath, lpath, epath = directory / FEATURES_FILE, directory / LABELS_FILE, directory / EDGES_FILE

    rows = []
    width = None
    for lineno, line in _read_lines(fpath):
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise DataFormatError(fpath, lineno, "non-numeric feature value") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataFormatError(fpath, lineno, f"expected {width} features, found {len(row)}")
        rows.append(row)
    m = len(rows)
    X = np.array(rows, dtype=np.float64).reshape(m, width or 0)

    labels = []
    for lineno, line in _read_lines(lpath):
        try:
            labels.append(int(line))
        except ValueError:
            raise DataFormatError(lpath, lineno, f"invalid label {line!r}") from None
        if labels[-1] < 0:
            raise DataFormatError(lpath, lineno, "labels must be non-negative")
    if len(labels) != m:
        raise DataFormatError(lpath, None, f"expected {m} labels (one per feature row), found {len(labels)}")
    labels = np.array(labels, dtype=np.int64)
    n_classes = int(labels.max()) + 1 if m else 0
    missing = np.setdiff1d(np.arange(n_classes), labels)
    if missing.size:
        raise DataFormatError(lpath, None, f"label gap: classes {missing.tolist()} never occur")

    edges = []
    for lineno, line in _read_lines(epath):
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(epath, lineno, "expected two node ids")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataFormatError(epath, lineno, "node ids must be integers") from None
        if not (0 <= u < m and 0 <= v < m):
            raise DataFormatError(epath, lineno, f"node id out of range 0..{m - 1}")
        if u == v:
            raise DataFormatError(epath, lineno, "self-loops are not allowed")
        edges.append((u, v))

    graph = Graph.from_edges(m, np.array(edges, dtype=np.int64).reshape(-1, 2))
    return Dataset(graph, X, labels, n_classes)


def save_dataset(dataset: Dataset, directory, meta: dict | None = None) -> Path:
    """Write the three dataset files (and ``meta.txt`` when ``meta`` is given)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / EDGES_FILE, "w", encoding="utf-8") as fh:
        for u, v in dataset.graph.edges:
            fh.write(f"{u}\t{v}\n")
    with open(directory / FEATURES_FILE, "w", encoding="utf-8") as fh:
        for row in dataset.X:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    with open(directory / LABELS_FILE, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(y)}\n" for y in dataset.labels)
    if meta is not None:
        with open(directory / "meta.txt", "w", encoding="utf-8") as fh:
            fh.writelines(f"{key}={value}\n" for key, value in meta.items())
    return directory


# -- synthetic graphs ----------------------------------------------------

def sbm_generate(m: int, C: int, p_in: float, p_out: float, d: int, mu: float = 1.0,
                 sigma: float = 1.0, seed: int = 0) -> Dataset:
    """Stochastic block model with Gaussian class features.

    Classes are assigned round-robin (node ``i`` gets class ``i % C``).  Each
    unordered pair is linked with probability ``p_in`` (same class) or
    ``p_out``.  Class ``c`` features are ``mu * e_c + sigma * noise`` when
    ``d >= C``, otherwise the class means are random directions of length ``mu``.
    """
    if C < 1 or m < 2 * C:
        raise InvalidArgumentError(f"need C >= 1 and m >= 2C, got m={m}, C={C}")
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise InvalidArgumentError("edge probabilities must lie in [0, 1]")
    if p_in == 0.0 and p_out == 0.0:
        raise InvalidArgumentError("p_in = p_out = 0 would produce an edgeless graph")
    if d < 1 or sigma < 0:
        raise InvalidArgumentError("need d >= 1 and sigma >= 0")

    rng = np.random.default_rng(seed)
    labels = np.arange(m) % C
    u, v = np.triu_indices(m, k=1)
    prob = np.where(labels[u] == labels[v], p_in, p_out)
    keep = rng.random(len(u)) < prob
    graph = Graph(m, np.column_stack([u[keep], v[keep]]))

    if d >= C:
        means = np.zeros((C, d))
        means[np.arange(C), np.arange(C)] = mu
    else:
        means = rng.standard_normal((C, d))
        means *= mu / np.linalg.norm(means, axis=1, keepdims=True)
    X = means[labels] + sigma * rng.standard_normal((m, d))
    return Dataset(graph, X, labels, C)


# -- splits ------------------------------------------------------------------

def _floor_count(frac, m):
    # tolerance absorbs 0.29 * 100 = 28.999999999999996
    return int(math.floor(frac * m + 1e-9))


def split_sparse(dataset: Dataset, seed: int = 0, mode: str = "citation", per_class: int = 20,
                 n_val: int = 500, n_test: int = 1000) -> Split:
    """``citation``: ``per_class`` training nodes per class, then ``n_val`` / ``n_test``
    from the rest.  ``fraction``: 2.5% / 2.5% / 95% (floors, remainder to test)."""
    m = dataset.n_nodes
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    if mode == "citation":
        train = []
        for c in range(dataset.n_classes):
            members = perm[dataset.labels[perm] == c]
            if len(members) < per_class:
                raise InvalidArgumentError(f"class {c} has {len(members)} nodes, need {per_class} for training")
            train.append(members[:per_class])
        train = np.concatenate(train)
        rest = perm[~np.isin(perm, train)]
        if len(rest) < n_val + n_test:
            raise InvalidArgumentError(f"need {n_val + n_test} nodes outside the training set, have {len(rest)}")
        return Split(train, rest[:n_val], rest[n_val:n_val + n_test])
    if mode in ("fraction", "sparse"):
        n_train = _floor_count(0.025, m)
        n_val_f = _floor_count(0.025, m)
        if n_train == 0 or n_val_f == 0 or m - n_train - n_val_f == 0:
            raise InvalidArgumentError(f"{m} nodes are too few for a 2.5/2.5/95 split")
        return Split(perm[:n_train], perm[n_train:n_train + n_val_f], perm[n_train + n_val_f:])
    raise InvalidArgumentError(f"unknown sparse split mode {mode!r}")


def split_ratio(dataset: Dataset, train_frac: float, val_frac: float, seed: int = 0) -> Split:
    """Shuffle, then contiguous train/val slices of ``floor(frac * m)``; the rest is test."""
    if not (0 < train_frac < 1 and 0 < val_frac < 1 and train_frac + val_frac < 1):
        raise InvalidArgumentError(f"invalid split fractions {train_frac}/{val_frac}")
    m = dataset.n_nodes
    n_train, n_val = _floor_count(train_frac, m), _floor_count(val_frac, m)
    if n_train == 0 or n_val == 0 or m - n_train - n_val == 0:
        raise InvalidArgumentError(f"{m} nodes are too few for a {train_frac}/{val_frac} split")
    perm = np.random.default_rng(seed).permutation(m)
    return Split(perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:])


def parse_split(spec: str):
    """Validate a protocol string; returns ``(kind, fractions)``."""
    if spec == "citation":
        return "citation", ()
    if spec in ("sparse", "fraction"):
        return "fraction", ()
    if spec.startswith("ratio:"):
        try:
            a, b = (float(x) for x in spec[len("ratio:"):].split("/"))
        except ValueError:
            raise InvalidArgumentError(f"malformed ratio split {spec!r}; expected ratio:a/b") from None
        if not (0 < a < 1 and 0 < b < 1 and a + b < 1):
            raise InvalidArgumentError(f"invalid split fractions {a}/{b}")
        return "ratio", (a, b)
    raise InvalidArgumentError(f"unknown split protocol {spec!r}")


def make_split(dataset: Dataset, spec: str, seed: int = 0) -> Split:
    """Split from a protocol string: ``citation``, ``sparse`` or ``ratio:a/b``."""
    kind, fracs = parse_split(spec)
    if kind == "ratio":
        return split_ratio(dataset, *fracs, seed)
    return split_sparse(dataset, seed, kind)
