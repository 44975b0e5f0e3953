"""Undirected graphs, generalized symmetric normalization and homophily."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .linalg import SparseMatrix

__all__ = [
    "Graph",
    "NormalizationConfig",
    "normalized_adjacency",
    "pc_laplacian",
    "standard_laplacian",
    "edge_homophily",
    "psd_feasible_p",
    "FeasibleInterval",
]


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph stored as a sorted ``(E, 2)`` array with ``u < v``."""

    n_nodes: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.n_nodes < 0:
            raise InvalidArgumentError("n_nodes must be non-negative")
        if len(e):
            if e.min() < 0 or e.max() >= self.n_nodes:
                raise InvalidArgumentError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise InvalidArgumentError("self-loops are not allowed in a Graph")
            if np.any(e[:, 0] > e[:, 1]) or len(np.unique(e, axis=0)) != len(e):
                raise InvalidArgumentError("edges must be deduplicated with u < v; use Graph.from_edges")
        e = np.ascontiguousarray(e)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "Graph":
        """Canonicalize an arbitrary edge list: orient ``u < v``, drop duplicates."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(e) and np.any(e[:, 0] == e[:, 1]):
            raise InvalidArgumentError("self-loops are not allowed in a Graph")
        e = np.sort(e, axis=1)
        if len(e):
            e = np.unique(e, axis=0)
        return cls(int(n_nodes), e)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes).astype(np.float64)

    def adjacency(self) -> SparseMatrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        return SparseMatrix.from_coo(rows, cols, np.ones(len(rows)), (self.n_nodes, self.n_nodes), symmetric=True)


@dataclass(frozen=True)
class NormalizationConfig:
    eta: float = 0.5
    p: float = 2.0
    t: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidArgumentError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.p >= 2.0:
            raise InvalidArgumentError(f"p must be >= 2, got {self.p}")
        if self.t is not None and not self.t > 0:
            raise InvalidArgumentError(f"t must be positive, got {self.t}")


def _normalized_parts(G: Graph, eta: float):
    scale = (G.degrees() + 1.0) ** (-float(eta))
    u, v = G.edges[:, 0], G.edges[:, 1]
    return u, v, scale[u] * scale[v], scale * scale


def normalized_adjacency(G: Graph, eta: float = 0.5) -> SparseMatrix:
    """``(D+I)^-eta (A+I) (D+I)^-eta`` with degrees taken from the stored edges."""
    u, v, w, self_w = _normalized_parts(G, eta)
    nodes = np.arange(G.n_nodes)
    rows = np.concatenate([u, v, nodes])
    cols = np.concatenate([v, u, nodes])
    vals = np.concatenate([w, w, self_w])
    return SparseMatrix.from_coo(rows, cols, vals, (G.n_nodes, G.n_nodes), symmetric=True)


def pc_laplacian(G: Graph, cfg: NormalizationConfig | None = None) -> SparseMatrix:
    """``(p - 1) I - normalized_adjacency(G, eta)``.

    The diagonal is formed as ``(1 - a_ii) + (p - 2)`` so that changing ``p``
    shifts the matrix by exactly ``(p - 2) I``.  For ``eta = 0.5`` this is the
    standard normalized Laplacian plus ``(p - 2) I``.
    """
    cfg = cfg or NormalizationConfig()
    u, v, w, self_w = _normalized_parts(G, cfg.eta)
    nodes = np.arange(G.n_nodes)
    rows = np.concatenate([u, v, nodes])
    cols = np.concatenate([v, u, nodes])
    vals = np.concatenate([-w, -w, (1.0 - self_w) + (cfg.p - 2.0)])
    return SparseMatrix.from_coo(rows, cols, vals, (G.n_nodes, G.n_nodes), symmetric=True)


def standard_laplacian(G: Graph) -> SparseMatrix:
    """``I - (D+I)^-1/2 (A+I) (D+I)^-1/2``."""
    return pc_laplacian(G, NormalizationConfig(eta=0.5, p=2.0))


def edge_homophily(G: Graph, labels) -> float:
    """Fraction of edges whose endpoints carry the same label."""
    labels = np.asarray(labels)
    if labels.shape != (G.n_nodes,):
        raise InvalidArgumentError(f"expected {G.n_nodes} labels, got shape {labels.shape}")
    if G.n_edges == 0:
        raise InvalidArgumentError("edge homophily is undefined for a graph without edges")
    same = labels[G.edges[:, 0]] == labels[G.edges[:, 1]]
    return float(np.count_nonzero(same)) / G.n_edges


@dataclass(frozen=True)
class FeasibleInterval:
    """Half-open interval ``[lower, upper)``."""

    lower: float
    upper: float

    @property
    def empty(self) -> bool:
        return not self.upper > self.lower

    def __contains__(self, p) -> bool:
        return self.lower <= p < self.upper


def psd_feasible_p(t: float, alpha1: float) -> FeasibleInterval:
    """Self-loop weights ``p`` keeping both two-fold energy functions PSD on [0, 2).

    The homophilic energy ``p - 2 + lam`` needs ``p >= 2``; the heterophilic one
    ``exp(-t (p - 2 + lam)) - alpha1`` needs ``p < -ln(alpha1) / t``.
    """
    if not t > 0:
        raise InvalidArgumentError(f"t must be positive, got {t}")
    if not 0.0 < alpha1 < 1.0:
        raise InvalidArgumentError(f"alpha1 must lie in (0, 1), got {alpha1}")
    return FeasibleInterval(2.0, -math.log(alpha1) / t)
