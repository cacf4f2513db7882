"""
Sparse undirected weighted graphs, Laplacian assembly and small exact oracles.

Edges are stored canonically as ``(u, v)`` with ``u < v``.  Every weight is
strictly positive and finite.  The Laplacian is returned as a
``scipy.sparse.csr_matrix``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.csgraph as csgraph

# floor applied to squared data distances before taking reciprocals
Z_DATA_FLOOR = 1e-12

# eigenvalues below this (relative to the largest degree) count as zero
ZERO_EIG_TOL = 1e-8


class GraphFormatError(ValueError):
    """Raised when an edge-list file cannot be parsed."""


class DisconnectedError(ValueError):
    """Raised when a quantity is infinite because two nodes are not connected."""


class SparseGraph:
    """Undirected weighted graph on ``n`` nodes.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : iterable of (u, v, w), optional
        Initial edges.  Endpoint order does not matter.
    """

    def __init__(self, n, edges=()):
        if n < 0:
            raise ValueError("node count must be non-negative")
        self.n = int(n)
        self._w = {}
        self._cache = None
        for u, v, w in edges:
            self.add_edge(u, v, w)

    @staticmethod
    def _key(u, v):
        u, v = int(u), int(v)
        return (u, v) if u < v else (v, u)

    def add_edge(self, u, v, w):
        """Insert edge ``(u, v)`` with weight ``w``; duplicates are rejected."""
        u, v = self._key(u, v)
        if u == v:
            raise ValueError(f"self-loop at node {u}")
        if u < 0 or v >= self.n:
            raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
        w = float(w)
        if not (np.isfinite(w) and w > 0):
            raise ValueError(f"edge ({u}, {v}) has invalid weight {w!r}")
        if (u, v) in self._w:
            raise ValueError(f"duplicate edge ({u}, {v})")
        self._w[(u, v)] = w
        self._cache = None

    def has_edge(self, u, v):
        return self._key(u, v) in self._w

    def weight(self, u, v):
        return self._w[self._key(u, v)]

    @property
    def num_edges(self):
        return len(self._w)

    @property
    def density(self):
        """|E| / |V|."""
        return self.num_edges / self.n if self.n else 0.0

    def edge_arrays(self):
        """Return ``(u, v, w)`` arrays sorted by ``(u, v)``."""
        if self._cache is None:
            keys = sorted(self._w)
            if keys:
                uv = np.array(keys, dtype=np.int64)
                w = np.array([self._w[k] for k in keys], dtype=np.float64)
            else:
                uv = np.zeros((0, 2), dtype=np.int64)
                w = np.zeros(0, dtype=np.float64)
            self._cache = (uv[:, 0].copy(), uv[:, 1].copy(), w)
        return self._cache

    def edges(self):
        u, v, w = self.edge_arrays()
        return list(zip(u.tolist(), v.tolist(), w.tolist()))

    def edge_set(self):
        return set(self._w)

    def copy(self):
        g = SparseGraph(self.n)
        g._w = dict(self._w)
        return g

    def adjacency(self):
        """Symmetric weighted adjacency as CSR."""
        u, v, w = self.edge_arrays()
        W = sparse.coo_matrix((w, (u, v)), shape=(self.n, self.n))
        return (W + W.T).tocsr()

    def __eq__(self, other):
        return isinstance(other, SparseGraph) and self.n == other.n and self._w == other._w

    def __repr__(self):
        return f"SparseGraph(n={self.n}, edges={self.num_edges})"


@dataclass(frozen=True)
class DataMatrix:
    """N x M data; rows are data points, columns are graph signals."""

    values: np.ndarray
    centered: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError("data matrix must be two-dimensional")
        if self.centered and vals.size:
            worst = float(np.abs(vals.sum(axis=1)).max())
            if worst > 1e-8 * max(1.0, np.abs(vals).max()) * vals.shape[1]:
                raise ValueError(f"rows flagged centered but a row sums to {worst:.3g}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]


def as_array(X):
    if isinstance(X, DataMatrix):
        return X.values
    return np.asarray(X, dtype=np.float64)


def build_laplacian(g):
    """L = D - W as a CSR matrix, assembled from sum_e w_e e_pq e_pq^T."""
    n = g.n
    u, v, w = g.edge_arrays()
    rows = np.concatenate([u, v, u, v])
    cols = np.concatenate([u, v, v, u])
    vals = np.concatenate([w, w, -w, -w])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def quadratic_form(L, x):
    """x^T L x for a Laplacian ``L``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (L.shape[0],):
        raise ValueError(f"vector of length {x.shape} does not match n={L.shape[0]}")
    return float(x @ (L @ x))


def edge_quadratic_form(g, x):
    """sum_(p,q) w_pq (x_p - x_q)^2, evaluated edge by edge."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.n,):
        raise ValueError(f"vector of length {x.shape} does not match n={g.n}")
    u, v, w = g.edge_arrays()
    return float(np.sum(w * (x[u] - x[v]) ** 2))


def smoothness(L, X):
    """Tr(X^T L X), the total Laplacian quadratic form over the columns of X."""
    X = as_array(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != L.shape[0]:
        raise ValueError(f"data has {X.shape[0]} rows, graph has {L.shape[0]} nodes")
    return float(np.sum(X * (L @ X)))


def connected_components(g):
    """Return ``(count, labels)``."""
    count, labels = csgraph.connected_components(g.adjacency(), directed=False)
    return int(count), labels


def effective_resistance_exact(g, p, q):
    """e_pq^T L^+ e_pq via a dense pseudoinverse.  Intended for small graphs."""
    if p == q:
        return 0.0
    _, labels = connected_components(g)
    if labels[p] != labels[q]:
        raise DisconnectedError(f"nodes {p} and {q} lie in different components")
    Lp = scipy.linalg.pinvh(build_laplacian(g).toarray())
    return float(Lp[p, p] + Lp[q, q] - 2.0 * Lp[p, q])


def read_edge_list(path):
    """Parse a ``#nodes <n>`` headed, tab-separated edge list."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise GraphFormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "#nodes":
        raise GraphFormatError(f"{path}:1: expected '#nodes <n>' header")
    try:
        n = int(head[1])
    except ValueError:
        raise GraphFormatError(f"{path}:1: bad node count {head[1]!r}") from None
    g = SparseGraph(n)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise GraphFormatError(f"{path}:{lineno}: expected 'u<TAB>v<TAB>w'")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: non-numeric field") from None
        if u >= v:
            raise GraphFormatError(f"{path}:{lineno}: edges must satisfy u < v")
        try:
            g.add_edge(u, v, w)
        except ValueError as err:
            raise GraphFormatError(f"{path}:{lineno}: {err}") from None
    return g


def write_edge_list(g, path):
    with open(path, "w") as fh:
        fh.write(f"#nodes {g.n}\n")
        for u, v, w in g.edges():
            fh.write(f"{u}\t{v}\t{w!r}\n")
