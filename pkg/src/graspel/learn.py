"""
Spectral densification: learn an ultra-sparse graph from data.

Start from a kNN graph, then repeatedly embed the graph with its Fiedler
vector, sample node pairs joining the two ends of the Fiedler ordering, and add
the pairs whose spectral embedding distortion is largest.  The loop stops once
no sampled pair has distortion above the tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from .eigen import ConvergenceError, build_subspace, distortions, objective_estimate, smallest_eigenpairs
from .graphcore import Z_DATA_FLOOR, DataMatrix, SparseGraph, build_laplacian, connected_components

log = logging.getLogger(__name__)

# spawn keys separating the random streams used by one learn call
_ITER_STREAM = 1
_STABILITY_STREAM = 2


@dataclass(frozen=True)
class LearnConfig:
    k_init: int = 2
    sigma: float = 1e3
    tol: float = 10.0
    eps: float = 0.05
    zeta: float = 0.001
    max_iter: int = 50
    r: int = 2
    sample_budget: Optional[int] = None  # None means 10 * n
    seed: int = 0
    # objective monitoring: None disables it, otherwise the number of eigenvalues used
    objective_rank: Optional[int] = None
    beta: float = 0.0

    def __post_init__(self):
        if not 0 < self.eps <= 0.5:
            raise ValueError(f"eps must lie in (0, 0.5], got {self.eps}")
        if not self.zeta > 0:
            raise ValueError(f"zeta must be positive, got {self.zeta}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.k_init < 1:
            raise ValueError(f"k_init must be >= 1, got {self.k_init}")
        if self.r < 2:
            raise ValueError(f"r must be >= 2, got {self.r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be >= 0, got {self.max_iter}")
        if self.sample_budget is not None and self.sample_budget < 1:
            raise ValueError("sample_budget must be positive")

    def budget(self, n):
        return 10 * n if self.sample_budget is None else self.sample_budget

    def edges_per_iter(self, n):
        return max(1, math.ceil(self.zeta * n - 1e-9))


@dataclass
class IterationRecord:
    iter: int
    eta_max: float
    edges_added: int
    components: int
    objective: Optional[float] = None

    def as_dict(self):
        d = asdict(self)
        if d["objective"] is None:
            del d["objective"]
        return d


@dataclass
class LearnTrace:
    """Per-iteration history.  Each record describes the graph as it was embedded
    at the start of that iteration, followed by the number of edges then added."""

    records: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    initial_edges: int = 0

    def __len__(self):
        return len(self.records)

    @property
    def eta_max(self):
        return [rec.eta_max for rec in self.records]

    @property
    def total_added(self):
        return sum(rec.edges_added for rec in self.records)


class LearnError(ConvergenceError):
    """Eigensolver failure inside the learning loop; carries the partial result."""

    def __init__(self, message, graph, trace):
        super().__init__(message)
        self.graph = graph
        self.trace = trace


@dataclass
class StabilityReport:
    eta_max: float
    num_candidates: int
    eigenvalues: np.ndarray
    gaps: np.ndarray


def center_rows(X):
    """Subtract each data point's mean over its features."""
    vals = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    return DataMatrix(vals - vals.mean(axis=1, keepdims=True), centered=True)


def _as_centered(X):
    if isinstance(X, DataMatrix) and X.centered:
        return X
    return center_rows(X)


def initial_knn_graph(X, k):
    """Symmetrized kNN graph with weights ``1 / z_data``.

    Neighbors are exact Euclidean neighbors from a KD-tree; an approximate
    backend could be substituted behind the same call.
    """
    vals = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    n, m = vals.shape
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of points n={n}")
    _, idx = cKDTree(vals).query(vals, k=k + 1)
    idx = np.asarray(idx).reshape(n, k + 1)
    g = SparseGraph(n)
    for i in range(n):
        nbrs = [j for j in idx[i].tolist() if j != i][:k]
        for j in nbrs:
            if not g.has_edge(i, j):
                z = float(np.sum((vals[i] - vals[j]) ** 2)) / m
                g.add_edge(i, j, 1.0 / max(z, Z_DATA_FLOOR))
    return g


def fiedler_order(g, seed=0):
    """Nodes sorted ascending by their Fiedler-vector entry."""
    if g.n < 2:
        raise ValueError("Fiedler ordering needs at least two nodes")
    eig = smallest_eigenpairs(build_laplacian(g), 2, seed=seed)
    return np.argsort(eig.eigenvectors[:, 1], kind="stable")


def window_size(n, eps):
    return min(n // 2, max(1, math.ceil(eps * n - 1e-9)))


def generate_candidates(order, eps, sample_budget, existing, seed=0):
    """Sample node pairs joining the top and bottom ``eps`` windows of ``order``.

    Parameters
    ----------
    order : (n,) int array
        Node permutation, e.g. from :func:`fiedler_order`.
    eps : float
        Window fraction.
    sample_budget : int
        Maximum number of pairs returned.
    existing : SparseGraph or set of (u, v)
        Pairs already present; these are never proposed.
    seed : int, SeedSequence or Generator

    Returns
    -------
    P, Q : int arrays
        ``P[i]`` from the top window, ``Q[i]`` from the bottom one.
    """
    order = np.asarray(order)
    n = order.shape[0]
    w = window_size(n, eps)
    if w == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    top, bottom = order[n - w:], order[:w]
    has = existing.has_edge if isinstance(existing, SparseGraph) else (lambda a, b: (min(a, b), max(a, b)) in existing)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    top_set, bottom_set = set(top.tolist()), set(bottom.tolist())
    if isinstance(existing, SparseGraph):
        pairs = existing.edge_set()
    else:
        pairs = existing
    blocked = sum(1 for a, b in pairs if (a in top_set and b in bottom_set) or (b in top_set and a in bottom_set))

    total = w * w
    draw = min(total, sample_budget + blocked)
    idx = rng.choice(total, size=draw, replace=False)
    P, Q = top[idx // w], bottom[idx % w]
    keep = np.fromiter((not has(a, b) for a, b in zip(P.tolist(), Q.tolist())), dtype=bool, count=draw)
    P, Q = P[keep][:sample_budget], Q[keep][:sample_budget]
    return P.astype(np.int64), Q.astype(np.int64)


def _iteration_rng(seed, it):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_ITER_STREAM, it)))


def _score_window(g, X, cfg, eig_seed, rng):
    """Embed ``g`` and score a candidate sample.  Returns ``(emb, P, Q, z_data, eta)``."""
    L = build_laplacian(g)
    emb = build_subspace(smallest_eigenpairs(L, min(cfg.r, g.n), seed=eig_seed), cfg.sigma)
    order = np.argsort(emb.eigenvectors[:, 1], kind="stable")
    P, Q = generate_candidates(order, cfg.eps, cfg.budget(g.n), g, seed=rng)
    if len(P) == 0:
        return emb, P, Q, np.zeros(0), np.zeros(0)
    _, z_data, eta = distortions(emb, X, P, Q)
    return emb, P, Q, z_data, eta


def _objective(g, X, cfg, seed):
    L = build_laplacian(g)
    rank = min(cfg.objective_rank, g.n)
    lam = smallest_eigenpairs(L, rank, seed=seed).eigenvalues
    return objective_estimate(lam, X, L, cfg.sigma, cfg.beta)


def graspel_learn(X, cfg=None):
    """Learn a sparse graph from the rows of ``X``.

    Parameters
    ----------
    X : DataMatrix or (n, m) array
        Data points as rows.  Rows are mean-centered unless ``X`` is already a
        centered ``DataMatrix``.
    cfg : LearnConfig, optional

    Returns
    -------
    graph : SparseGraph
    trace : LearnTrace
    """
    cfg = cfg or LearnConfig()
    X = _as_centered(X)
    n = X.n
    if n < max(cfg.k_init + 1, 3):
        raise ValueError(f"need at least {max(cfg.k_init + 1, 3)} data points, got {n}")

    g = initial_knn_graph(X, cfg.k_init)
    trace = LearnTrace(initial_edges=g.num_edges)
    per_iter = cfg.edges_per_iter(n)

    for it in range(1, cfg.max_iter + 1):
        rng = _iteration_rng(cfg.seed, it)
        eig_seed = np.random.SeedSequence(cfg.seed, spawn_key=(_ITER_STREAM, it, 0))
        try:
            _, P, Q, z_data, eta = _score_window(g, X, cfg, eig_seed, rng)
            objective = _objective(g, X, cfg, eig_seed) if cfg.objective_rank else None
        except ConvergenceError as err:
            raise LearnError(f"iteration {it}: {err}", g, trace) from err
        components = connected_components(g)[0]

        if len(P) == 0:
            trace.records.append(IterationRecord(it, 0.0, 0, components, objective))
            trace.converged = True
            break

        ranked = np.argsort(-eta, kind="stable")
        chosen = [i for i in ranked[:per_iter] if eta[i] > cfg.tol]
        for i in chosen:
            g.add_edge(P[i], Q[i], 1.0 / max(z_data[i], Z_DATA_FLOOR))
        eta_max = float(eta[ranked[0]])
        trace.records.append(IterationRecord(it, eta_max, len(chosen), components, objective))
        log.debug("iter %d: eta_max=%.4g added=%d components=%d", it, eta_max, len(chosen), components)
        if not chosen:
            trace.converged = True
            break

    return g, trace


def stability_report(g, X, cfg=None, r_trunc=50):
    """Post-hoc spectral stability check on a learned graph.

    Draws a fresh candidate sample (independent of the learning iterations) and
    reports its maximum distortion, together with the first ``r_trunc``
    Laplacian eigenvalues and their consecutive gaps.
    """
    cfg = cfg or LearnConfig()
    X = _as_centered(X)
    seq = np.random.SeedSequence(cfg.seed, spawn_key=(_STABILITY_STREAM,))
    rng = np.random.default_rng(seq)
    _, P, _, _, eta = _score_window(g, X, cfg, seq, rng)
    lam = smallest_eigenpairs(build_laplacian(g), min(r_trunc, g.n), seed=seq).eigenvalues
    return StabilityReport(
        eta_max=float(eta.max()) if len(eta) else 0.0,
        num_candidates=int(len(P)),
        eigenvalues=lam,
        gaps=np.diff(lam),
    )
