"""
Tree-plus-critical-edges spectral sparsifier for turning kNN graphs into
ultra-sparse ones.

Edges are scored by approximate leverage ``w_e * R_e``.  Effective resistances
come from a truncated, sigma-weighted spectral embedding.  A maximum-score
spanning forest is kept as the backbone.  Off-forest edges are then added in a
few rounds, each round taking the edges with the largest leverage measured
against the sparsifier built so far.  A final uniform rescale makes the total
edge weight (the Laplacian trace) equal to the input's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.csgraph import minimum_spanning_tree

from .eigen import embed, embedding_distances
from .graphcore import SparseGraph, connected_components


@dataclass(frozen=True)
class SparsifyConfig:
    target_density: float = 1.2
    r: Optional[int] = None  # None means min(50, n)
    sigma: float = 1e9
    rounds: int = 16
    seed: int = 0


def approx_leverage_scores(g, emb):
    """``w_e * ||U^T e_pq||^2`` for every edge of ``g``, in ``edge_arrays`` order."""
    u, v, w = g.edge_arrays()
    return w * embedding_distances(emb, u, v)


def _max_score_forest(n, u, v, scores):
    tiny = np.finfo(np.float64).tiny
    # scores are positive, so a minimum forest on reciprocals maximizes them
    cost = sparse.coo_matrix((1.0 / np.maximum(scores, tiny), (u, v)), shape=(n, n)).tocsr()
    T = minimum_spanning_tree(cost).tocoo()
    tree = {(min(a, b), max(a, b)) for a, b in zip(T.row.tolist(), T.col.tolist())}
    return np.array([(a, b) in tree for a, b in zip(u.tolist(), v.tolist())], dtype=bool)


def spectral_sparsify(g, cfg=None):
    """Sparsify ``g`` to ``round(cfg.target_density * n)`` edges.

    Connectivity is preserved because a spanning forest is always kept, so
    densities below ``(n - c) / n`` for ``c`` components are rejected.  A graph
    already at or below the target is returned unchanged.
    """
    cfg = cfg or SparsifyConfig()
    n = g.n
    c, _ = connected_components(g)
    if cfg.target_density < (n - c) / n - 1e-12:
        raise ValueError(f"target density {cfg.target_density} is below a spanning forest ({(n - c) / n:.4f})")
    target = max(n - c, int(round(cfg.target_density * n)))
    if g.num_edges <= target:
        return g.copy()

    r = min(n, cfg.r if cfg.r is not None else 50)
    u, v, w = g.edge_arrays()
    scores = approx_leverage_scores(g, embed(g, r, cfg.sigma, seed=cfg.seed))
    keep = _max_score_forest(n, u, v, scores)

    budget = target - int(keep.sum())
    batch = max(1, math.ceil(budget / max(1, cfg.rounds)))
    rnd = 0
    while budget > 0:
        rnd += 1
        current = SparseGraph(n, zip(u[keep].tolist(), v[keep].tolist(), w[keep].tolist()))
        emb = embed(current, r, cfg.sigma, seed=(cfg.seed, rnd))
        off = np.flatnonzero(~keep)
        crit = w[off] * embedding_distances(emb, u[off], v[off])
        take = off[np.argsort(-crit, kind="stable")[: min(batch, budget)]]
        keep[take] = True
        budget -= len(take)

    scale = w.sum() / w[keep].sum()
    return SparseGraph(n, zip(u[keep].tolist(), v[keep].tolist(), (w[keep] * scale).tolist()))
