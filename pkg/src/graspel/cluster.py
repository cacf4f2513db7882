"""Spectral clustering with the unnormalized Laplacian, and clustering metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .eigen import count_zero_eigenvalues, smallest_eigenpairs
from .graphcore import build_laplacian, connected_components

KMEANS_MAX_ITER = 300
KMEANS_RESTARTS = 10


@dataclass
class ClusterResult:
    labels: np.ndarray
    k: int
    inertia: float
    empty_cluster: bool = False


def _kmeans_pp(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _sq_dists(points, centers):
    return np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)


def _lloyd(points, centers, max_iter=KMEANS_MAX_ITER):
    k = centers.shape[0]
    labels = np.argmin(_sq_dists(points, centers), axis=1)
    history = []
    empty = False
    for _ in range(max_iter):
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = points[members].mean(axis=0)
            else:
                empty = True  # centroid kept where it was
        d = _sq_dists(points, centers)
        history.append(float(d[np.arange(len(labels)), labels].sum()))
        new = np.argmin(d, axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
    inertia = float(np.sum((points - centers[labels]) ** 2))
    history.append(inertia)
    return labels, inertia, empty, history


def kmeans(points, k, seed=0, restarts=KMEANS_RESTARTS):
    """Lloyd's algorithm from k-means++ seeds; the best of ``restarts`` runs is kept.

    Parameters
    ----------
    points : (n, d) array
    k : int
        Number of clusters, ``k <= n``.
    seed : int
    restarts : int

    Returns
    -------
    ClusterResult
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, inertia, empty, _ = _lloyd(points, _kmeans_pp(points, k, rng))
        if best is None or inertia < best.inertia:
            best = ClusterResult(labels=labels, k=k, inertia=inertia, empty_cluster=empty)
    return best


def spectral_features(g, k, seed=0):
    """Rows of the eigenvector block that :func:`spectral_clustering` partitions.

    Uses the eigenvectors of the ``k`` smallest nonzero Laplacian eigenvalues
    when ``g`` is connected.  On a graph with ``c > 1`` components the
    null-space eigenvectors are kept as well (the first ``max(k, c)``
    eigenvectors), since dropping them discards the component structure.
    """
    n = g.n
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    c, _ = connected_components(g)
    L = build_laplacian(g)
    if c == 1:
        return smallest_eigenpairs(L, min(n, k + 1), seed=seed).eigenvectors[:, 1:]
    return smallest_eigenpairs(L, min(n, max(k, c)), seed=seed).eigenvectors


def spectral_clustering(g, k, seed=0):
    """Unnormalized spectral clustering of the nodes of ``g`` into ``k`` groups."""
    return kmeans(spectral_features(g, k, seed), k, seed=seed)


def hungarian(cost):
    """Minimum-cost perfect assignment on a square cost matrix.

    Returns ``assign`` with row ``i`` matched to column ``assign[i]``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("hungarian needs a square cost matrix")
    rows, cols = linear_sum_assignment(cost)
    assign = np.empty(cost.shape[0], dtype=np.int64)
    assign[rows] = cols
    return assign


def _contingency(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"label arrays differ in length: {pred.shape} vs {truth.shape}")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    C = np.zeros((pi.max(initial=-1) + 1, ti.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(C, (pi, ti), 1)
    return C


def accuracy(pred, truth):
    """Fraction of points matched under the best one-to-one relabeling of clusters."""
    C = _contingency(pred, truth)
    if C.size == 0:
        return 1.0
    size = max(C.shape)
    square = np.zeros((size, size), dtype=np.int64)
    square[: C.shape[0], : C.shape[1]] = C
    assign = hungarian(-square)
    return float(square[np.arange(size), assign].sum()) / C.sum()


def nmi(pred, truth):
    """Normalized mutual information I / sqrt(H_pred * H_truth), natural logs.

    Returns 0 if either partition has a single cluster.
    """
    C = _contingency(pred, truth).astype(np.float64)
    n = C.sum()
    if n == 0:
        return 0.0
    a = C.sum(axis=1)
    b = C.sum(axis=0)
    ha = -np.sum(a * np.log(a / n))
    hb = -np.sum(b * np.log(b / n))
    if ha <= 0 or hb <= 0:
        return 0.0
    nz = C > 0
    mi = np.sum(C[nz] * np.log(n * C[nz] / np.outer(a, b)[nz]))
    return float(min(1.0, max(0.0, mi / np.sqrt(ha * hb))))


def eigengap_dimension(eigenvalues, max_k=100, scale=1.0):
    """Number of eigenvalues before the largest gap.

    The search covers the gap following the last zero eigenvalue and the gaps
    among the next ``max_k`` nonzero eigenvalues.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    c = count_zero_eigenvalues(lam, scale)
    hi = min(len(lam), c + max_k)
    lo = max(c, 1)
    gaps = np.diff(lam[lo - 1 : hi])
    if gaps.size == 0:
        return c
    return int(lo + np.argmax(gaps))
