"""
Graph recovery at desk scale: ground-truth graph generators, smooth-signal
sampling from the attractive GMRF, and edge-set recovery metrics.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from .cluster import nmi
from .graphcore import DataMatrix, SparseGraph, build_laplacian
from .learn import LearnConfig, center_rows, graspel_learn, initial_knn_graph


@dataclass
class RecoveryReport:
    precision: float
    recall: float
    f_measure: float
    nmi_edges: float
    true_edges: int
    learned_edges: int
    common_edges: int

    def as_dict(self):
        return asdict(self)


def gen_gaussian_graph(n, theta=0.5, kappa=0.75, seed=0):
    """Random geometric graph in the unit square with Gaussian RBF weights.

    Every pair gets ``w = exp(-d^2 / (2 theta^2))``; pairs with ``w >= kappa``
    are kept.  Returns ``(graph, coordinates)``.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, 1.0, size=(n, 2))
    iu, ju = np.triu_indices(n, k=1)
    d2 = np.sum((xy[iu] - xy[ju]) ** 2, axis=1)
    w = np.exp(-d2 / (2.0 * theta**2))
    keep = w >= kappa
    g = SparseGraph(n, zip(iu[keep].tolist(), ju[keep].tolist(), w[keep].tolist()))
    if g.num_edges == 0:
        warnings.warn(f"kappa={kappa} removed every edge", RuntimeWarning, stacklevel=2)
    return g, xy


def gen_er_graph(n, p, seed=0):
    """Erdos-Renyi graph with unit weights."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.uniform(size=iu.shape[0]) < p
    return SparseGraph(n, ((a, b, 1.0) for a, b in zip(iu[keep].tolist(), ju[keep].tolist())))


def sample_smooth_signals(L, sigma, m, seed=0):
    """``m`` i.i.d. columns from N(0, (L + I/sigma^2)^-1).

    White noise is filtered by ``(lambda_i + 1/sigma^2)^(-1/2)`` in the Laplacian
    eigenbasis.  Dense, so meant for a few hundred nodes at most.
    """
    L = L.toarray() if hasattr(L, "toarray") else np.asarray(L, dtype=np.float64)
    lam, V = scipy.linalg.eigh(L)
    lam = np.maximum(lam, 0.0)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((L.shape[0], m))
    X = V @ (Z / np.sqrt(lam + 1.0 / sigma**2)[:, None])
    return DataMatrix(X, centered=False)


def edge_set_metrics(learned, truth):
    """Precision, recall, F-measure and pair-indicator NMI of ``learned`` against ``truth``."""
    if learned.n != truth.n:
        raise ValueError(f"graphs differ in size: {learned.n} vs {truth.n}")
    el, et = learned.edge_set(), truth.edge_set()
    common = len(el & et)
    precision = common / len(el) if el else 0.0
    recall = common / len(et) if et else 0.0
    f = 2 * precision * recall / (precision + recall) if precision > 0 and recall > 0 else 0.0

    n = truth.n
    npairs = n * (n - 1) // 2

    def indicator(edges):
        lab = np.zeros(npairs, dtype=np.int8)
        if edges:
            a, b = np.array(sorted(edges)).T
            # row-major index of (a, b), a < b, in the strict upper triangle
            lab[a * n - a * (a + 1) // 2 + (b - a - 1)] = 1
        return lab

    return RecoveryReport(
        precision=precision,
        recall=recall,
        f_measure=f,
        nmi_edges=nmi(indicator(el), indicator(et)) if npairs else 0.0,
        true_edges=len(et),
        learned_edges=len(el),
        common_edges=common,
    )


def recovery_trial(kind, n, m, cfg=None, seed=0, theta=0.5, kappa=0.75, p=0.1, signal_sigma=None):
    """One recovery run: generate a truth graph, sample signals, learn, score."""
    cfg = cfg or LearnConfig()
    ss = np.random.SeedSequence(seed)
    graph_seed, signal_seed = ss.spawn(2)
    if kind == "gaussian":
        truth, _ = gen_gaussian_graph(n, theta, kappa, seed=graph_seed)
    elif kind == "er":
        truth = gen_er_graph(n, p, seed=graph_seed)
    else:
        raise ValueError(f"unknown graph kind {kind!r}")
    sig = cfg.sigma if signal_sigma is None else signal_sigma
    X = sample_smooth_signals(build_laplacian(truth), sig, m, seed=signal_seed)
    if n < max(cfg.k_init + 1, 3):
        learned = _tiny_learn(X, cfg)
    else:
        learned, _ = graspel_learn(X, cfg)
    return edge_set_metrics(learned, truth)


def _tiny_learn(X, cfg):
    # too few points for the learning loop: the kNN start is the answer
    Xc = center_rows(X)
    return initial_knn_graph(Xc, min(cfg.k_init, Xc.n - 1))


METRICS = ("precision", "recall", "f_measure", "nmi_edges")


def recovery_experiment(kind, n, m, cfg=None, seed=0, trials=20, **kwargs):
    """Repeat :func:`recovery_trial` and aggregate with mean and sample std.

    Returns a dict with ``trials`` (list of per-trial metric dicts), ``mean``
    and ``std``.
    """
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    reports = [recovery_trial(kind, n, m, cfg, seed=int(s), **kwargs) for s in seeds]
    table = np.array([[getattr(r, k) for k in METRICS] for r in reports])
    ddof = 1 if trials > 1 else 0
    return {
        "trials": [r.as_dict() for r in reports],
        "mean": dict(zip(METRICS, table.mean(axis=0).tolist())),
        "std": dict(zip(METRICS, table.std(axis=0, ddof=ddof).tolist())),
    }
