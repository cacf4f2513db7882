"""
Smallest Laplacian eigenpairs, sigma-weighted spectral embeddings, embedding
distortion, and the log-det objective with its edge-weight gradient.

The null space of the Laplacian is handled combinatorially.  Its first basis
vector is always the normalized constant vector.  Further null vectors come
from seeded random vectors projected onto the span of the component
indicators.  The nonzero part of the spectrum is computed on the orthogonal
complement of the null space, either densely (small graphs) or with Lanczos on
a shifted inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as splinalg

from .graphcore import Z_DATA_FLOOR, ZERO_EIG_TOL, as_array, build_laplacian, smoothness

DENSE_CUTOFF = 512


class ConvergenceError(RuntimeError):
    """The iterative eigensolver did not reach the residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass
class SpectralEmbedding:
    """First ``r`` Laplacian eigenpairs, optionally with the weighted subspace.

    Attributes
    ----------
    eigenvalues : (r,) ndarray
        Ascending; the first is exactly zero.
    eigenvectors : (n, r) ndarray
        Orthonormal columns, sign-fixed so the largest-magnitude entry is positive.
    sigma : float or None
        Prior feature standard deviation used to build ``U``.
    U : (n, r-1) ndarray or None
        Column ``i-1`` is ``u_i / sqrt(lambda_i + 1/sigma**2)`` for ``i = 2..r``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sigma: Optional[float] = None
    U: Optional[np.ndarray] = None

    @property
    def r(self):
        return len(self.eigenvalues)

    @property
    def n(self):
        return self.eigenvectors.shape[0]


@dataclass(frozen=True)
class CandidateEdge:
    p: int
    q: int
    z_data: float
    z_emb: float
    eta: float


def _fix_signs(V):
    # first entry within rounding of the largest magnitude is made positive
    mags = np.abs(V)
    for j in range(V.shape[1]):
        col = mags[:, j]
        idx = int(np.argmax(col >= col.max() * (1.0 - 1e-9)))
        if V[idx, j] < 0:
            V[:, j] = -V[:, j]
    return V


def _null_basis(labels, count, k, rng):
    """``k`` orthonormal vectors spanning part of the Laplacian null space."""
    n = labels.shape[0]
    ind = np.zeros((n, count))
    ind[np.arange(n), labels] = 1.0
    ind /= np.sqrt(ind.sum(axis=0))
    cols = [np.full(n, 1.0 / np.sqrt(n))]
    if k > 1:
        R = rng.standard_normal((n, k - 1))
        cols.extend((ind @ (ind.T @ R)).T)
    Q, _ = np.linalg.qr(np.column_stack(cols))
    return Q, ind


def _rayleigh_ritz(L, V):
    V, _ = np.linalg.qr(V)
    H = V.T @ (L @ V)
    vals, W = scipy.linalg.eigh((H + H.T) / 2.0)
    return vals, V @ W


def smallest_eigenpairs(L, r, seed=0, dense_cutoff=DENSE_CUTOFF):
    """The ``r`` algebraically smallest eigenpairs of a graph Laplacian.

    Parameters
    ----------
    L : sparse matrix
        Graph Laplacian.
    r : int
        Number of eigenpairs, ``1 <= r <= n``.
    seed : int
        Seeds the null-space basis choice and the Lanczos start vector.
    dense_cutoff : int
        Graphs with at most this many nodes use a dense decomposition.

    Returns
    -------
    SpectralEmbedding
        Raw eigenpairs; ``U`` is not populated.
    """
    L = sparse.csr_matrix(L)
    n = L.shape[0]
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={n}")
    rng = np.random.default_rng(seed)
    count, labels = csgraph.connected_components(L, directed=False)
    k_null = min(r, count)
    Q0, ind = _null_basis(labels, count, k_null, rng)
    k = r - k_null

    vals = np.zeros(k_null)
    vecs = Q0
    if k > 0:
        scale = float(L.diagonal().max())
        n_free = n - count
        if n <= dense_cutoff or k >= n_free - 1:
            # L ind = 0, so adding a multiple of ind ind^T only lifts the null block
            lift = 2.0 * (2.0 * scale) + 1.0
            B = L.toarray() + lift * (ind @ ind.T)
            mu, W = scipy.linalg.eigh(B, subset_by_index=[0, k - 1])
        else:
            mu, W = _lanczos_complement(L, ind, k, scale, rng)
        mu = np.maximum(mu, 0.0)
        vals = np.concatenate([vals, mu])
        vecs = np.column_stack([Q0, W])

    vecs = _fix_signs(vecs)
    emb = SpectralEmbedding(eigenvalues=vals, eigenvectors=vecs)
    res = residuals(L, emb)
    tol = 1e-6 * max(1.0, float(vals[-1])) + 1e-12 * float(L.diagonal().max(initial=0.0))
    if res.size and res.max() > tol:
        raise ConvergenceError(
            f"eigenpair residual {res.max():.3e} exceeds tolerance {tol:.3e}", residual=float(res.max())
        )
    return emb


def _lanczos_complement(L, ind, k, scale, rng):
    n = L.shape[0]
    shift = 1e-8 * scale
    lu = splinalg.splu(sparse.csc_matrix(L + shift * sparse.identity(n)))

    def project(x):
        return x - ind @ (ind.T @ x)

    op = splinalg.LinearOperator((n, n), matvec=lambda x: project(lu.solve(project(np.ravel(x)))), dtype=np.float64)
    v0 = project(rng.standard_normal(n))
    ncv = min(n - 1, max(2 * k + 1, 20))
    try:
        _, V = splinalg.eigsh(op, k=k, which="LA", v0=v0, ncv=ncv, tol=0, maxiter=50 * n)
    except splinalg.ArpackNoConvergence as err:
        raise ConvergenceError(f"Lanczos did not converge: {err}") from err
    mu, W = _rayleigh_ritz(L, project(V))
    return mu, W


def residuals(L, emb):
    """||L u_i - lambda_i u_i||_2 for each held eigenpair."""
    V = emb.eigenvectors
    return np.linalg.norm(L @ V - V * emb.eigenvalues, axis=0)


def count_zero_eigenvalues(eigenvalues, scale=1.0):
    """Eigenvalues below ``ZERO_EIG_TOL`` after dividing by ``scale`` (largest degree)."""
    scale = scale if scale > 0 else 1.0
    return int(np.sum(np.asarray(eigenvalues) / scale < ZERO_EIG_TOL))


def build_subspace(eig, sigma):
    """Populate ``U`` with the sigma-weighted nontrivial eigenvectors."""
    if eig.r < 2:
        raise ValueError("subspace needs at least two eigenpairs")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    lam = eig.eigenvalues[1:]
    U = eig.eigenvectors[:, 1:] / np.sqrt(lam + 1.0 / sigma**2)
    return SpectralEmbedding(eig.eigenvalues, eig.eigenvectors, sigma=float(sigma), U=U)


def embed(g, r, sigma, seed=0):
    """Eigenpairs of ``g``'s Laplacian plus the weighted subspace."""
    return build_subspace(smallest_eigenpairs(build_laplacian(g), r, seed=seed), sigma)


def embedding_distances(emb, P, Q):
    if emb.U is None:
        raise ValueError("embedding subspace U is not populated")
    D = emb.U[np.asarray(P)] - emb.U[np.asarray(Q)]
    return np.sum(D * D, axis=-1)


def embedding_distance(emb, p, q):
    """||U^T e_pq||^2: squared distance between rows ``p`` and ``q`` of ``U``."""
    return float(embedding_distances(emb, p, q))


def data_distances(X, P, Q):
    X = as_array(X)
    D = X[np.asarray(P)] - X[np.asarray(Q)]
    return np.sum(D * D, axis=-1) / X.shape[1]


def data_distance(X, p, q):
    """||X^T e_pq||^2 / M, the feature-averaged squared distance."""
    return float(data_distances(X, p, q))


def distortions(emb, X, P, Q):
    """Vectorized ``(z_emb, z_data, eta)`` for node pairs ``(P[i], Q[i])``."""
    z_emb = embedding_distances(emb, P, Q)
    z_data = data_distances(X, P, Q)
    eta = z_emb / np.maximum(z_data, Z_DATA_FLOOR)
    return z_emb, z_data, eta


def distortion(emb, X, p, q):
    z_emb, z_data, eta = distortions(emb, X, p, q)
    return CandidateEdge(int(p), int(q), float(z_data), float(z_emb), float(eta))


def theta_l1(L):
    # off-diagonal l1 mass over unordered pairs, i.e. the total edge weight
    return float(L.diagonal().sum()) / 2.0


def objective_estimate(eigenvalues, X, L, sigma, beta=0.0):
    """Truncated log-det objective.

    ``sum(log(lambda_i + 1/sigma^2)) - Tr(X^T L X)/M - beta * sum(w)`` over the
    supplied eigenvalues.  With the full spectrum this is the exact objective;
    with the first few eigenvalues it is the monitoring surrogate.
    """
    X = as_array(X)
    lam = np.asarray(eigenvalues, dtype=np.float64)
    return float(np.sum(np.log(lam + 1.0 / sigma**2)) - smoothness(L, X) / X.shape[1] - beta * theta_l1(L))


def gradient_entry(g, X, sigma, beta, p, q):
    """dF/dw_pq from the full eigendecomposition.  Small graphs only."""
    L = build_laplacian(g)
    eig = smallest_eigenpairs(L, g.n, dense_cutoff=max(DENSE_CUTOFF, g.n))
    lam = eig.eigenvalues[1:]
    U = eig.eigenvectors[:, 1:]
    dlam = (U[p] - U[q]) ** 2
    return float(np.sum(dlam / (lam + 1.0 / sigma**2)) - data_distance(X, p, q) - beta)


def eigenvalue_perturbation_estimate(emb, p, q, w):
    """First-order eigenvalue shifts ``w * (u_i^T e_pq)^2`` from adding edge ``(p, q)``."""
    V = emb.eigenvectors
    return w * (V[p] - V[q]) ** 2


def write_embedding(emb, path):
    if emb.U is None:
        raise ValueError("embedding subspace U is not populated")
    with open(path, "w") as fh:
        fh.write(f"#dims {emb.U.shape[1]} #sigma {emb.sigma!r}\n")
        for row in emb.U:
            fh.write("\t".join(repr(float(x)) for x in row) + "\n")


def read_embedding(path):
    """Return ``(U, sigma)`` from an exported embedding file."""
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 4 or head[0] != "#dims" or head[2] != "#sigma":
            raise ValueError(f"{path}: expected '#dims <d> #sigma <s>' header")
        dims, sigma = int(head[1]), float(head[3])
        rows = [[float(x) for x in line.split("\t")] for line in fh if line.strip()]
    U = np.array(rows, dtype=np.float64).reshape(-1, dims)
    return U, sigma
