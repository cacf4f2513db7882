import numpy as np
import pytest
import scipy.linalg

from graspel.eigen import embed
from graspel.graphcore import SparseGraph, build_laplacian, connected_components, effective_resistance_exact
from graspel.sparsify import SparsifyConfig, approx_leverage_scores, spectral_sparsify

from datasets import blobs, complete_graph, knn_graph, path_graph, random_connected_graph


class TestLeverageScores:
    def test_tree_edges(self):
        g = SparseGraph(5, [(0, 1, 2.0), (1, 2, 0.5), (1, 3, 3.0), (3, 4, 1.0)])
        np.testing.assert_allclose(approx_leverage_scores(g, embed(g, 5, 1e9)), 1.0, rtol=1e-8)

    def test_triangle(self):
        g = complete_graph(3)
        np.testing.assert_allclose(approx_leverage_scores(g, embed(g, 3, 1e9)), 2 / 3, rtol=1e-8)

    def test_matches_pseudoinverse(self):
        g = random_connected_graph(15, seed=3)
        scores = approx_leverage_scores(g, embed(g, 15, 1e9))
        exact = [w * effective_resistance_exact(g, u, v) for u, v, w in g.edges()]
        np.testing.assert_allclose(scores, exact, rtol=1e-4)
        # leverage scores of a connected graph sum to n - 1
        assert scores.sum() == pytest.approx(14, rel=1e-6)


class TestSparsify:
    def test_spanning_tree(self):
        g = random_connected_graph(20, p=0.4, seed=1)
        s = spectral_sparsify(g, SparsifyConfig(target_density=19 / 20))
        assert s.num_edges == 19 and connected_components(s)[0] == 1
        assert s.edge_set() <= g.edge_set()

    def test_already_sparse(self):
        g = path_graph(10)
        s = spectral_sparsify(g, SparsifyConfig(target_density=1.2))
        assert s == g and s is not g

    def test_infeasible(self):
        with pytest.raises(ValueError):
            spectral_sparsify(path_graph(10), SparsifyConfig(target_density=0.5))

    def test_preserves_total_weight(self):
        g = random_connected_graph(30, p=0.4, seed=2)
        s = spectral_sparsify(g, SparsifyConfig(target_density=1.5))
        assert s.edge_arrays()[2].sum() == pytest.approx(g.edge_arrays()[2].sum(), rel=1e-12)

    def test_knn_blobs(self):
        X, _ = blobs(n_per=67, k=3, sep=3.0, seed=0)
        g = knn_graph(X[:200], 5)
        assert connected_components(g)[0] == 1
        s = spectral_sparsify(g, SparsifyConfig(target_density=1.2))
        assert abs(s.num_edges - 240) <= 12
        assert connected_components(s)[0] == 1

    def test_disconnected_input_keeps_components(self):
        g = complete_graph(6, size=12)
        for u in range(6, 12):
            for v in range(u + 1, 12):
                g.add_edge(u, v, 1.0)
        s = spectral_sparsify(g, SparsifyConfig(target_density=10 / 12))
        assert s.num_edges == 10 and connected_components(s)[0] == 2

    @pytest.mark.parametrize("seed", range(5))
    def test_spectrum_within_factor_three(self, seed):
        X = np.random.default_rng(seed).standard_normal((30, 5))
        g = knn_graph(X, 5)
        if connected_components(g)[0] > 1:
            pytest.skip("fixture draw is disconnected")
        s = spectral_sparsify(g, SparsifyConfig(target_density=1.5, seed=seed))
        a = scipy.linalg.eigvalsh(build_laplacian(g).toarray())[1:6]
        b = scipy.linalg.eigvalsh(build_laplacian(s).toarray())[1:6]
        assert ((b / a > 1 / 3) & (b / a < 3)).all()

    def test_deterministic(self):
        g = random_connected_graph(40, p=0.3, seed=4)
        a = spectral_sparsify(g, SparsifyConfig(target_density=1.5, seed=9))
        b = spectral_sparsify(g, SparsifyConfig(target_density=1.5, seed=9))
        assert a.edges() == b.edges()
