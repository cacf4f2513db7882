import math

import numpy as np
import pytest

import graspel.learn as learn_mod
from graspel.eigen import ConvergenceError
from graspel.graphcore import DataMatrix, SparseGraph, connected_components
from graspel.learn import (
    LearnConfig,
    LearnError,
    center_rows,
    fiedler_order,
    generate_candidates,
    graspel_learn,
    initial_knn_graph,
    stability_report,
    window_size,
)

from datasets import blobs, complete_graph, path_graph, two_cliques


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"eps": 0.0},
            {"eps": 0.6},
            {"zeta": 0.0},
            {"tol": 0.0},
            {"k_init": 0},
            {"r": 1},
            {"sigma": 0.0},
            {"max_iter": -1},
            {"sample_budget": 0},
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            LearnConfig(**kw)

    def test_defaults(self):
        cfg = LearnConfig()
        assert cfg.budget(100) == 1000
        assert cfg.edges_per_iter(1000) == 1
        assert cfg.edges_per_iter(2500) == 3
        assert LearnConfig(zeta=0.01).edges_per_iter(300) == 3


class TestCenterRows:
    def test_hand_value(self):
        np.testing.assert_allclose(center_rows(np.array([[1.0, 2.0, 3.0]])).values, [[-1.0, 0.0, 1.0]])

    def test_idempotent(self, rng):
        once = center_rows(rng.standard_normal((5, 4)))
        assert once.centered
        np.testing.assert_allclose(center_rows(once).values, once.values, atol=1e-15)

    def test_row_means(self, rng):
        X = center_rows(rng.standard_normal((50, 7)) * 100 + 3)
        assert np.abs(X.values.mean(axis=1)).max() <= 1e-12


class TestInitialKnn:
    def test_collinear(self):
        g = initial_knn_graph(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), 1)
        assert g.edge_set() == {(0, 1), (1, 2)}

    def test_reciprocal_weights(self):
        g = initial_knn_graph(np.array([[0.0], [1.0], [10.0]]), 1)
        assert g.edge_set() == {(0, 1), (1, 2)}
        assert g.weight(0, 1) == pytest.approx(1.0)
        assert g.weight(1, 2) == pytest.approx(1 / 81)

    def test_moons_density(self, moons_data):
        g = initial_knn_graph(center_rows(moons_data[0]), 2)
        assert 1.0 <= g.density <= 2.0

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            initial_knn_graph(np.zeros((3, 2)), 3)


class TestFiedlerOrder:
    def test_path(self):
        order = fiedler_order(path_graph(3)).tolist()
        assert order in ([0, 1, 2], [2, 1, 0])

    def test_two_cliques(self):
        g, labels = two_cliques(4, 6)
        seq = labels[fiedler_order(g)]
        assert np.count_nonzero(np.diff(seq)) == 1

    def test_barbell(self):
        g = complete_graph(10, size=20)
        for u in range(10, 20):
            for v in range(u + 1, 20):
                g.add_edge(u, v, 1.0)
        g.add_edge(9, 10, 1.0)
        order = fiedler_order(g)
        assert set(order[:10].tolist()) in ({*range(10)}, {*range(10, 20)})


class TestCandidates:
    def test_window_arithmetic(self):
        assert window_size(100, 0.05) == 5
        assert window_size(1000, 0.05) == 50
        assert window_size(3, 0.5) == 1
        order = np.random.default_rng(0).permutation(100)
        P, Q = generate_candidates(order, 0.05, 1000, SparseGraph(100), seed=0)
        assert len(set(zip(P.tolist(), Q.tolist()))) == len(P) == 25
        assert set(P.tolist()) <= set(order[-5:].tolist())
        assert set(Q.tolist()) <= set(order[:5].tolist())

    def test_budget(self):
        order = np.arange(100)
        P, _ = generate_candidates(order, 0.5, 40, SparseGraph(100), seed=0)
        assert len(P) == 40

    def test_complete_graph_empty(self):
        P, Q = generate_candidates(np.arange(8), 0.5, 100, complete_graph(8), seed=0)
        assert len(P) == len(Q) == 0

    def test_excludes_existing(self):
        order = np.arange(20)
        g = SparseGraph(20, [(0, 19, 1.0), (1, 18, 1.0)])
        P, Q = generate_candidates(order, 0.25, 1000, g, seed=1)
        pairs = {(min(a, b), max(a, b)) for a, b in zip(P.tolist(), Q.tolist())}
        assert len(pairs) == 23 and not pairs & g.edge_set()
        P2, _ = generate_candidates(order, 0.25, 1000, g.edge_set(), seed=1)
        np.testing.assert_array_equal(P, P2)

    def test_deterministic(self):
        order = np.random.default_rng(0).permutation(200)
        a = generate_candidates(order, 0.1, 50, SparseGraph(200), seed=7)
        b = generate_candidates(order, 0.1, 50, SparseGraph(200), seed=7)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


class TestLearn:
    def test_tight_cluster_stops_immediately(self):
        X, _ = blobs(n_per=300, k=3, sep=5.0, seed=0)
        g, trace = graspel_learn(X, LearnConfig())
        assert trace.converged and len(trace) == 1
        assert trace.records[0].edges_added == 0
        assert g == initial_knn_graph(center_rows(X), 2)

    def test_moons(self, moons_data):
        X = center_rows(moons_data[0])
        g0 = initial_knn_graph(X, 2)
        g, trace = graspel_learn(X, LearnConfig())
        assert trace.converged
        eta = trace.eta_max
        assert eta[-1] <= 10.0 and eta[0] > 100 * eta[-1]
        assert connected_components(g)[0] < connected_components(g0)[0]
        assert g.edge_set() >= g0.edge_set()
        assert all(r.edges_added <= math.ceil(0.001 * 1000) for r in trace.records)
        assert g.num_edges == trace.initial_edges + trace.total_added

    def test_records_are_start_of_iteration(self, moons_data):
        _, trace = graspel_learn(moons_data[0], LearnConfig())
        comps = [r.components for r in trace.records]
        assert comps == sorted(comps, reverse=True)
        assert trace.records[-1].edges_added == 0

    def test_max_iter_zero(self, moons_data):
        X = center_rows(moons_data[0])
        g, trace = graspel_learn(X, LearnConfig(max_iter=0))
        assert not trace.converged and len(trace) == 0
        assert g == initial_knn_graph(X, 2)

    def test_zeta_batches(self, moons_data):
        _, trace = graspel_learn(moons_data[0], LearnConfig(zeta=0.005, max_iter=3))
        assert max(r.edges_added for r in trace.records) <= 5

    def test_objective_recorded(self):
        X, _ = blobs(n_per=20, k=2, sep=3.0, seed=1)
        _, trace = graspel_learn(X, LearnConfig(objective_rank=5, max_iter=2))
        assert all(np.isfinite(r.objective) for r in trace.records)
        assert "objective" in trace.records[0].as_dict()
        _, plain = graspel_learn(X, LearnConfig(max_iter=2))
        assert "objective" not in plain.records[0].as_dict()

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            graspel_learn(np.zeros((2, 3)))

    def test_deterministic(self, moons_data):
        a, ta = graspel_learn(moons_data[0], LearnConfig(seed=4))
        b, tb = graspel_learn(moons_data[0], LearnConfig(seed=4))
        assert a.edges() == b.edges() and ta.eta_max == tb.eta_max

    def test_eigensolver_failure_keeps_partial_trace(self, moons_data, monkeypatch):
        real = learn_mod.smallest_eigenpairs
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 2:
                raise ConvergenceError("forced")
            return real(*args, **kwargs)

        monkeypatch.setattr(learn_mod, "smallest_eigenpairs", flaky)
        with pytest.raises(LearnError) as info:
            graspel_learn(moons_data[0], LearnConfig())
        assert len(info.value.trace) == 1
        assert info.value.graph.num_edges == info.value.trace.initial_edges + info.value.trace.total_added


class TestStability:
    def test_equidistant_complete_graph(self):
        n = 12
        X = DataMatrix(np.eye(n))
        rep = stability_report(complete_graph(n), X, LearnConfig(r=n), r_trunc=n)
        assert np.isfinite(rep.eta_max) and rep.eta_max <= 1.0
        assert rep.num_candidates == 0 or rep.eta_max > 0

    def test_eigenvalues_ascending(self, moons_data):
        g, _ = graspel_learn(moons_data[0], LearnConfig())
        rep = stability_report(g, moons_data[0], r_trunc=20)
        assert len(rep.eigenvalues) == 20
        assert (np.diff(rep.eigenvalues) >= 0).all()
        np.testing.assert_allclose(rep.gaps, np.diff(rep.eigenvalues))
        assert rep.num_candidates > 0
