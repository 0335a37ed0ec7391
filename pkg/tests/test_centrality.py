import numpy as np
import pytest

from mpxdiff.centrality import (diameter, diffusion_centrality, layer_centrality,
                                seed_set_dc, spectral_radius)
from mpxdiff.multigraph import from_layers
from mpxdiff.synth import er_directed

PATH3 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.uint8)


class TestSpectralRadius:
    def test_complete_graph(self):
        k5 = np.ones((5, 5)) - np.eye(5)
        assert spectral_radius(k5) == pytest.approx(4.0, abs=1e-8)

    def test_three_node_path(self):
        assert spectral_radius(PATH3) == pytest.approx(np.sqrt(2), abs=1e-8)

    def test_empty_graph(self):
        assert spectral_radius(np.zeros((4, 4))) == 0.0

    def test_nilpotent_directed_chain(self):
        a = np.zeros((4, 4))
        for i in range(3):
            a[i + 1, i] = 1
        assert spectral_radius(a) == 0.0

    def test_matches_dense_solver_on_symmetric_fixtures(self):
        for seed in range(8):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(5, 51))
            a = (rng.random((n, n)) < 0.15).astype(float)
            a = np.maximum(a, a.T)
            np.fill_diagonal(a, 0)
            expected = np.max(np.abs(np.linalg.eigvalsh(a)))
            assert spectral_radius(a) == pytest.approx(expected, abs=1e-8)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            spectral_radius(np.zeros((2, 3)))


class TestDiameter:
    def test_path(self):
        assert diameter(PATH3) == 2

    def test_complete(self):
        assert diameter(np.ones((4, 4)) - np.eye(4)) == 1

    def test_two_disjoint_paths_take_largest_component(self):
        a = np.zeros((6, 6), dtype=np.uint8)
        a[0, 1] = a[1, 0] = a[1, 2] = a[2, 1] = 1
        a[3, 4] = a[4, 3] = a[4, 5] = a[5, 4] = 1
        assert diameter(a) == 2

    def test_edgeless(self):
        assert diameter(np.zeros((5, 5))) == 0

    def test_directed_input_symmetrized(self):
        a = np.zeros((3, 3), dtype=np.uint8)
        a[0, 1] = 1
        a[1, 2] = 1
        assert diameter(a) == 2

    def test_matches_bfs_oracle(self):
        for seed in range(6):
            rng = np.random.default_rng(seed)
            a = er_directed(25, 2.0, rng)
            sym = np.maximum(a, a.T)
            # plain per-source BFS as the independent oracle
            best = 0
            comps = []
            seen = set()
            for s in range(25):
                if s in seen:
                    continue
                comp, frontier = {s}, {s}
                while frontier:
                    frontier = {w for u in frontier
                                for w in np.flatnonzero(sym[u]) if w not in comp}
                    comp |= frontier
                seen |= comp
                comps.append(comp)
            largest = max(comps, key=len)
            for s in largest:
                dist = {s: 0}
                frontier = [s]
                while frontier:
                    nxt = []
                    for u in frontier:
                        for w in np.flatnonzero(sym[u]):
                            if w not in dist:
                                dist[w] = dist[u] + 1
                                nxt.append(w)
                    frontier = nxt
                best = max(best, max(dist.values()))
            assert diameter(a) == best


class TestDiffusionCentrality:
    def test_empty_graph_zero(self):
        vec = diffusion_centrality(np.zeros((4, 4)), q=0.5, T=3)
        assert (vec.scores == 0).all()

    def test_path_center_golden(self):
        vec = diffusion_centrality(PATH3, q=1 / np.sqrt(2), T=2)
        assert vec.scores[1] == pytest.approx(1 + np.sqrt(2), abs=1e-12)
        assert vec.scores[0] == pytest.approx(1 / np.sqrt(2) + 1, abs=1e-12)

    def test_monotone_in_T(self):
        rng = np.random.default_rng(0)
        a = er_directed(20, 3.0, rng)
        short = diffusion_centrality(a, q=0.2, T=3).scores
        extended = diffusion_centrality(a, q=0.2, T=6).scores
        assert (extended >= short - 1e-12).all()

    def test_degree_recovery(self):
        rng = np.random.default_rng(1)
        a = er_directed(15, 3.0, rng)
        vec = diffusion_centrality(a, q=1.0, T=1)
        assert vec.scores.tolist() == pytest.approx(a.sum(axis=1).tolist())

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        a = er_directed(12, 3.0, rng)
        perm = rng.permutation(12)
        permuted = a[np.ix_(perm, perm)]
        base = diffusion_centrality(a, q=0.3, T=4).scores
        moved = diffusion_centrality(permuted, q=0.3, T=4).scores
        assert moved.tolist() == pytest.approx(base[perm].tolist())

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            diffusion_centrality(PATH3, q=0.0, T=2)
        with pytest.raises(ValueError):
            diffusion_centrality(PATH3, q=0.5, T=0)


class TestSeedSetDc:
    def graph(self):
        return from_layers({"advice": PATH3})

    def test_singleton_equals_node_score(self):
        g = self.graph()
        vec = layer_centrality(g, "advice")
        assert seed_set_dc(g, "advice", [1]) == pytest.approx(vec.scores[1])

    def test_additive_over_disjoint_sets(self):
        g = self.graph()
        total = seed_set_dc(g, "advice", [0, 2])
        assert total == pytest.approx(seed_set_dc(g, "advice", [0])
                                      + seed_set_dc(g, "advice", [2]))

    def test_defaults_golden_value(self):
        g = self.graph()
        assert seed_set_dc(g, "advice", [1]) == pytest.approx(1 + np.sqrt(2), abs=1e-12)

    def test_edgeless_layer_warns_and_zeroes(self):
        g = from_layers({"a": np.zeros((4, 4), dtype=np.uint8)})
        with pytest.warns(UserWarning, match="spectral radius 0"):
            assert seed_set_dc(g, "a", [0]) == 0.0

    def test_errors(self):
        g = self.graph()
        with pytest.raises(KeyError):
            seed_set_dc(g, "nope", [0])
        with pytest.raises(ValueError):
            seed_set_dc(g, "advice", [])
        with pytest.raises(IndexError):
            seed_set_dc(g, "advice", [7])
