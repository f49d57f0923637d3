"""Lattice wiring, graph analysis, and snapshot round-trips."""

import numpy as np
import pytest

from spikeres.errors import ConfigurationError, StorageError
from spikeres.topology import (
    NetworkGraph,
    TopologyConfig,
    betweenness_centrality,
    build_recurrent_graph,
    connection_probability,
    degree_variance,
    graph_from_json,
    graph_to_json,
    lattice_positions,
    total_degrees,
)


def tiny_graph(edges, n=3, input_edges=None, n_encoders=0, signs=None):
    ids = range(n)
    return NetworkGraph(
        positions={i: (i, 0, 0) for i in ids},
        sign={i: (signs[i] if signs else 1) for i in ids},
        edges=dict(edges),
        input_edges=dict(input_edges or {}),
        n_encoders=n_encoders,
    )


class TestLatticePositions:
    def test_row_major_order(self):
        got = lattice_positions((2, 2, 2), 8)
        want = [
            (0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1),
            (1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1),
        ]
        assert got == want

    def test_partial_fill_takes_prefix(self):
        assert lattice_positions((3, 2, 2), 5) == lattice_positions((3, 2, 2), 12)[:5]

    def test_positions_distinct(self):
        pos = lattice_positions((4, 3, 2), 24)
        assert len(set(pos)) == 24


class TestConnectionProbability:
    def test_zero_distance_hits_amplitude(self):
        cfg = TopologyConfig(n_total=2, lattice_shape=(2, 1, 1), amplitude_c=0.37)
        assert connection_probability((0, 0, 0), (0, 0, 0), cfg) == pytest.approx(0.37)

    def test_gaussian_falloff(self):
        cfg = TopologyConfig(n_total=2, lattice_shape=(2, 1, 1), amplitude_c=0.6, lambda_scale=2.0)
        # squared distance 1 at lambda 2
        want = 0.6 * np.exp(-1.0 / 4.0)
        assert connection_probability((0, 0, 0), (1, 0, 0), cfg) == pytest.approx(want)

    def test_symmetric_and_decreasing(self):
        cfg = TopologyConfig(n_total=2, lattice_shape=(8, 1, 1))
        a = (0, 0, 0)
        probs = [connection_probability(a, (d, 0, 0), cfg) for d in range(5)]
        assert all(p1 > p2 for p1, p2 in zip(probs, probs[1:]))
        assert connection_probability((3, 0, 0), a, cfg) == pytest.approx(probs[3])


class TestTopologyConfig:
    def test_lattice_too_small(self):
        with pytest.raises(ConfigurationError):
            TopologyConfig(n_total=9, lattice_shape=(2, 2, 2))

    def test_amplitude_bounds(self):
        with pytest.raises(ConfigurationError):
            TopologyConfig(n_total=4, lattice_shape=(2, 2, 2), amplitude_c=1.5)

    def test_ei_ratio_rejects_double_zero(self):
        with pytest.raises(ConfigurationError):
            TopologyConfig(n_total=4, lattice_shape=(2, 2, 2), ei_ratio=(0, 0))

    def test_excitatory_count_rounds(self):
        cfg = TopologyConfig(n_total=100, lattice_shape=(5, 5, 4))
        assert cfg.n_excitatory() == 80
        cfg = TopologyConfig(n_total=10, lattice_shape=(5, 5, 4), ei_ratio=(1, 1))
        assert cfg.n_excitatory() == 5


class TestBuildRecurrentGraph:
    def setup_method(self):
        self.cfg = TopologyConfig(
            n_total=40, lattice_shape=(5, 4, 2), w_scale=2.5,
            input_fraction=0.3, input_connect_prob=0.5, n_encoders=4,
        )

    def test_deterministic_under_seed(self):
        g1 = build_recurrent_graph(self.cfg, seed=7)
        g2 = build_recurrent_graph(self.cfg, seed=7)
        assert g1.edges == g2.edges
        assert g1.sign == g2.sign
        assert g1.input_edges == g2.input_edges

    def test_seed_changes_graph(self):
        g1 = build_recurrent_graph(self.cfg, seed=7)
        g2 = build_recurrent_graph(self.cfg, seed=8)
        assert g1.edges != g2.edges

    def test_weights_in_range_and_signed(self):
        g = build_recurrent_graph(self.cfg, seed=3)
        assert g.n_synapses > 0
        for (pre, _), w in g.edges.items():
            assert 0.0 < abs(w) <= self.cfg.w_scale
            assert np.sign(w) == g.sign[pre]

    def test_no_self_loops(self):
        g = build_recurrent_graph(self.cfg, seed=3)
        assert all(pre != post for (pre, post) in g.edges)

    def test_sign_partition_matches_ratio(self):
        g = build_recurrent_graph(self.cfg, seed=3)
        n_exc = sum(1 for s in g.sign.values() if s > 0)
        assert n_exc == self.cfg.n_excitatory()

    def test_input_targets_shared_subset(self):
        g = build_recurrent_graph(self.cfg, seed=3)
        targets = {post for (_, post) in g.input_edges}
        n_targets = round(self.cfg.input_fraction * self.cfg.n_total)
        assert len(targets) <= n_targets
        assert all(0 <= enc < self.cfg.n_encoders for (enc, _) in g.input_edges)
        assert all(w > 0 for w in g.input_edges.values())

    def test_amplitude_extremes(self):
        full = TopologyConfig(
            n_total=12, lattice_shape=(12, 1, 1), amplitude_c=1.0, lambda_scale=1e6
        )
        g = build_recurrent_graph(full, seed=0)
        assert g.n_synapses == 12 * 11
        empty = TopologyConfig(n_total=12, lattice_shape=(12, 1, 1), amplitude_c=0.0)
        assert build_recurrent_graph(empty, seed=0).n_synapses == 0


class TestGraphValidation:
    def test_self_loop_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_graph({(0, 0): 1.0})

    def test_weight_sign_must_match_type(self):
        with pytest.raises(ConfigurationError):
            tiny_graph({(0, 1): -1.0})
        tiny_graph({(0, 1): -1.0}, signs={0: -1, 1: 1, 2: 1})

    def test_unknown_neuron_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_graph({(0, 9): 1.0})

    def test_input_edge_checks(self):
        with pytest.raises(ConfigurationError):
            tiny_graph({}, input_edges={(0, 1): 1.0}, n_encoders=0)
        with pytest.raises(ConfigurationError):
            tiny_graph({}, input_edges={(0, 1): -1.0}, n_encoders=2)

    def test_density(self):
        g = tiny_graph({(0, 1): 1.0, (1, 2): 1.0})
        assert g.density() == pytest.approx(2.0 / 6.0)
        single = NetworkGraph(positions={0: (0, 0, 0)}, sign={0: 1}, edges={})
        assert single.density() == 0.0

    def test_copy_is_independent(self):
        g = tiny_graph({(0, 1): 1.0})
        h = g.copy()
        h.edges[(1, 2)] = 1.0
        assert (1, 2) not in g.edges


def brute_force_betweenness(graph):
    """Betweenness by explicit enumeration of every shortest path."""
    ids = graph.neuron_ids()
    succ = {v: [] for v in ids}
    for (pre, post) in graph.edges:
        succ[pre].append(post)

    def shortest_paths(s, t):
        dist = {s: 0}
        queue = [s]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            for w in succ[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        if t not in dist:
            return []
        paths = []

        def extend(path):
            v = path[-1]
            if v == t:
                paths.append(list(path))
                return
            if dist[v] >= dist[t]:
                return
            for w in succ[v]:
                if dist.get(w) == dist[v] + 1:
                    path.append(w)
                    extend(path)
                    path.pop()

        extend([s])
        return paths

    bc = {v: 0.0 for v in ids}
    for s in ids:
        for t in ids:
            if s == t:
                continue
            paths = shortest_paths(s, t)
            if not paths:
                continue
            for v in ids:
                if v in (s, t):
                    continue
                through = sum(1 for p in paths if v in p)
                bc[v] += through / len(paths)
    return bc


class TestBetweenness:
    def test_three_node_path(self):
        g = NetworkGraph(
            positions={1: (0, 0, 0), 2: (1, 0, 0), 3: (2, 0, 0)},
            sign={1: 1, 2: 1, 3: 1},
            edges={(1, 2): 1.0, (2, 3): 1.0},
        )
        bc = betweenness_centrality(g)
        assert bc == {1: 0.0, 2: 1.0, 3: 0.0}

    def test_matches_path_enumeration(self):
        rng = np.random.default_rng(11)
        for trial in range(6):
            n = 7
            edges = {}
            for i in range(n):
                for j in range(n):
                    if i != j and rng.random() < 0.35:
                        edges[(i, j)] = 1.0
            g = tiny_graph(edges, n=n)
            fast = betweenness_centrality(g)
            slow = brute_force_betweenness(g)
            for v in range(n):
                np.testing.assert_allclose(fast[v], slow[v], atol=1e-12)

    def test_disconnected_nodes_score_zero(self):
        g = tiny_graph({(0, 1): 1.0}, n=4)
        bc = betweenness_centrality(g)
        assert bc[2] == 0.0 and bc[3] == 0.0


class TestDegrees:
    def test_total_degree_counts_both_ends(self):
        g = tiny_graph({(0, 1): 1.0, (0, 2): 1.0})
        assert total_degrees(g) == {0: 2, 1: 1, 2: 1}

    def test_ring_has_zero_variance(self):
        g = tiny_graph({(0, 1): 1.0, (1, 2): 1.0, (2, 0): 1.0})
        assert degree_variance(g) == 0.0

    def test_star_variance(self):
        g = tiny_graph({(0, 1): 1.0, (0, 2): 1.0, (0, 3): 1.0}, n=4)
        deg = np.array([3.0, 1.0, 1.0, 1.0])
        assert degree_variance(g) == pytest.approx(np.mean((deg - deg.mean()) ** 2))

    def test_empty_graph_rejected(self):
        g = NetworkGraph(positions={}, sign={}, edges={})
        with pytest.raises(ConfigurationError):
            degree_variance(g)


class TestSnapshots:
    def make(self):
        return tiny_graph(
            {(0, 1): 1.0 / 3.0, (1, 2): 0.1234567890123456789},
            input_edges={(0, 2): 0.75, (1, 0): 0.5},
            n_encoders=2,
        )

    def test_round_trip_preserves_everything(self):
        g = self.make()
        h = graph_from_json(graph_to_json(g))
        assert h.positions == g.positions
        assert h.sign == g.sign
        assert h.edges == g.edges
        assert h.input_edges == g.input_edges
        assert h.n_encoders == g.n_encoders

    def test_serialization_is_order_independent(self):
        g = self.make()
        shuffled = NetworkGraph(
            positions=dict(reversed(list(g.positions.items()))),
            sign=dict(reversed(list(g.sign.items()))),
            edges=dict(reversed(list(g.edges.items()))),
            input_edges=dict(reversed(list(g.input_edges.items()))),
            n_encoders=2,
        )
        assert graph_to_json(g) == graph_to_json(shuffled)

    def test_weights_survive_exactly(self):
        g = self.make()
        h = graph_from_json(graph_to_json(g))
        assert h.edges[(0, 1)] == g.edges[(0, 1)]

    def test_build_round_trip(self):
        cfg = TopologyConfig(n_total=30, lattice_shape=(5, 3, 2), n_encoders=3)
        g = build_recurrent_graph(cfg, seed=5)
        h = graph_from_json(graph_to_json(g))
        assert graph_to_json(h) == graph_to_json(g)

    def test_malformed_json_raises_storage_error(self):
        with pytest.raises(StorageError):
            graph_from_json("{not json")
        with pytest.raises(StorageError):
            graph_from_json('{"nodes": [{"id": 0}], "edges": [], "input_edges": []}')
