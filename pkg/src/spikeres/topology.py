"""Recurrent network construction on a 3-D lattice, graph analysis, and snapshot I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, StorageError


@dataclass(frozen=True)
class TopologyConfig:
    """Settings for distance-dependent recurrent wiring.

    ``ei_ratio`` gives the excitatory:inhibitory proportion as integer parts;
    neuron counts are rounded from it. ``amplitude_c`` and ``lambda_scale``
    set the connection probability C * exp(-(d / lambda)^2) for lattice
    distance d. Weight magnitudes are drawn uniformly from (0, w_scale].
    """

    n_total: int
    lattice_shape: tuple[int, int, int]
    ei_ratio: tuple[int, int] = (4, 1)
    amplitude_c: float = 0.6
    lambda_scale: float = 2.0
    w_scale: float = 1.0
    input_fraction: float = 0.3
    input_connect_prob: float = 0.3
    n_encoders: int = 8

    def __post_init__(self):
        if self.n_total < 1:
            raise ConfigurationError("n_total must be at least 1")
        if len(self.lattice_shape) != 3 or any(s < 1 for s in self.lattice_shape):
            raise ConfigurationError(f"lattice_shape must be three positive ints, got {self.lattice_shape}")
        if math.prod(self.lattice_shape) < self.n_total:
            raise ConfigurationError(
                f"lattice volume {math.prod(self.lattice_shape)} cannot place {self.n_total} neurons"
            )
        if not (0.0 <= self.amplitude_c <= 1.0):
            raise ConfigurationError(f"amplitude_c must lie in [0, 1], got {self.amplitude_c}")
        if self.lambda_scale <= 0.0:
            raise ConfigurationError("lambda_scale must be positive")
        if self.w_scale <= 0.0:
            raise ConfigurationError("w_scale must be positive")
        if not (0.0 <= self.input_fraction <= 1.0):
            raise ConfigurationError("input_fraction must lie in [0, 1]")
        if not (0.0 <= self.input_connect_prob <= 1.0):
            raise ConfigurationError("input_connect_prob must lie in [0, 1]")
        if self.ei_ratio[0] < 0 or self.ei_ratio[1] < 0 or sum(self.ei_ratio) == 0:
            raise ConfigurationError(f"ei_ratio parts must be non-negative and not both zero, got {self.ei_ratio}")
        if self.n_encoders < 0:
            raise ConfigurationError("n_encoders must be non-negative")

    def n_excitatory(self) -> int:
        return round(self.n_total * self.ei_ratio[0] / sum(self.ei_ratio))


@dataclass
class NetworkGraph:
    """Directed synaptic graph with lattice coordinates and signed neurons.

    ``edges`` maps (pre, post) to a signed weight whose sign matches the
    presynaptic neuron's type. ``input_edges`` maps (encoder, post) to a
    non-negative weight. Neuron ids are stable across pruning; dictionaries
    keep deterministic insertion order.
    """

    positions: dict[int, tuple[int, int, int]]
    sign: dict[int, int]
    edges: dict[tuple[int, int], float]
    input_edges: dict[tuple[int, int], float] = field(default_factory=dict)
    n_encoders: int = 0

    def __post_init__(self):
        for nid, s in self.sign.items():
            if s not in (1, -1):
                raise ConfigurationError(f"neuron {nid} sign must be +1 or -1, got {s}")
            if nid not in self.positions:
                raise ConfigurationError(f"neuron {nid} has a sign but no position")
        for (pre, post), w in self.edges.items():
            if pre == post:
                raise ConfigurationError(f"self-loop on neuron {pre}")
            if pre not in self.sign or post not in self.sign:
                raise ConfigurationError(f"edge ({pre}, {post}) references an unknown neuron")
            if w != 0.0 and int(np.sign(w)) != self.sign[pre]:
                raise ConfigurationError(f"edge ({pre}, {post}) weight sign disagrees with presynaptic type")
        for (enc, post), w in self.input_edges.items():
            if not (0 <= enc < self.n_encoders):
                raise ConfigurationError(f"input edge references unknown encoder {enc}")
            if post not in self.sign:
                raise ConfigurationError(f"input edge targets unknown neuron {post}")
            if w < 0.0:
                raise ConfigurationError("input weights must be non-negative")

    def neuron_ids(self) -> list[int]:
        return sorted(self.positions)

    @property
    def n_neurons(self) -> int:
        return len(self.positions)

    @property
    def n_synapses(self) -> int:
        return len(self.edges)

    def density(self) -> float:
        n = self.n_neurons
        if n < 2:
            return 0.0
        return len(self.edges) / (n * (n - 1))

    def copy(self) -> "NetworkGraph":
        return NetworkGraph(
            positions=dict(self.positions),
            sign=dict(self.sign),
            edges=dict(self.edges),
            input_edges=dict(self.input_edges),
            n_encoders=self.n_encoders,
        )


def lattice_positions(shape: tuple[int, int, int], n: int) -> list[tuple[int, int, int]]:
    """First n sites of the lattice in row-major order."""
    nx, ny, nz = shape
    out = []
    for idx in range(n):
        x = idx // (ny * nz)
        rem = idx % (ny * nz)
        out.append((x, rem // nz, rem % nz))
    return out


def connection_probability(pos_a, pos_b, config: TopologyConfig) -> float:
    """Distance-dependent wiring probability between two lattice sites."""
    d2 = sum((a - b) ** 2 for a, b in zip(pos_a, pos_b))
    return config.amplitude_c * math.exp(-d2 / config.lambda_scale**2)


def build_recurrent_graph(config: TopologyConfig, seed: int) -> NetworkGraph:
    """Sample a recurrent graph plus encoder fan-in under the given seed.

    Ordered neuron pairs are wired independently with the distance rule; no
    self-loops. Excitatory/inhibitory labels are a random partition at the
    configured ratio, weights carry the presynaptic sign, and each encoder
    reaches a shared random subset of input_fraction * n_total neurons.
    """
    rng = np.random.default_rng(seed)
    n = config.n_total
    pos = np.array(lattice_positions(config.lattice_shape, n), dtype=float)

    n_exc = config.n_excitatory()
    perm = rng.permutation(n)
    sign_arr = np.full(n, -1, dtype=int)
    sign_arr[perm[:n_exc]] = 1

    d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=-1)
    probs = config.amplitude_c * np.exp(-d2 / config.lambda_scale**2)
    np.fill_diagonal(probs, 0.0)
    adj = rng.random((n, n)) < probs
    # magnitudes in (0, w_scale]: 1 - U with U in [0, 1)
    mags = config.w_scale * (1.0 - rng.random((n, n)))

    positions = {i: tuple(int(c) for c in pos[i]) for i in range(n)}
    sign = {i: int(sign_arr[i]) for i in range(n)}
    edges = {}
    pre_idx, post_idx = np.nonzero(adj)
    for i, j in zip(pre_idx.tolist(), post_idx.tolist()):
        edges[(i, j)] = float(sign_arr[i] * mags[i, j])

    n_targets = round(config.input_fraction * n)
    targets = np.sort(rng.choice(n, size=n_targets, replace=False))
    input_edges = {}
    if config.n_encoders > 0 and n_targets > 0:
        hit = rng.random((config.n_encoders, n_targets)) < config.input_connect_prob
        in_mags = config.w_scale * (1.0 - rng.random((config.n_encoders, n_targets)))
        for e in range(config.n_encoders):
            for k in range(n_targets):
                if hit[e, k]:
                    input_edges[(e, int(targets[k]))] = float(in_mags[e, k])

    return NetworkGraph(
        positions=positions,
        sign=sign,
        edges=edges,
        input_edges=input_edges,
        n_encoders=config.n_encoders,
    )


# --- graph analysis ---------------------------------------------------------


def _adjacency_lists(graph: NetworkGraph) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {nid: [] for nid in graph.neuron_ids()}
    for (pre, post) in graph.edges:
        out[pre].append(post)
    return out


def betweenness_centrality(graph: NetworkGraph) -> dict[int, float]:
    """Raw directed shortest-path betweenness (Brandes accumulation).

    Edges are treated as unweighted; ties between equal-length paths split
    fractionally. Scores are not normalized and endpoints do not count.
    """
    ids = graph.neuron_ids()
    succ = _adjacency_lists(graph)
    bc = {v: 0.0 for v in ids}
    for s in ids:
        stack: list[int] = []
        pred: dict[int, list[int]] = {v: [] for v in ids}
        sigma = {v: 0.0 for v in ids}
        dist = {v: -1 for v in ids}
        sigma[s] = 1.0
        dist[s] = 0
        queue = [s]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            stack.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    pred[w].append(v)
        delta = {v: 0.0 for v in ids}
        while stack:
            w = stack.pop()
            for v in pred[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


def total_degrees(graph: NetworkGraph) -> dict[int, int]:
    """In-degree plus out-degree over recurrent edges."""
    deg = {nid: 0 for nid in graph.neuron_ids()}
    for (pre, post) in graph.edges:
        deg[pre] += 1
        deg[post] += 1
    return deg


def degree_variance(graph: NetworkGraph) -> float:
    """Population variance of total degree across current neurons."""
    if graph.n_neurons == 0:
        raise ConfigurationError("degree variance of an empty graph is undefined")
    deg = np.array(list(total_degrees(graph).values()), dtype=float)
    return float(np.mean((deg - deg.mean()) ** 2))


# --- snapshot serialization -------------------------------------------------


def _fmt17(x: float) -> str:
    return format(float(x), ".17g")


def graph_to_json(graph: NetworkGraph) -> str:
    """Serialize to the snapshot schema with 17-significant-digit weights.

    Nodes, edges, and input edges are emitted in sorted id order so equal
    graphs produce byte-identical text.
    """
    parts = ['{"nodes": [']
    node_items = []
    for nid in graph.neuron_ids():
        x, y, z = graph.positions[nid]
        node_items.append(f'{{"id": {nid}, "pos": [{x}, {y}, {z}], "sign": {graph.sign[nid]}}}')
    parts.append(", ".join(node_items))
    parts.append('], "edges": [')
    edge_items = []
    for (pre, post) in sorted(graph.edges):
        edge_items.append(f'{{"src": {pre}, "dst": {post}, "w": {_fmt17(graph.edges[(pre, post)])}}}')
    parts.append(", ".join(edge_items))
    parts.append('], "input_edges": [')
    in_items = []
    for (enc, post) in sorted(graph.input_edges):
        in_items.append(f'{{"enc": {enc}, "dst": {post}, "w": {_fmt17(graph.input_edges[(enc, post)])}}}')
    parts.append(", ".join(in_items))
    parts.append("]}")
    return "".join(parts)


def graph_from_json(text: str, n_encoders: int | None = None) -> NetworkGraph:
    """Parse a snapshot produced by graph_to_json."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StorageError(f"snapshot is not valid JSON: {exc}") from exc
    try:
        positions = {int(n["id"]): tuple(int(c) for c in n["pos"]) for n in obj["nodes"]}
        sign = {int(n["id"]): int(n["sign"]) for n in obj["nodes"]}
        edges = {(int(e["src"]), int(e["dst"])): float(e["w"]) for e in obj["edges"]}
        input_edges = {(int(e["enc"]), int(e["dst"])): float(e["w"]) for e in obj["input_edges"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise StorageError(f"snapshot is missing required fields: {exc}") from exc
    if n_encoders is None:
        n_encoders = 1 + max((enc for enc, _ in input_edges), default=-1)
    return NetworkGraph(
        positions=positions, sign=sign, edges=edges, input_edges=input_edges, n_encoders=n_encoders
    )
