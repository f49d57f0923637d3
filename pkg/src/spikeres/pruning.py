"""Stability-guided pruning: node exponents, noise covariance, probabilistic sparsification.

The pipeline never looks at task data. Each iteration estimates per-node
perturbation growth rates on the rate dynamics, couples them into an edge
matrix by harmonic pooling over neighborhoods, solves the stationary noise
covariance of the linearized system, keeps each synapse with a probability
built from those two quantities (rescaling survivors to stay unbiased),
drops the least-central nodes, re-adds a few variance-maximizing edges, and
optionally retunes membrane time-constant distributions.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .bayesopt import ParamDistributionSet, SearchSpace, bo_loop
from .errors import ConfigurationError, NumericError
from .model import ReservoirModel
from .neurons import NeuronParams, firing_rates
from .readout import RateEncoderConfig, rate_encode
from .topology import NetworkGraph, betweenness_centrality, degree_variance


@dataclass(frozen=True)
class PruneConfig:
    """Knobs for one pruning run; iterations repeat the full step sequence."""

    rho_density: float = 0.55
    diagonal_mode: str = "perturb"
    centrality_quantile: float = 0.05
    centrality_threshold: float | None = None
    m_delocalize: int = 5
    epsilon_quadform: float = 0.2
    iterations: int = 10
    p_min: float = 1e-3
    pool_multiplier: float = 1.0
    lyap_epsilon: float = 1e-6
    noise_sigma: float = 1.0
    hurwitz_margin: float = 0.01
    lyap_horizon: float = 50.0
    n_perturbations: int = 1
    delta0: float = 1e-6
    timescale_budget: int = 0
    excitability_gain: float = 1.0
    w_scale: float = 1.0

    def __post_init__(self):
        if self.rho_density <= 0.0:
            raise ConfigurationError("rho_density must be positive")
        if self.diagonal_mode not in ("retain", "perturb"):
            raise ConfigurationError(f"unknown diagonal mode {self.diagonal_mode!r}")
        if not (0.0 <= self.centrality_quantile < 1.0):
            raise ConfigurationError("centrality_quantile must lie in [0, 1)")
        if self.m_delocalize < 0:
            raise ConfigurationError("m_delocalize must be non-negative")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be non-negative")
        if not (0.0 < self.p_min <= 1.0):
            raise ConfigurationError("p_min must lie in (0, 1]")
        if self.timescale_budget != 0 and self.timescale_budget < 5:
            raise ConfigurationError("timescale_budget must be 0 (off) or at least 5")


# --- step 1a: node exponents ---------------------------------------------------


@dataclass(frozen=True)
class NodeLyapunov:
    exponents: dict[int, float]
    horizon: float
    n_perturbations: int

    def as_array(self, ids) -> np.ndarray:
        return np.array([self.exponents[i] for i in ids])


def _rk4_step(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def estimate_node_lyapunov(
    model,
    horizon: float = 50.0,
    n_perturbations: int = 1,
    delta0: float = 1e-6,
    seed: int = 0,
    renorm_every: int = 10,
) -> NodeLyapunov:
    """Finite-time growth rate of a node-local perturbation, per node.

    A reference rate trajectory runs alongside twins perturbed by delta0 along
    each coordinate; difference norms are renormalized every few steps and the
    accumulated log growth divided by the horizon. Multiple perturbation
    rounds (fresh initial states) are averaged.
    """
    if horizon <= 0.0:
        raise ConfigurationError("horizon must be positive")
    if n_perturbations < 1:
        raise ConfigurationError("need at least one perturbation round")
    if delta0 <= 0.0:
        raise ConfigurationError("delta0 must be positive")
    dt = model.rate_dt
    n_steps = max(int(round(horizon / dt)), 1)
    span = n_steps * dt
    n = model.rate_dim
    rng = np.random.default_rng(seed)
    total = np.zeros(n)
    for _ in range(n_perturbations):
        x = model.initial_rate_state(rng)
        twins = x[:, None] + delta0 * np.eye(n)
        logsum = np.zeros(n)
        since = 0
        for k in range(n_steps):
            x = _rk4_step(model.rate_derivative, x, dt)
            twins = _rk4_step(model.rate_derivative, twins, dt)
            since += 1
            if since == renorm_every or k == n_steps - 1:
                diff = twins - x[:, None]
                norms = np.linalg.norm(diff, axis=0)
                if not np.all(np.isfinite(norms)) or np.any(norms == 0.0):
                    raise NumericError("perturbation collapsed or diverged during growth estimation")
                logsum += np.log(norms / delta0)
                twins = x[:, None] + diff * (delta0 / norms)
                since = 0
        total += logsum / span
    expo = total / n_perturbations
    return NodeLyapunov(
        exponents={nid: float(expo[k]) for k, nid in enumerate(model.rate_ids)},
        horizon=span,
        n_perturbations=n_perturbations,
    )


# --- step 1b: edge coupling matrix ---------------------------------------------


@dataclass(frozen=True)
class LyapunovMatrix:
    entries: dict[tuple[int, int], float]
    fallback_edges: tuple[tuple[int, int], ...] = ()


def _neighbor_sets(graph: NetworkGraph) -> dict[int, set[int]]:
    nb = {nid: set() for nid in graph.positions}
    for (pre, post) in graph.edges:
        nb[pre].add(post)
        nb[post].add(pre)
    return nb


def pooled_harmonic_mean(values: np.ndarray, epsilon: float = 1e-6, multiplier: float = 1.0) -> float:
    """Harmonic mean of shifted magnitudes, signed by the pool's arithmetic mean."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ConfigurationError("cannot pool an empty exponent set")
    hm = v.size / np.sum(1.0 / (np.abs(v) + epsilon))
    sign = -1.0 if float(np.mean(v)) < 0.0 else 1.0
    return float(multiplier * sign * hm)


def build_lyapunov_matrix(
    graph: NetworkGraph,
    node_lyap: NodeLyapunov,
    epsilon: float = 1e-6,
    multiplier: float = 1.0,
) -> LyapunovMatrix:
    """Per-edge coupling value from the pooled neighbor exponents of both endpoints.

    The pool is the union of the two undirected neighbor sets (each node
    counted once); an edge's endpoints always belong to each other's
    neighborhoods so the pool cannot be empty, but an endpoint fallback is
    kept for robustness and logged.
    """
    for nid in graph.positions:
        if nid not in node_lyap.exponents:
            raise ConfigurationError(f"no exponent for node {nid}")
    nb = _neighbor_sets(graph)
    entries = {}
    fallbacks = []
    for (pre, post) in sorted(graph.edges):
        pool_nodes = nb[pre] | nb[post]
        if not pool_nodes:
            pool_nodes = {pre, post}
            fallbacks.append((pre, post))
        vals = np.array([node_lyap.exponents[k] for k in sorted(pool_nodes)])
        entries[(pre, post)] = pooled_harmonic_mean(vals, epsilon=epsilon, multiplier=multiplier)
    return LyapunovMatrix(entries=entries, fallback_edges=tuple(fallbacks))


# --- step 1c: linearization and stationary covariance ---------------------------


@dataclass(frozen=True)
class LinearizedSystem:
    a: np.ndarray
    ids: tuple[int, ...]
    noise_sigma: float
    b: np.ndarray | None = None


def linearize(
    graph: NetworkGraph,
    params: dict[int, NeuronParams],
    lyap_matrix: LyapunovMatrix,
    noise_sigma: float = 1.0,
) -> LinearizedSystem:
    """A = -diag(1/tau_m) + L with L placed at (post, pre) of each edge.

    The constant input b carries each neuron's dimensionless excitability
    (resting point relative to the firing gap); it does not affect the
    stationary covariance but keeps the excitability offsets visible.
    """
    ids = graph.neuron_ids()
    index = {nid: k for k, nid in enumerate(ids)}
    n = len(ids)
    a = np.zeros((n, n))
    b = np.zeros(n)
    for k, nid in enumerate(ids):
        p = params[nid]
        a[k, k] = -1.0 / p.tau_m
        b[k] = (p.v_rest - p.v_reset) / (p.v_threshold - p.v_reset)
    for (pre, post), val in lyap_matrix.entries.items():
        a[index[post], index[pre]] = val
    return LinearizedSystem(a=a, ids=tuple(ids), noise_sigma=noise_sigma, b=b)


@dataclass(frozen=True)
class StationaryCovariance:
    matrix: np.ndarray
    shift_applied: float


def stationary_covariance(
    a: np.ndarray, noise_sigma: float = 1.0, margin: float = 0.01
) -> StationaryCovariance:
    """Solve A S + S A^T + sigma^2 I = 0, shifting non-Hurwitz A for the solve only.

    The shift subtracts (max real eigenvalue + margin) from the diagonal so a
    stationary solution exists; the amount is reported so downstream steps can
    note it. The result is symmetrized and checked for positive
    semidefiniteness.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigurationError("system matrix must be square")
    if noise_sigma <= 0.0:
        raise ConfigurationError("noise sigma must be positive")
    eigs = np.linalg.eigvals(a)
    max_real = float(np.max(eigs.real))
    shift = 0.0
    a_solve = a
    if max_real >= 0.0:
        shift = max_real + margin
        a_solve = a - shift * np.eye(a.shape[0])
    cov = linalg.solve_continuous_lyapunov(a_solve, -(noise_sigma**2) * np.eye(a.shape[0]))
    cov = 0.5 * (cov + cov.T)
    if not np.all(np.isfinite(cov)):
        raise NumericError("stationary covariance solve produced non-finite entries")
    min_eig = float(np.min(np.linalg.eigvalsh(cov)))
    if min_eig < -1e-8 * max(1.0, float(np.max(np.abs(cov)))):
        raise NumericError(f"stationary covariance is not positive semidefinite (min eig {min_eig})")
    return StationaryCovariance(matrix=cov, shift_applied=shift)


# --- step 1d: probabilistic synapse pruning -------------------------------------


def keep_probability(
    lyap_value: float,
    cov_ii: float,
    cov_jj: float,
    cov_ij: float,
    excitatory: bool,
    rho: float,
    p_min: float = 1e-3,
) -> float:
    """Survival probability of one synapse, clamped to [p_min, 1]."""
    if excitatory:
        raw = rho * lyap_value * (cov_ii + cov_jj - 2.0 * cov_ij)
    else:
        raw = rho * abs(lyap_value) * (cov_ii + cov_jj + 2.0 * cov_ij)
    return float(min(max(raw, p_min), 1.0))


@dataclass
class SparsifyResult:
    a_sparse: np.ndarray
    keep_prob: np.ndarray
    kept: np.ndarray
    diag_delta: np.ndarray


def sparsify_matrix(
    a: np.ndarray,
    cov: np.ndarray,
    config: PruneConfig,
    seed: int,
    sign: np.ndarray | None = None,
) -> SparsifyResult:
    """Keep each off-diagonal entry with its survival probability, rescaled 1/p.

    Scaling survivors by the inverse probability keeps the expectation of
    every entry equal to the dense value. ``sign`` selects the excitatory or
    inhibitory probability form per entry; by default the entry's own sign
    decides. Diagonal handling follows config.diagonal_mode: 'retain' leaves
    it, 'perturb' subtracts the row-sum change of absolute off-diagonal mass.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if cov.shape != a.shape:
        raise ConfigurationError("covariance and system matrix sizes disagree")
    if sign is None:
        sign = np.sign(a)
    rng = np.random.default_rng(seed)
    off = ~np.eye(n, dtype=bool)
    support = off & (a != 0.0)

    diag = np.diag(cov)
    sum_cov = diag[:, None] + diag[None, :]
    exc_p = config.rho_density * a * (sum_cov - 2.0 * cov)
    inh_p = config.rho_density * np.abs(a) * (sum_cov + 2.0 * cov)
    p = np.where(sign > 0, exc_p, inh_p)
    p = np.clip(p, config.p_min, 1.0)

    draws = rng.random((n, n))
    kept = support & (draws < p)
    if support.any() and np.all(p[support] <= config.p_min + 1e-15):
        density = kept.sum() / support.sum()
        warnings.warn(
            "every survival probability clamped at p_min; "
            f"pruning is degenerate (kept fraction {density:.4f})"
        )

    a_sparse = np.zeros_like(a)
    a_sparse[kept] = a[kept] / p[kept]
    np.fill_diagonal(a_sparse, np.diag(a))
    delta = np.zeros(n)
    if config.diagonal_mode == "perturb":
        delta = np.sum(np.abs(a_sparse) * off, axis=1) - np.sum(np.abs(a) * off, axis=1)
        np.fill_diagonal(a_sparse, np.diag(a) - delta)
    return SparsifyResult(a_sparse=a_sparse, keep_prob=p, kept=kept, diag_delta=delta)


def prune_synapses(
    graph: NetworkGraph,
    params: dict[int, NeuronParams],
    lyap_matrix: LyapunovMatrix,
    cov: StationaryCovariance,
    config: PruneConfig,
    seed: int,
) -> tuple[NetworkGraph, dict[int, float]]:
    """Apply matrix-level survival draws to the synaptic graph.

    Surviving weights are rescaled by 1/p; removed edges vanish. With
    diagonal_mode 'perturb' the per-node change in absolute incoming coupling
    comes back as an excitability offset on the resting potential.
    """
    ids = graph.neuron_ids()
    index = {nid: k for k, nid in enumerate(ids)}
    rng = np.random.default_rng(seed)
    c = cov.matrix
    new_edges = {}
    abs_in_dense = dict.fromkeys(ids, 0.0)
    abs_in_sparse = dict.fromkeys(ids, 0.0)
    for key in sorted(graph.edges):
        pre, post = key
        l_val = lyap_matrix.entries[key]
        i, j = index[post], index[pre]
        p = keep_probability(
            l_val, c[i, i], c[j, j], c[i, j],
            excitatory=graph.sign[pre] > 0,
            rho=config.rho_density,
            p_min=config.p_min,
        )
        abs_in_dense[post] += abs(l_val)
        if rng.random() < p:
            new_edges[key] = graph.edges[key] / p
            abs_in_sparse[post] += abs(l_val) / p
    out = graph.copy()
    out.edges = new_edges
    offsets = dict.fromkeys(ids, 0.0)
    if config.diagonal_mode == "perturb":
        for nid in ids:
            delta = abs_in_sparse[nid] - abs_in_dense[nid]
            offsets[nid] = -delta * config.excitability_gain
    return out, offsets


# --- step 2: node pruning --------------------------------------------------------


def prune_nodes(
    graph: NetworkGraph,
    threshold: float | None = None,
    quantile: float | None = None,
) -> tuple[NetworkGraph, list[int]]:
    """Remove the least-central nodes, by absolute score or by quantile count.

    Quantile mode removes exactly floor(q * N) nodes, lowest betweenness
    first with id as the tie-break. Removing every node is refused.
    """
    if (threshold is None) == (quantile is None):
        raise ConfigurationError("give exactly one of threshold or quantile")
    scores = betweenness_centrality(graph)
    ids = graph.neuron_ids()
    if threshold is not None:
        doomed = [nid for nid in ids if scores[nid] < threshold]
    else:
        if not (0.0 <= quantile < 1.0):
            raise ConfigurationError("quantile must lie in [0, 1)")
        k = int(np.floor(quantile * len(ids)))
        ranked = sorted(ids, key=lambda nid: (scores[nid], nid))
        doomed = ranked[:k]
    if len(doomed) >= len(ids):
        raise ConfigurationError("pruning would remove every node")
    gone = set(doomed)
    out = NetworkGraph(
        positions={nid: p for nid, p in graph.positions.items() if nid not in gone},
        sign={nid: s for nid, s in graph.sign.items() if nid not in gone},
        edges={k: w for k, w in graph.edges.items() if k[0] not in gone and k[1] not in gone},
        input_edges={k: w for k, w in graph.input_edges.items() if k[1] not in gone},
        n_encoders=graph.n_encoders,
    )
    return out, sorted(doomed)


# --- step 3: edge delocalization --------------------------------------------------


def delocalize_edges(
    graph: NetworkGraph, m: int, seed: int, w_scale: float = 1.0
) -> tuple[NetworkGraph, list[tuple[int, int]], bool]:
    """Greedily add m new edges between 2-hop pairs, maximizing degree variance.

    Candidates are ordered pairs (u, v), not already edges, with u inside v's
    undirected 2-hop neighborhood, snapshotted before any additions. Each
    greedy pick maximizes the variance gain (equivalently the endpoint degree
    sum), ties broken lexicographically. Returns the new graph, the added
    edges, and a flag set when the candidate pool ran short.
    """
    if m < 0:
        raise ConfigurationError("m must be non-negative")
    ids = graph.neuron_ids()
    nb = _neighbor_sets(graph)
    two_hop = {}
    for v in ids:
        reach = set(nb[v])
        for u in nb[v]:
            reach |= nb[u]
        reach.discard(v)
        two_hop[v] = reach
    candidates = set()
    for v in ids:
        for u in two_hop[v]:
            if (u, v) not in graph.edges and u != v:
                candidates.add((u, v))

    deg = {nid: 0 for nid in ids}
    for (pre, post) in graph.edges:
        deg[pre] += 1
        deg[post] += 1

    rng = np.random.default_rng(seed)
    out = graph.copy()
    added = []
    for _ in range(m):
        if not candidates:
            break
        best = max(candidates, key=lambda e: (deg[e[0]] + deg[e[1]], (-e[0], -e[1])))
        candidates.discard(best)
        u, v = best
        weight = float(graph.sign[u] * w_scale * (1.0 - rng.random()))
        out.edges[best] = weight
        deg[u] += 1
        deg[v] += 1
        added.append(best)
    return out, added, len(added) < m


# --- step 4: timescale retuning ----------------------------------------------------


def _resample_taus(
    graph: NetworkGraph, dist: ParamDistributionSet, seed: int, tau_floor: float = 5.0
) -> dict[int, float]:
    rng = np.random.default_rng(seed)
    ids = graph.neuron_ids()
    te = dist.tau_m_exc.sample(rng, len(ids))
    ti = dist.tau_m_inh.sample(rng, len(ids))
    return {
        nid: float(max(te[k] if graph.sign[nid] > 0 else ti[k], tau_floor))
        for k, nid in enumerate(ids)
    }


def lambda_max(a: np.ndarray) -> float:
    return float(np.max(np.linalg.eigvals(a).real))


def optimize_timescales(
    graph: NetworkGraph,
    params: dict[int, NeuronParams],
    lyap_matrix: LyapunovMatrix,
    budget: int,
    seed: int,
    base: ParamDistributionSet | None = None,
    tau_floor: float = 5.0,
) -> tuple[dict[int, NeuronParams], ParamDistributionSet, float]:
    """Search membrane time-constant distributions that flatten the leading eigenvalue.

    The objective is -|max real eigenvalue| of the linearization rebuilt with
    time constants resampled from the candidate distributions; maximizing it
    drives the pruned system toward the stability edge. Returns updated
    parameters, the winning distribution pair, and its objective value.
    """
    if budget < 5:
        raise ConfigurationError("timescale search needs a budget of at least 5")
    base = base or ParamDistributionSet()
    space = SearchSpace(
        bounds={
            "tau_m_exc": ((2.0, 20.0), (0.5, 6.0)),
            "tau_m_inh": ((2.0, 20.0), (0.25, 4.0)),
        },
        base=base,
    )
    seed_seq = np.random.SeedSequence(seed)
    tau_seed = int(seed_seq.generate_state(1)[0])

    def objective(dist: ParamDistributionSet) -> float:
        taus = _resample_taus(graph, dist, tau_seed, tau_floor)
        trial = {nid: replace(params[nid], tau_m=taus[nid]) for nid in taus}
        system = linearize(graph, trial, lyap_matrix)
        return -abs(lambda_max(system.a))

    result = bo_loop(objective, space, budget=budget, seed=seed)
    taus = _resample_taus(graph, result.best_point, tau_seed, tau_floor)
    new_params = {nid: replace(params[nid], tau_m=taus[nid]) for nid in taus}
    return new_params, result.best_point, result.best_value


# --- the full pipeline ---------------------------------------------------------------


@dataclass(frozen=True)
class PruneIterationLog:
    iter: int
    n_neurons: int
    n_synapses: int
    density: float
    lambda_max: float
    degree_var: float
    shift_applied: float
    seed: int

    def as_dict(self) -> dict:
        return {
            "iter": self.iter,
            "n_neurons": self.n_neurons,
            "n_synapses": self.n_synapses,
            "density": self.density,
            "lambda_max": self.lambda_max,
            "degree_var": self.degree_var,
            "shift_applied": self.shift_applied,
            "seed": self.seed,
        }


@dataclass
class PruneRun:
    model: ReservoirModel
    logs: list[PruneIterationLog]
    removed_nodes: list[int]
    iteration_models: list[ReservoirModel] | None = None


def write_iteration_log(logs, path):
    lines = [json.dumps(log.as_dict(), sort_keys=True) for log in logs]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def run_pruning(
    model: ReservoirModel,
    config: PruneConfig,
    seed: int,
    target_synapses: int | None = None,
    keep_intermediate: bool = False,
) -> PruneRun:
    """Iterate the four pruning steps; stops early at a synapse-count target.

    Per iteration the logged lambda_max and shift refer to the linearization
    the iteration pruned, while the size columns describe the graph after the
    iteration finished. Plasticity parameter maps are restricted to surviving
    synapses. Task data never enters: the pipeline sees only the graph, its
    dynamics, the config, and the seed.
    """
    seeds = np.random.SeedSequence(seed).spawn(max(config.iterations, 1))
    current = model
    logs: list[PruneIterationLog] = []
    removed_all: list[int] = []
    intermediates: list[ReservoirModel] = []
    for it in range(config.iterations):
        it_seed = seeds[it]
        sub = it_seed.generate_state(4)
        node_lyap = estimate_node_lyapunov(
            current,
            horizon=config.lyap_horizon,
            n_perturbations=config.n_perturbations,
            delta0=config.delta0,
            seed=int(sub[0]),
        )
        lmat = build_lyapunov_matrix(
            current.graph, node_lyap, epsilon=config.lyap_epsilon, multiplier=config.pool_multiplier
        )
        system = linearize(current.graph, current.neuron_params, lmat, config.noise_sigma)
        lam = lambda_max(system.a)
        cov = stationary_covariance(system.a, config.noise_sigma, config.hurwitz_margin)

        graph, offsets = prune_synapses(
            current.graph, current.neuron_params, lmat, cov, config, int(sub[1])
        )
        params = dict(current.neuron_params)
        if config.diagonal_mode == "perturb":
            for nid, off in offsets.items():
                if off != 0.0:
                    params[nid] = replace(params[nid], v_rest=params[nid].v_rest + off)

        if config.centrality_threshold is not None:
            graph, removed = prune_nodes(graph, threshold=config.centrality_threshold)
        else:
            graph, removed = prune_nodes(graph, quantile=config.centrality_quantile)
        removed_all.extend(removed)
        for nid in removed:
            params.pop(nid, None)

        graph, _, _ = delocalize_edges(graph, config.m_delocalize, int(sub[2]), config.w_scale)

        current = replace(current, graph=graph, neuron_params=params)
        current.invalidate_rate_cache()
        if config.timescale_budget >= 5:
            lmat_now = build_lyapunov_matrix(
                graph, node_lyap, epsilon=config.lyap_epsilon, multiplier=config.pool_multiplier
            )
            new_params, _, _ = optimize_timescales(
                graph, current.neuron_params, lmat_now, config.timescale_budget, int(sub[3])
            )
            current = replace(current, neuron_params=new_params)
            current.invalidate_rate_cache()
        current = _restrict_plasticity(current)

        logs.append(
            PruneIterationLog(
                iter=it,
                n_neurons=current.graph.n_neurons,
                n_synapses=current.graph.n_synapses,
                density=current.graph.density(),
                lambda_max=lam,
                degree_var=degree_variance(current.graph),
                shift_applied=cov.shift_applied,
                seed=seed,
            )
        )
        if keep_intermediate:
            intermediates.append(current)
        if target_synapses is not None and current.graph.n_synapses <= target_synapses:
            break
    return PruneRun(
        model=current,
        logs=logs,
        removed_nodes=removed_all,
        iteration_models=intermediates if keep_intermediate else None,
    )


def _restrict_plasticity(model: ReservoirModel) -> ReservoirModel:
    stdp = model.stdp_params
    if stdp is not None:
        stdp = {k: v for k, v in stdp.items() if k in model.graph.edges}
        for k in model.graph.edges:
            if k not in stdp:
                # edges added by delocalization inherit the profile of a sibling synapse
                donor = next(iter(model.stdp_params.values()))
                stdp[k] = donor
    in_stdp = model.input_stdp_params
    if in_stdp is not None:
        in_stdp = {k: v for k, v in in_stdp.items() if k in model.graph.input_edges}
    if stdp is not model.stdp_params or in_stdp is not model.input_stdp_params:
        return replace(model, stdp_params=stdp, input_stdp_params=in_stdp)
    return model


def run_activity_pruning(
    model: ReservoirModel,
    config: PruneConfig,
    seed: int,
    target_synapses: int | None = None,
    probe_duration: float = 200.0,
    max_iterations: int | None = None,
    keep_intermediate: bool = False,
) -> PruneRun:
    """Comparator: per iteration, drop the lowest-firing-rate nodes under a fixed probe.

    The probe is seeded white noise through the encoders; ranking uses the
    full-window firing rate with ids breaking ties. Iterates until the
    iteration count (or synapse target) is hit.
    """
    if model.graph.n_encoders < 1:
        raise ConfigurationError("activity pruning needs at least one encoder")
    seed_seq = np.random.SeedSequence(seed)
    probe_seed, enc_seed = (int(s) for s in seed_seq.generate_state(2))
    iterations = max_iterations if max_iterations is not None else config.iterations
    n_samples = int(round(probe_duration / model.dt))
    rng = np.random.default_rng(probe_seed)
    signal = rng.random(n_samples)
    enc_cfg = RateEncoderConfig(n_encoders=model.graph.n_encoders, max_rate=200.0, window=model.dt)

    current = model
    logs: list[PruneIterationLog] = []
    removed_all: list[int] = []
    intermediates: list[ReservoirModel] = []
    for it in range(iterations):
        spikes = rate_encode(signal, enc_cfg, model.dt, enc_seed)
        result, _ = current.simulate(input_spikes=spikes, seed=probe_seed)
        rates = firing_rates(result.record)
        ids = current.graph.neuron_ids()
        k = int(np.floor(config.centrality_quantile * len(ids)))
        ranked = sorted(ids, key=lambda nid: (rates[nid], nid))
        doomed = set(ranked[:k])
        if len(doomed) >= len(ids):
            raise ConfigurationError("activity pruning would remove every node")
        graph = NetworkGraph(
            positions={n: p for n, p in current.graph.positions.items() if n not in doomed},
            sign={n: s for n, s in current.graph.sign.items() if n not in doomed},
            edges={e: w for e, w in current.graph.edges.items() if e[0] not in doomed and e[1] not in doomed},
            input_edges={e: w for e, w in current.graph.input_edges.items() if e[1] not in doomed},
            n_encoders=current.graph.n_encoders,
        )
        params = {n: p for n, p in current.neuron_params.items() if n not in doomed}
        current = replace(current, graph=graph, neuron_params=params)
        current.invalidate_rate_cache()
        current = _restrict_plasticity(current)
        removed_all.extend(sorted(doomed))
        logs.append(
            PruneIterationLog(
                iter=it,
                n_neurons=graph.n_neurons,
                n_synapses=graph.n_synapses,
                density=graph.density(),
                lambda_max=float("nan"),
                degree_var=degree_variance(graph),
                shift_applied=0.0,
                seed=seed,
            )
        )
        if keep_intermediate:
            intermediates.append(current)
        if target_synapses is not None and graph.n_synapses <= target_synapses:
            break
    return PruneRun(
        model=current,
        logs=logs,
        removed_nodes=removed_all,
        iteration_models=intermediates if keep_intermediate else None,
    )
