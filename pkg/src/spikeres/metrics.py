"""Capacity, efficiency, diversity, and forecast-quality metrics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .neurons import SpikeRecord
from .readout import StateFeatures, _ridge
from .topology import NetworkGraph


@dataclass(frozen=True)
class CapacityReport:
    per_delay: np.ndarray
    total: float
    tau_max: int


def memory_capacity(
    features,
    input_signal: np.ndarray,
    tau_max: int = 100,
    regularization: float = 1e-6,
    train_fraction: float = 0.7,
) -> CapacityReport:
    """Delay-reconstruction capacity summed over tau = 1 .. tau_max.

    One ridge readout per delay is fit on the first train_fraction of usable
    rows; the per-delay score is the squared Pearson correlation between its
    held-out predictions and the delayed input. Feature rows must align with
    the signal samples one-to-one.
    """
    x = features.values if isinstance(features, StateFeatures) else np.asarray(features, dtype=float)
    u = np.asarray(input_signal, dtype=float)
    if u.ndim != 1:
        raise ConfigurationError("input signal must be 1-D")
    if x.shape[0] != len(u):
        raise ConfigurationError("feature rows must match signal samples")
    if tau_max < 1:
        raise ConfigurationError("tau_max must be at least 1")
    n_usable = len(u) - tau_max
    if n_usable < 10 * x.shape[1]:
        raise ConfigurationError(
            f"signal too short: {n_usable} usable samples for {x.shape[1]} sampled neurons"
        )
    if np.var(u) == 0.0:
        raise ConfigurationError("input signal has zero variance")

    rows = np.arange(tau_max, len(u))
    n_train = int(round(train_fraction * n_usable))
    if n_train < 2 or n_usable - n_train < 2:
        raise ConfigurationError("split leaves too few rows on one side")
    x_all = x[rows]
    x_train, x_test = x_all[:n_train], x_all[n_train:]
    xc = x_train - x_train.mean(axis=0)

    per_delay = np.zeros(tau_max)
    for tau in range(1, tau_max + 1):
        y = u[rows - tau]
        y_train, y_test = y[:n_train], y[n_train:]
        yc = y_train - y_train.mean()
        w = _ridge(xc, yc[:, None], regularization)
        pred = (x_test - x_train.mean(axis=0)) @ w[:, 0] + y_train.mean()
        vy = np.var(y_test)
        vp = np.var(pred)
        if vy == 0.0 or vp == 0.0:
            per_delay[tau - 1] = 0.0
            continue
        cov = np.mean((y_test - y_test.mean()) * (pred - pred.mean()))
        c = cov**2 / (vy * vp)
        per_delay[tau - 1] = min(max(c, 0.0), 1.0)
    return CapacityReport(per_delay=per_delay, total=float(per_delay.sum()), tau_max=tau_max)


def spike_efficiency(capacity: float, mean_spike_count: float) -> float:
    """Capacity earned per emitted spike: C / (mean spikes per neuron)."""
    if mean_spike_count <= 0.0:
        raise ConfigurationError("mean spike count must be positive to define efficiency")
    return capacity / mean_spike_count


def effective_rank(matrix: np.ndarray, threshold: float = 0.99) -> int:
    """Smallest k whose top-k singular values hold ``threshold`` of the spectrum sum."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ConfigurationError("effective rank needs a non-empty 2-D matrix")
    if not (0.0 < threshold <= 1.0):
        raise ConfigurationError("threshold must lie in (0, 1]")
    s = np.linalg.svd(m, compute_uv=False)
    total = s.sum()
    if total == 0.0:
        return 0
    cum = np.cumsum(s)
    return int(np.searchsorted(cum, threshold * total - 1e-12) + 1)


def heterogeneity_score(samples: np.ndarray) -> float:
    """Generalized variance: determinant of the sample covariance of parameter draws.

    Rows are draws, columns are parameters. With no more draws than parameters
    the sample covariance is singular by construction; the score degenerates
    to 0 and a warning is emitted.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] < 1:
        raise ConfigurationError("samples must be a 2-D (draws, parameters) array")
    if s.shape[0] <= s.shape[1]:
        warnings.warn("fewer draws than parameters: covariance is degenerate, score set to 0")
        return 0.0
    cov = np.cov(s, rowvar=False)
    cov = np.atleast_2d(cov)
    return float(np.linalg.det(cov))


@dataclass(frozen=True)
class EnergyReport:
    total_sops: int
    energy: float
    sop_ratio_vs_dense: float | None = None


def count_sops(
    record: SpikeRecord,
    graph: NetworkGraph,
    dense_graph: NetworkGraph | None = None,
    energy_per_sop: float = 1.0,
) -> EnergyReport:
    """Synaptic operations: each spike costs the spiking neuron's surviving out-degree.

    Only synapses whose source and target both exist in ``graph`` count.
    When the unpruned parent is given, the ratio parent / pruned is reported.
    """

    def total(g: NetworkGraph) -> int:
        out_deg = dict.fromkeys(g.positions, 0)
        for (pre, post) in g.edges:
            out_deg[pre] += 1
        tot = 0
        counts = record.counts()
        for nid, c in counts.items():
            if nid in out_deg:
                tot += c * out_deg[nid]
        return tot

    sops = total(graph)
    ratio = None
    if dense_graph is not None:
        pruned = sops
        dense = total(dense_graph)
        if pruned == 0:
            raise ConfigurationError("pruned network performed no synaptic operations")
        ratio = dense / pruned
    return EnergyReport(total_sops=sops, energy=energy_per_sop * sops, sop_ratio_vs_dense=ratio)


def nrmse(forecast: np.ndarray, truth: np.ndarray, sigma_per_dim: np.ndarray) -> np.ndarray:
    """Per-timestep RMSE across dimensions, each normalized by its long-term sigma."""
    f = np.atleast_2d(np.asarray(forecast, dtype=float))
    t = np.atleast_2d(np.asarray(truth, dtype=float))
    if f.shape != t.shape:
        raise ConfigurationError(f"forecast shape {f.shape} does not match truth {t.shape}")
    sig = np.asarray(sigma_per_dim, dtype=float)
    if sig.ndim == 0:
        sig = np.full(f.shape[1], float(sig))
    if sig.shape != (f.shape[1],):
        raise ConfigurationError("need one sigma per dimension")
    if np.any(sig <= 0.0):
        raise ConfigurationError("sigmas must be positive")
    z = (f - t) / sig
    return np.sqrt(np.mean(z**2, axis=1))


def valid_prediction_time(rmse_series: np.ndarray, epsilon: float = 0.1) -> int:
    """Number of timesteps whose normalized RMSE stays strictly below epsilon."""
    r = np.asarray(rmse_series, dtype=float)
    if r.ndim != 1:
        raise ConfigurationError("rmse series must be 1-D")
    if epsilon <= 0.0:
        raise ConfigurationError("epsilon must be positive")
    return int(np.sum(r < epsilon))
