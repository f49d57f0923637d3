"""Encoding analog signals into encoder spikes and reading network state back out."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .neurons import EncoderSpikes, SpikeRecord
from .topology import NetworkGraph, betweenness_centrality


@dataclass(frozen=True)
class RateEncoderConfig:
    """Poisson rate encoding of values in [0, 1].

    Each signal sample is held for ``window`` ms; during that window every
    encoder emits Poisson spike counts per step at value * max_rate. The
    temporal-difference mode first-differences the signal and encodes the
    magnitude of the change, used for classification inputs.
    """

    n_encoders: int = 8
    max_rate: float = 100.0
    window: float = 1.0
    mode: str = "poisson_rate"

    def __post_init__(self):
        if self.n_encoders < 1:
            raise ConfigurationError("need at least one encoder")
        if self.max_rate <= 0.0:
            raise ConfigurationError("max_rate must be positive")
        if self.window <= 0.0:
            raise ConfigurationError("window must be positive")
        if self.mode not in ("poisson_rate", "temporal_difference"):
            raise ConfigurationError(f"unknown encoder mode {self.mode!r}")


def rate_encode(signal: np.ndarray, config: RateEncoderConfig, dt: float, seed: int) -> EncoderSpikes:
    """Encode a [0, 1] signal into per-step Poisson spike counts.

    A 1-D signal drives every encoder with the same value; a 2-D signal of
    shape (samples, n_encoders) drives them separately.
    """
    sig = np.asarray(signal, dtype=float)
    if sig.ndim == 1:
        sig = np.repeat(sig[:, None], config.n_encoders, axis=1)
    if sig.ndim != 2 or sig.shape[1] != config.n_encoders:
        raise ConfigurationError(f"signal shape {sig.shape} does not fit {config.n_encoders} encoders")
    if config.mode == "temporal_difference":
        sig = np.abs(np.diff(sig, axis=0, prepend=sig[:1]))
    if np.any(sig < 0.0) or np.any(sig > 1.0) or not np.all(np.isfinite(sig)):
        raise ConfigurationError("signal values must lie in [0, 1]")
    steps_per_sample = int(round(config.window / dt))
    if abs(steps_per_sample * dt - config.window) > 1e-9 or steps_per_sample < 1:
        raise ConfigurationError("encoder window must be a positive multiple of dt")
    rng = np.random.default_rng(seed)
    # rate in Hz, dt in ms
    lam = sig * config.max_rate * dt / 1000.0
    lam_steps = np.repeat(lam, steps_per_sample, axis=0)
    counts = rng.poisson(lam_steps)
    return EncoderSpikes(counts=counts, dt=dt)


@dataclass
class StateFeatures:
    """Exponentially filtered spike features sampled at explicit timestamps."""

    values: np.ndarray
    timestamps: np.ndarray
    neuron_ids: tuple[int, ...]
    filter_tau: float


def extract_features(
    record: SpikeRecord,
    sampled_neurons,
    filter_tau: float,
    timestamps,
) -> StateFeatures:
    """Filter each sampled neuron's spike train: f(t) = sum over spikes of exp(-(t - t_s) / tau).

    Spikes after a timestamp do not contribute to it. Computed recursively per
    chunk so long runs stay numerically stable.
    """
    if filter_tau <= 0.0:
        raise ConfigurationError("filter_tau must be positive")
    ts = np.asarray(timestamps, dtype=float)
    if ts.ndim != 1 or len(ts) == 0:
        raise ConfigurationError("need a non-empty 1-D timestamp array")
    if np.any(np.diff(ts) < 0.0):
        raise ConfigurationError("timestamps must be non-decreasing")
    if ts[0] < 0.0 or ts[-1] > record.duration + 1e-9:
        raise ConfigurationError("timestamps must lie within [0, duration]")
    sampled = list(sampled_neurons)
    for nid in sampled:
        if nid not in record.ids:
            raise ConfigurationError(f"sampled neuron {nid} is not in the record")

    values = np.zeros((len(ts), len(sampled)))
    for col, nid in enumerate(sampled):
        spikes = np.sort(record.spikes_of(nid))
        f = 0.0
        prev_t = 0.0
        pos = 0
        for row, t in enumerate(ts):
            hi = np.searchsorted(spikes, t, side="right")
            chunk = spikes[pos:hi]
            f = f * math.exp(-(t - prev_t) / filter_tau)
            if len(chunk):
                f += float(np.exp(-(t - chunk) / filter_tau).sum())
            values[row, col] = f
            prev_t = t
            pos = hi
    return StateFeatures(values=values, timestamps=ts, neuron_ids=tuple(sampled), filter_tau=filter_tau)


@dataclass
class ReadoutLayer:
    """Linear (or one-hidden-layer) readout trained by ridge regression."""

    sampled_neurons: tuple[int, ...]
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray] = field(default_factory=list)
    regularization: float = 0.0

    def predict(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.layer_sizes[0]:
            raise ConfigurationError(
                f"feature width {x.shape[1]} does not match readout input {self.layer_sizes[0]}"
            )
        if len(self.weights) == 2:
            x = np.tanh(x @ self.weights[0])
            return x @ self.weights[1]
        return x @ self.weights[0]


def _ridge(x: np.ndarray, y: np.ndarray, reg: float) -> np.ndarray:
    gram = x.T @ x + reg * np.eye(x.shape[1])
    return np.linalg.solve(gram, x.T @ y)


def fit_linear_readout(features, targets, regularization: float = 0.0) -> ReadoutLayer:
    """Ridge regression minimizing ||Xw - y||^2 + reg * ||w||^2 (no intercept)."""
    if isinstance(features, StateFeatures):
        x = features.values
        sampled = features.neuron_ids
    else:
        x = np.asarray(features, dtype=float)
        sampled = ()
    y = np.asarray(targets, dtype=float)
    if x.ndim != 2:
        raise ConfigurationError("features must be 2-D")
    if x.shape[0] < 2:
        raise ConfigurationError("need at least two feature rows")
    if y.shape[0] != x.shape[0]:
        raise ConfigurationError("targets and features disagree on row count")
    if regularization < 0.0:
        raise ConfigurationError("regularization must be non-negative")
    w = _ridge(x, y if y.ndim > 1 else y[:, None], regularization)
    n_out = w.shape[1]
    return ReadoutLayer(
        sampled_neurons=tuple(sampled),
        layer_sizes=(x.shape[1], n_out),
        weights=[w],
        regularization=regularization,
    )


def fit_hidden_readout(
    features, targets, hidden: int = 20, regularization: float = 0.0, seed: int = 0
) -> ReadoutLayer:
    """Random fixed projection to ``hidden`` tanh units, then a ridge layer."""
    if isinstance(features, StateFeatures):
        x = features.values
        sampled = features.neuron_ids
    else:
        x = np.asarray(features, dtype=float)
        sampled = ()
    y = np.asarray(targets, dtype=float)
    if hidden < 1:
        raise ConfigurationError("hidden layer must have at least one unit")
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, 1.0 / np.sqrt(max(x.shape[1], 1)), size=(x.shape[1], hidden))
    h = np.tanh(x @ w1)
    w2 = _ridge(h, y if y.ndim > 1 else y[:, None], regularization)
    return ReadoutLayer(
        sampled_neurons=tuple(sampled),
        layer_sizes=(x.shape[1], hidden, w2.shape[1]),
        weights=[w1, w2],
        regularization=regularization,
    )


def select_readout_neurons(graph: NetworkGraph, fraction: float = 0.1) -> list[int]:
    """The ceil(fraction * N) neurons with the highest betweenness, ties by lower id."""
    if not (0.0 < fraction <= 1.0):
        raise ConfigurationError("fraction must lie in (0, 1]")
    scores = betweenness_centrality(graph)
    k = math.ceil(fraction * graph.n_neurons)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return sorted(nid for nid, _ in ranked[:k])
