"""Experiment protocols: model assembly, streaming simulation, capacity and
separation measurements, closed-loop forecasting, classification, and the
distribution-level optimization objectives. The command-line runner and the
test suite share these entry points."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import engine
from .bayesopt import ParamDistributionSet
from .errors import ConfigurationError, StorageError
from .metrics import (
    count_sops,
    effective_rank,
    memory_capacity,
    nrmse,
    spike_efficiency,
    valid_prediction_time,
)
from .model import ReservoirModel
from .neurons import (
    HeterogeneityProfile,
    NeuronParams,
    SpikeRecord,
    compile_network,
    sample_params,
    spike_stats,
)
from .plasticity import StdpParams, StdpProfile, sample_stdp_params
from .readout import RateEncoderConfig, extract_features, fit_linear_readout, rate_encode
from .topology import TopologyConfig, build_recurrent_graph, graph_from_json, graph_to_json


def build_model(
    topology: TopologyConfig,
    neuron_profile: HeterogeneityProfile,
    stdp_profile: StdpProfile | None = None,
    seed: int = 0,
    dt: float = 0.5,
    plastic_inputs: bool = True,
    readout_fraction: float = 0.1,
    filter_tau: float = 20.0,
) -> ReservoirModel:
    """Assemble a simulable model: graph, neuron draws, optional plasticity draws.

    One seed fans out to independent streams for structure, neuron parameters,
    and the two plasticity populations, so models differing only in one
    profile share everything else.
    """
    sub = np.random.SeedSequence(seed).generate_state(4)
    graph = build_recurrent_graph(topology, int(sub[0]))
    params = sample_params(neuron_profile, graph, int(sub[1]))
    stdp = in_stdp = None
    if stdp_profile is not None:
        stdp = sample_stdp_params(stdp_profile, graph, int(sub[2]), which="recurrent")
        if plastic_inputs:
            in_stdp = sample_stdp_params(stdp_profile, graph, int(sub[3]), which="input")
    return ReservoirModel(
        graph=graph,
        neuron_params=params,
        stdp_params=stdp,
        input_stdp_params=in_stdp,
        dt=dt,
        readout_fraction=readout_fraction,
        filter_tau=filter_tau,
    )


class StreamEncoder:
    """Poisson rate encoder whose randomness persists across streamed windows."""

    def __init__(self, n_encoders: int, max_rate: float, window: float, dt: float, seed: int):
        config = RateEncoderConfig(n_encoders=n_encoders, max_rate=max_rate, window=window)
        steps = int(round(window / dt))
        if abs(steps * dt - window) > 1e-9 or steps < 1:
            raise ConfigurationError("encoder window must be a positive multiple of dt")
        self.config = config
        self.steps_per_sample = steps
        self.dt = dt
        self._lam_scale = max_rate * dt / 1000.0
        self._rng = np.random.default_rng(seed)

    def encode(self, values: np.ndarray) -> np.ndarray:
        """Counts for one window (1-D values) or a run of windows (2-D)."""
        v = np.atleast_2d(np.asarray(values, dtype=float))
        if v.shape[1] != self.config.n_encoders:
            raise ConfigurationError("value width does not match the encoder count")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ConfigurationError("encoder values must lie in [0, 1]")
        lam = np.repeat(v * self._lam_scale, self.steps_per_sample, axis=0)
        return self._rng.poisson(lam)


class FeatureAccumulator:
    """Streaming version of the exponential spike filter, fed chunk by chunk."""

    def __init__(self, neuron_ids, filter_tau: float):
        if filter_tau <= 0.0:
            raise ConfigurationError("filter_tau must be positive")
        self.neuron_ids = tuple(neuron_ids)
        self.tau = filter_tau
        self.values = np.zeros(len(self.neuron_ids))
        self.t = 0.0
        size = max(self.neuron_ids) + 1 if self.neuron_ids else 0
        self._lookup = np.full(size, -1, dtype=np.int64)
        for k, nid in enumerate(self.neuron_ids):
            self._lookup[nid] = k

    def advance(self, t_end: float, spike_neurons: np.ndarray, spike_times: np.ndarray) -> np.ndarray:
        """Decay to t_end, fold in this chunk's spikes, return the feature row."""
        if t_end < self.t:
            raise ConfigurationError("feature time must not move backwards")
        self.values = self.values * np.exp(-(t_end - self.t) / self.tau)
        neurons = np.asarray(spike_neurons, dtype=np.int64)
        times = np.asarray(spike_times, dtype=float)
        if neurons.size:
            in_range = neurons < self._lookup.size
            slots = np.where(in_range, self._lookup[np.minimum(neurons, self._lookup.size - 1)], -1)
            mask = slots >= 0
            np.add.at(self.values, slots[mask], np.exp(-(t_end - times[mask]) / self.tau))
        self.t = t_end
        return self.values.copy()


class SimSession:
    """Incremental spiking run that keeps membrane, synapse, and trace state live.

    Closed-loop protocols need to alternate between advancing the network and
    reading it out; this wraps the array engine so each window continues
    exactly where the previous one stopped, including the one-step recurrent
    delivery queue.
    """

    def __init__(self, model: ReservoirModel, plastic: bool = False, keep_spikes: bool = True):
        stdp = model.stdp_params if plastic else None
        in_stdp = model.input_stdp_params if plastic else None
        self.net, ids = compile_network(
            model.graph, model.neuron_params, model.dt,
            tau_syn=model.tau_syn, stdp_params=stdp, input_stdp_params=in_stdp,
        )
        self.ids = tuple(ids)
        self._id_arr = np.asarray(ids, dtype=np.int64)
        n = len(ids)
        self.v = np.array([model.neuron_params[nid].v_rest for nid in ids], dtype=float)
        self.syn_current = np.zeros(n)
        self.refrac_until = np.full(n, -np.inf)
        self.pending = None
        self.t = 0.0
        self.dt = model.dt
        self.keep_spikes = keep_spikes
        self._chunks: list[tuple[np.ndarray, np.ndarray]] = []

    def run_window(self, enc_counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Advance by one window of encoder counts; returns (neuron ids, spike times)."""
        counts = np.asarray(enc_counts)
        if counts.ndim != 2:
            raise ConfigurationError("encoder counts must be 2-D (steps, encoders)")
        sp_idx, sp_t, self.pending = engine.run_steps(
            self.net, self.v, self.syn_current, self.refrac_until,
            self.t, counts.shape[0], counts, None, self.pending,
        )
        self.t += counts.shape[0] * self.dt
        neurons = self._id_arr[sp_idx]
        if self.keep_spikes:
            self._chunks.append((neurons, sp_t))
        return neurons, sp_t

    def record(self) -> SpikeRecord:
        if self._chunks:
            neurons = np.concatenate([c[0] for c in self._chunks])
            times = np.concatenate([c[1] for c in self._chunks])
        else:
            neurons = np.zeros(0, dtype=np.int64)
            times = np.zeros(0)
        return SpikeRecord(ids=self.ids, neuron=neurons, time=times, duration=self.t)


# --- white-noise memory capacity -------------------------------------------------


@dataclass(frozen=True)
class CapacityRunReport:
    capacity: float
    per_delay: np.ndarray
    s_tilde: float
    efficiency: float
    n_samples: int
    tau_max: int
    total_sops: float

    def as_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "s_tilde": self.s_tilde,
            "efficiency": self.efficiency,
            "n_samples": self.n_samples,
            "tau_max": self.tau_max,
            "total_sops": self.total_sops,
        }


def run_capacity_experiment(
    model: ReservoirModel,
    n_samples: int = 400,
    tau_max: int = 100,
    washout: int = 50,
    window: float = 1.0,
    max_rate: float = 200.0,
    seed: int = 0,
    stdp_train_samples: int = 0,
    regularization: float = 1e-6,
) -> tuple[CapacityRunReport, ReservoirModel]:
    """Delay-reconstruction capacity and spike cost under white-noise drive.

    An optional unsupervised plasticity phase runs first on an independent
    noise stream; the evaluation run is always non-plastic. Spike counts come
    from the evaluation run only, so capacity and cost describe the same
    activity.
    """
    sub = np.random.SeedSequence(seed).generate_state(4)
    rng = np.random.default_rng(int(sub[0]))
    enc_cfg = RateEncoderConfig(
        n_encoders=model.graph.n_encoders, max_rate=max_rate, window=window
    )
    current = model
    if stdp_train_samples > 0:
        train_signal = rng.random(stdp_train_samples)
        train_spikes = rate_encode(train_signal, enc_cfg, model.dt, int(sub[1]))
        _, current = current.simulate(input_spikes=train_spikes, plastic=True)
    signal = rng.random(n_samples)
    spikes = rate_encode(signal, enc_cfg, model.dt, int(sub[2]))
    result, _ = current.simulate(input_spikes=spikes)
    sampled = current.readout_neurons()
    stamps = (np.arange(n_samples) + 1) * window
    feats = extract_features(result.record, sampled, current.filter_tau, stamps)
    report = memory_capacity(
        feats.values[washout:], signal[washout:], tau_max=tau_max, regularization=regularization
    )
    stats = spike_stats(result.record)
    eff = spike_efficiency(report.total, stats.s_tilde)
    energy = count_sops(result.record, current.graph)
    return (
        CapacityRunReport(
            capacity=report.total,
            per_delay=report.per_delay,
            s_tilde=stats.s_tilde,
            efficiency=eff,
            n_samples=n_samples,
            tau_max=tau_max,
            total_sops=energy.total_sops,
        ),
        current,
    )


# --- stimulus separation ----------------------------------------------------------


@dataclass(frozen=True)
class SeparationReport:
    rank: int
    state_matrix: np.ndarray
    n_stimuli: int


def run_separation_experiment(
    model: ReservoirModel,
    n_stimuli: int = 20,
    input_duration: float = 100.0,
    window: float = 1.0,
    max_rate: float = 200.0,
    seed: int = 0,
) -> SeparationReport:
    """Effective rank of the readout-state matrix across distinct stimuli.

    Each stimulus is a constant rate template held for the input period; the
    state row is the filtered readout feature vector at stimulus end. Higher
    rank means the network keeps more stimuli linearly distinguishable.
    """
    if n_stimuli < 2:
        raise ConfigurationError("need at least two stimuli to measure separation")
    sub = np.random.SeedSequence(seed).generate_state(1 + n_stimuli)
    rng = np.random.default_rng(int(sub[0]))
    n_enc = model.graph.n_encoders
    templates = 0.1 + 0.8 * rng.random((n_stimuli, n_enc))
    n_windows = int(round(input_duration / window))
    if n_windows < 1:
        raise ConfigurationError("input duration shorter than one window")
    enc_cfg = RateEncoderConfig(n_encoders=n_enc, max_rate=max_rate, window=window)
    sampled = model.readout_neurons()
    rows = []
    for s in range(n_stimuli):
        values = np.tile(templates[s], (n_windows, 1))
        spikes = rate_encode(values, enc_cfg, model.dt, int(sub[1 + s]))
        result, _ = model.simulate(input_spikes=spikes)
        feats = extract_features(result.record, sampled, model.filter_tau, [input_duration])
        rows.append(feats.values[0])
    matrix = np.vstack(rows)
    return SeparationReport(rank=effective_rank(matrix), state_matrix=matrix, n_stimuli=n_stimuli)


# --- classification ----------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    n_train: int
    n_test: int
    rank: int
    confusion: np.ndarray

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "rank": self.rank,
            "confusion": self.confusion.tolist(),
        }


def run_classification(
    model: ReservoirModel,
    inputs: np.ndarray,
    labels: np.ndarray,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    input_duration: float = 100.0,
    rest_duration: float = 100.0,
    window: float = 1.0,
    max_rate: float = 200.0,
    seed: int = 0,
    regularization: float = 1e-4,
    plastic: bool = False,
) -> ClassificationReport:
    """Trial protocol: input period, then a silent tail; ridge on one-hot labels.

    Every trial starts from rest with identical weights (plastic mode instead
    threads weight updates through the trial sequence in index order). The
    state row per trial is the filtered feature vector at input end.
    """
    inputs = np.asarray(inputs, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if inputs.ndim != 2 or inputs.shape[1] != model.graph.n_encoders:
        raise ConfigurationError("inputs must be (trials, n_encoders)")
    if inputs.shape[0] != labels.shape[0]:
        raise ConfigurationError("labels do not align with inputs")
    n_trials = inputs.shape[0]
    n_windows = int(round(input_duration / window))
    rest_windows = int(round(rest_duration / window))
    enc_cfg = RateEncoderConfig(
        n_encoders=model.graph.n_encoders, max_rate=max_rate, window=window
    )
    seeds = np.random.SeedSequence(seed).generate_state(n_trials)
    sampled = model.readout_neurons()
    current = model
    rows = np.zeros((n_trials, len(sampled)))
    for k in range(n_trials):
        values = np.vstack(
            [np.tile(inputs[k], (n_windows, 1)), np.zeros((rest_windows, inputs.shape[1]))]
        )
        spikes = rate_encode(values, enc_cfg, model.dt, int(seeds[k]))
        result, current = current.simulate(input_spikes=spikes, plastic=plastic)
        feats = extract_features(result.record, sampled, model.filter_tau, [input_duration])
        rows[k] = feats.values[0]

    classes = np.unique(labels)
    onehot = (labels[train_idx, None] == classes[None, :]).astype(float)
    readout = fit_linear_readout(rows[train_idx], onehot, regularization=regularization)
    scores = readout.predict(rows[test_idx])
    predicted = classes[np.argmax(scores, axis=1)]
    truth = labels[test_idx]
    accuracy = float(np.mean(predicted == truth))
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    pos = {c: i for i, c in enumerate(classes.tolist())}
    for t, p in zip(truth.tolist(), predicted.tolist()):
        confusion[pos[t], pos[p]] += 1
    return ClassificationReport(
        accuracy=accuracy,
        n_train=len(train_idx),
        n_test=len(test_idx),
        rank=effective_rank(rows),
        confusion=confusion,
    )


# --- closed-loop forecasting ---------------------------------------------------------


@dataclass(frozen=True)
class ForecastReport:
    nrmse_series: np.ndarray
    mean_nrmse: float
    vpt: int
    horizon: int
    n_train: int
    predictions: np.ndarray
    truth: np.ndarray

    def as_dict(self) -> dict:
        return {
            "mean_nrmse": self.mean_nrmse,
            "vpt": self.vpt,
            "horizon": self.horizon,
            "n_train": self.n_train,
        }


def _tile_dims(values: np.ndarray, n_encoders: int) -> np.ndarray:
    """Spread D signal dimensions across n_encoders; encoder e reads dim e mod D."""
    v = np.asarray(values, dtype=float)
    cols = np.arange(n_encoders) % v.shape[-1]
    return v[..., cols]


def run_forecast(
    model: ReservoirModel,
    series: np.ndarray,
    train_samples: int = 500,
    horizon: int = 100,
    washout: int = 50,
    window: float = 1.0,
    max_rate: float = 200.0,
    seed: int = 0,
    regularization: float = 1e-4,
    stdp_train: bool = False,
) -> ForecastReport:
    """Teacher-forced readout fit, then autoregressive closed-loop prediction.

    The series is min-max scaled per dimension on the training segment for
    encoding; the readout maps the filtered network state at each window end
    to the next normalized sample. After training, predictions feed back as
    the encoder drive. Errors are normalized by the training-segment standard
    deviation per dimension.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 2:
        raise ConfigurationError("series must be 2-D (samples, dims)")
    if washout + 10 > train_samples:
        raise ConfigurationError("training segment too short after washout")
    if train_samples + horizon > series.shape[0]:
        raise ConfigurationError("series shorter than train + horizon")
    train = series[:train_samples]
    lo = train.min(axis=0)
    span = train.max(axis=0) - lo
    if np.any(span <= 0.0):
        raise ConfigurationError("a series dimension is constant on the training segment")
    u = np.clip((series - lo) / span, 0.0, 1.0)

    sub = np.random.SeedSequence(seed).generate_state(2)
    current = model
    enc_cfg = RateEncoderConfig(
        n_encoders=model.graph.n_encoders, max_rate=max_rate, window=window
    )
    if stdp_train:
        train_spikes = rate_encode(
            _tile_dims(u[:train_samples], model.graph.n_encoders),
            enc_cfg, model.dt, int(sub[0]),
        )
        _, current = current.simulate(input_spikes=train_spikes, plastic=True)

    encoder = StreamEncoder(
        n_encoders=model.graph.n_encoders, max_rate=max_rate,
        window=window, dt=model.dt, seed=int(sub[1]),
    )
    session = SimSession(current, plastic=False, keep_spikes=False)
    sampled = current.readout_neurons()
    acc = FeatureAccumulator(sampled, current.filter_tau)

    rows = np.zeros((train_samples, len(sampled)))
    for k in range(train_samples):
        counts = encoder.encode(_tile_dims(u[k], model.graph.n_encoders))
        neurons, times = session.run_window(counts)
        rows[k] = acc.advance((k + 1) * window, neurons, times)
    # row k sees input up to sample k, so its target is the next sample;
    # rows are standardized on the fit segment so the ridge penalty is scale-free
    fit_rows = rows[washout : train_samples - 1]
    targets = u[washout + 1 : train_samples]
    mu = fit_rows.mean(axis=0)
    sd = fit_rows.std(axis=0)
    sd[sd < 1e-12] = 1.0
    y_mean = targets.mean(axis=0)
    readout = fit_linear_readout(
        (fit_rows - mu) / sd, targets - y_mean,
        regularization=regularization,
    )

    def step_predict(row):
        return np.clip(readout.predict((row - mu) / sd)[0] + y_mean, 0.0, 1.0)

    predictions_u = np.zeros((horizon, series.shape[1]))
    u_hat = step_predict(rows[train_samples - 1 : train_samples])
    for h in range(horizon):
        predictions_u[h] = u_hat
        counts = encoder.encode(_tile_dims(u_hat, model.graph.n_encoders))
        neurons, times = session.run_window(counts)
        row = acc.advance((train_samples + h + 1) * window, neurons, times)
        u_hat = step_predict(row[None, :])

    predictions = lo + predictions_u * span
    truth = series[train_samples : train_samples + horizon]
    sigma = train.std(axis=0)
    err = nrmse(predictions, truth, sigma)
    return ForecastReport(
        nrmse_series=err,
        mean_nrmse=float(np.mean(err)),
        vpt=valid_prediction_time(err),
        horizon=horizon,
        n_train=train_samples,
        predictions=predictions,
        truth=truth,
    )


# --- distribution-level optimization objectives ----------------------------------------


def profiles_from_point(
    point: ParamDistributionSet,
    base: NeuronParams | None = None,
    tau_floor: float = 5.0,
) -> tuple[HeterogeneityProfile, StdpProfile]:
    """Interpret one search point as neuron and plasticity sampling profiles."""
    neuron = HeterogeneityProfile(
        tau_m_exc=point.tau_m_exc,
        tau_m_inh=point.tau_m_inh,
        base=base or NeuronParams(tau_m=20.0),
        tau_floor=tau_floor,
        bio_inspired=False,
    )
    stdp = StdpProfile(
        gain_plus=point.gain_plus,
        gain_minus=point.gain_minus,
        tau_plus=point.tau_plus,
        tau_minus=point.tau_minus,
    )
    return neuron, stdp


def make_distribution_objective(
    topology: TopologyConfig,
    metric: str = "efficiency",
    seed: int = 0,
    n_samples: int = 300,
    tau_max: int = 50,
    washout: int = 50,
    stdp_train_samples: int = 0,
    dt: float = 0.5,
    window: float = 1.0,
    max_rate: float = 200.0,
):
    """Objective over parameter distributions for the optimization loop.

    Fixed topology and evaluation seeds isolate the effect of the sampled
    distributions. ``spike_count`` is negated so every mode is maximized.
    """
    if metric not in ("capacity", "spike_count", "efficiency"):
        raise ConfigurationError(f"unknown objective metric {metric!r}")

    def objective(point: ParamDistributionSet) -> float:
        neuron_profile, stdp_profile = profiles_from_point(point)
        model = build_model(
            topology, neuron_profile,
            stdp_profile if stdp_train_samples > 0 else None,
            seed=seed, dt=dt,
        )
        report, _ = run_capacity_experiment(
            model,
            n_samples=n_samples,
            tau_max=tau_max,
            washout=washout,
            window=window,
            max_rate=max_rate,
            seed=seed,
            stdp_train_samples=stdp_train_samples,
        )
        if metric == "capacity":
            return report.capacity
        if metric == "spike_count":
            return -report.s_tilde
        return report.efficiency

    return objective


# --- snapshot persistence ----------------------------------------------------------------


def _params_payload(model: ReservoirModel) -> dict:
    neurons = [
        {
            "id": nid,
            "tau_m": p.tau_m,
            "r_m": p.r_m,
            "v_rest": p.v_rest,
            "v_threshold": p.v_threshold,
            "v_reset": p.v_reset,
            "refractory": p.refractory,
        }
        for nid, p in sorted(model.neuron_params.items())
    ]

    def stdp_rows(table):
        if table is None:
            return None
        return [
            {
                "src": k[0],
                "dst": k[1],
                "gain_plus": s.gain_plus,
                "gain_minus": s.gain_minus,
                "trace_plus": s.trace_plus,
                "trace_minus": s.trace_minus,
                "tau_plus": s.tau_plus,
                "tau_minus": s.tau_minus,
                "w_min": s.w_min,
                "w_max": s.w_max,
            }
            for k, s in sorted(table.items())
        ]

    return {
        "neurons": neurons,
        "stdp": stdp_rows(model.stdp_params),
        "input_stdp": stdp_rows(model.input_stdp_params),
        "dt": model.dt,
        "tau_syn": model.tau_syn,
        "readout_fraction": model.readout_fraction,
        "filter_tau": model.filter_tau,
    }


def params_path_for(graph_path: str) -> str:
    if graph_path.endswith(".json"):
        return graph_path[: -len(".json")] + ".params.json"
    return graph_path + ".params.json"


def save_model(model: ReservoirModel, graph_path: str) -> list[str]:
    """Write the graph snapshot and its sibling parameter file; returns both paths."""
    params_path = params_path_for(graph_path)
    try:
        with open(graph_path, "w") as fh:
            fh.write(graph_to_json(model.graph))
        with open(params_path, "w") as fh:
            json.dump(_params_payload(model), fh, sort_keys=True, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise StorageError(f"cannot write snapshot: {exc}") from exc
    return [graph_path, params_path]


def load_model(graph_path: str) -> ReservoirModel:
    """Rebuild a model from a snapshot pair written by save_model."""
    params_path = params_path_for(graph_path)
    try:
        with open(graph_path) as fh:
            graph = graph_from_json(fh.read())
        with open(params_path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise StorageError(f"cannot read snapshot: {exc}") from exc
    except ValueError as exc:
        raise StorageError(f"malformed parameter file: {exc}") from exc
    try:
        params = {
            row["id"]: NeuronParams(
                tau_m=row["tau_m"],
                r_m=row["r_m"],
                v_rest=row["v_rest"],
                v_threshold=row["v_threshold"],
                v_reset=row["v_reset"],
                refractory=row["refractory"],
            )
            for row in payload["neurons"]
        }

        def stdp_table(rows):
            if rows is None:
                return None
            return {
                (row["src"], row["dst"]): StdpParams(
                    gain_plus=row["gain_plus"],
                    gain_minus=row["gain_minus"],
                    trace_plus=row["trace_plus"],
                    trace_minus=row["trace_minus"],
                    tau_plus=row["tau_plus"],
                    tau_minus=row["tau_minus"],
                    w_min=row["w_min"],
                    w_max=row["w_max"],
                )
                for row in rows
            }

        return ReservoirModel(
            graph=graph,
            neuron_params=params,
            stdp_params=stdp_table(payload["stdp"]),
            input_stdp_params=stdp_table(payload["input_stdp"]),
            dt=payload["dt"],
            tau_syn=payload["tau_syn"],
            readout_fraction=payload["readout_fraction"],
            filter_tau=payload["filter_tau"],
        )
    except KeyError as exc:
        raise StorageError(f"parameter file missing field {exc}") from exc
