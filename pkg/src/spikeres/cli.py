"""Command-line runner: build, train, prune, evaluate, and distribution search.

Every command reads one INI config, honors an optional seed override, and
writes deterministic artifacts (stable key order, no timestamps) plus a
manifest that carries the non-deterministic bookkeeping.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .bayesopt import bo_loop, default_search_space
from .config import (
    ExperimentConfig,
    config_hash,
    load_config,
    neuron_profile_from,
    prune_config_from,
    stdp_profile_from,
    topology_from,
)
from .datasets import ChaoticConfig, ClassTaskSpec, generate_series, make_classification_task
from .errors import ConfigurationError, SpikeresError, StorageError
from .metrics import heterogeneity_score
from .pipelines import (
    build_model,
    load_model,
    make_distribution_objective,
    run_capacity_experiment,
    run_classification,
    run_forecast,
    run_separation_experiment,
    save_model,
)
from .pruning import run_activity_pruning, run_pruning, write_iteration_log
from .readout import RateEncoderConfig, extract_features, fit_linear_readout, rate_encode
from .topology import degree_variance

CHAOTIC_TASKS = ("lorenz63", "lorenz96", "rossler")
ALL_TASKS = CHAOTIC_TASKS + ("synth-class",)


def _py(obj):
    """Coerce numpy scalars and arrays so reports serialize deterministically."""
    if isinstance(obj, dict):
        return {k: _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _write_json(path: str, payload: dict):
    try:
        with open(path, "w") as fh:
            json.dump(_py(payload), fh, sort_keys=True, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def _write_csv(path: str, header: list[str], rows: list[list]):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(_py(row))
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def _write_manifest(out_dir: str, cfg: ExperimentConfig, command: str, started: float, artifacts: list[str]):
    payload = {
        "command": command,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "seed": cfg.run.seed,
        "started_unix": started,
        "finished_unix": time.time(),
        "artifacts": sorted(os.path.basename(a) for a in artifacts),
    }
    path = os.path.join(out_dir, "manifest.json")
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def _ensure_out(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create output directory {path}: {exc}") from exc
    return path


def _stage_seed(cfg: ExperimentConfig, stage: str) -> int:
    # stable per-stage stream derived from the global seed
    offsets = {"build": 0, "train": 1, "prune": 2, "evaluate": 3, "bo": 4}
    return int(np.random.SeedSequence([cfg.run.seed, offsets[stage]]).generate_state(1)[0])


def _snapshot_path(args, cfg: ExperimentConfig, default_name: str) -> str:
    if args.snapshot:
        return args.snapshot
    return os.path.join(args.out or cfg.run.out, default_name)


def _chaotic_series(cfg: ExperimentConfig, task: str, seed: int) -> np.ndarray:
    d = cfg.data
    chaos = ChaoticConfig(system=task, dt=d.dt, n_steps=d.n_steps, washout=d.washout)
    return generate_series(chaos, seed=seed)


def _training_stream(cfg: ExperimentConfig, task: str, seed: int, n_encoders: int):
    """Encoder drive, feature timestamps, and readout targets for one training pass."""
    from .pipelines import _tile_dims

    window = cfg.metrics.window
    if task in CHAOTIC_TASKS:
        series = _chaotic_series(cfg, task, seed)
        train = series[: cfg.data.train_samples]
        lo = train.min(axis=0)
        span = train.max(axis=0) - lo
        if np.any(span <= 0.0):
            raise ConfigurationError("a series dimension is constant on the training segment")
        u = np.clip((train - lo) / span, 0.0, 1.0)
        values = _tile_dims(u, n_encoders)
        n = values.shape[0]
        stamps = (np.arange(n) + 1) * window
        # the row at each window end predicts the next normalized sample
        return values, stamps[:-1], u[1:]

    task_data = make_classification_task(
        ClassTaskSpec(
            n_classes=cfg.data.n_classes,
            n_encoders=n_encoders,
            trials_per_class=cfg.data.trials_per_class,
            noise=cfg.data.noise,
            train_fraction=cfg.data.train_fraction,
        ),
        seed=seed,
    )
    n_windows = int(round(cfg.data.input_duration / window))
    rest_windows = int(round(cfg.data.rest_duration / window))
    blocks = []
    stamps = []
    trial_span = (n_windows + rest_windows) * window
    for k, idx in enumerate(task_data.train_idx):
        blocks.append(np.tile(task_data.inputs[idx], (n_windows, 1)))
        blocks.append(np.zeros((rest_windows, n_encoders)))
        stamps.append(k * trial_span + n_windows * window)
    values = np.vstack(blocks)
    classes = np.unique(task_data.labels)
    targets = (task_data.labels[task_data.train_idx, None] == classes[None, :]).astype(float)
    return values, np.asarray(stamps), targets


def cmd_build(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    out_dir = _ensure_out(args.out or cfg.run.out)
    started = time.time()
    model = build_model(
        topology_from(cfg),
        neuron_profile_from(cfg),
        stdp_profile_from(cfg),
        seed=_stage_seed(cfg, "build"),
        dt=cfg.dynamics.dt,
        readout_fraction=cfg.readout.fraction,
        filter_tau=cfg.readout.filter_tau,
    )
    snapshot = os.path.join(out_dir, "network.json")
    artifacts = save_model(model, snapshot)
    taus = np.array([[p.tau_m] for p in model.neuron_params.values()])
    summary = {
        "n_neurons": model.graph.n_neurons,
        "n_synapses": model.graph.n_synapses,
        "n_input_edges": len(model.graph.input_edges),
        "density": model.graph.density(),
        "degree_variance": degree_variance(model.graph),
        "tau_m_mean": float(taus.mean()),
        "tau_m_heterogeneity": heterogeneity_score(taus),
    }
    report = os.path.join(out_dir, "build_report.json")
    _write_json(report, summary)
    artifacts.append(report)
    _write_manifest(out_dir, cfg, "build", started, artifacts)
    print(
        f"built network: {summary['n_neurons']} neurons, {summary['n_synapses']} synapses, "
        f"density {summary['density']:.4f}, tau_m heterogeneity {summary['tau_m_heterogeneity']:.4f}"
    )
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    out_dir = _ensure_out(args.out or cfg.run.out)
    started = time.time()
    seed = _stage_seed(cfg, "train")
    model = load_model(_snapshot_path(args, cfg, "network.json"))
    if model.stdp_params is None:
        raise ConfigurationError("snapshot has no plasticity parameters; build with plasticity enabled")
    sub = np.random.SeedSequence(seed).generate_state(2)

    values, stamps, targets = _training_stream(cfg, args.task, int(sub[0]), model.graph.n_encoders)
    enc_cfg = RateEncoderConfig(
        n_encoders=model.graph.n_encoders, max_rate=cfg.metrics.max_rate, window=cfg.metrics.window
    )
    spikes = rate_encode(values, enc_cfg, model.dt, int(sub[1]))
    result, trained = model.simulate(input_spikes=spikes, plastic=True)

    sampled = trained.readout_neurons()
    feats = extract_features(result.record, sampled, trained.filter_tau, stamps)
    readout = fit_linear_readout(feats.values, targets, regularization=cfg.readout.regularization)

    snapshot = os.path.join(out_dir, "network_trained.json")
    artifacts = save_model(trained, snapshot)
    counts = result.record.counts()
    duration = result.record.duration
    rows = [
        [nid, counts[nid], counts[nid] / duration * 1000.0]
        for nid in sorted(counts)
    ]
    stats_path = os.path.join(out_dir, "train_stats.csv")
    _write_csv(stats_path, ["neuron_id", "spike_count", "rate_hz"], rows)
    readout_path = os.path.join(out_dir, "readout.json")
    _write_json(
        readout_path,
        {
            "sampled_neurons": list(readout.sampled_neurons),
            "layer_sizes": list(readout.layer_sizes),
            "weights": [w.tolist() for w in readout.weights],
            "regularization": readout.regularization,
        },
    )
    artifacts += [stats_path, readout_path]
    _write_manifest(out_dir, cfg, "train", started, artifacts)
    total = int(sum(counts.values()))
    print(f"trained on {args.task}: {total} spikes over {duration:.0f} ms; snapshot {snapshot}")
    return 0


def cmd_prune(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    out_dir = _ensure_out(args.out or cfg.run.out)
    started = time.time()
    seed = _stage_seed(cfg, "prune")
    model = load_model(_snapshot_path(args, cfg, "network.json"))
    prune_cfg = prune_config_from(cfg)
    target = cfg.pruning.target_synapses or None
    if cfg.pruning.mode == "activity":
        run = run_activity_pruning(model, prune_cfg, seed, target_synapses=target, keep_intermediate=True)
    else:
        run = run_pruning(model, prune_cfg, seed, target_synapses=target, keep_intermediate=True)

    artifacts = []
    for it, step_model in enumerate(run.iteration_models or []):
        artifacts += save_model(step_model, os.path.join(out_dir, f"network_iter_{it:02d}.json"))
    artifacts += save_model(run.model, os.path.join(out_dir, "network_pruned.json"))
    log_path = os.path.join(out_dir, "prune_log.jsonl")
    try:
        write_iteration_log(run.logs, log_path)
    except OSError as exc:
        raise StorageError(f"cannot write {log_path}: {exc}") from exc
    artifacts.append(log_path)
    _write_manifest(out_dir, cfg, "prune", started, artifacts)
    final = run.model.graph
    print(
        f"pruned ({cfg.pruning.mode}): {model.graph.n_neurons}->{final.n_neurons} neurons, "
        f"{model.graph.n_synapses}->{final.n_synapses} synapses over {len(run.logs)} iterations"
    )
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    out_dir = _ensure_out(args.out or cfg.run.out)
    started = time.time()
    seed = _stage_seed(cfg, "evaluate")
    model = load_model(_snapshot_path(args, cfg, "network.json"))
    sub = np.random.SeedSequence(seed).generate_state(4)
    report: dict = {"task": args.task}
    artifacts = []

    if args.task in CHAOTIC_TASKS:
        series = _chaotic_series(cfg, args.task, int(sub[0]))
        forecast = run_forecast(
            model,
            series,
            train_samples=cfg.data.train_samples,
            horizon=cfg.data.horizon,
            washout=cfg.data.feature_washout,
            window=cfg.metrics.window,
            max_rate=cfg.metrics.max_rate,
            seed=int(sub[1]),
            regularization=cfg.readout.regularization,
            stdp_train=cfg.plasticity.enabled and model.stdp_params is not None,
        )
        report.update(forecast.as_dict())
        series_path = os.path.join(out_dir, "nrmse_series.csv")
        _write_csv(
            series_path,
            ["step", "nrmse"],
            [[k, float(v)] for k, v in enumerate(forecast.nrmse_series)],
        )
        artifacts.append(series_path)
    else:
        task = make_classification_task(
            ClassTaskSpec(
                n_classes=cfg.data.n_classes,
                n_encoders=model.graph.n_encoders,
                trials_per_class=cfg.data.trials_per_class,
                noise=cfg.data.noise,
                train_fraction=cfg.data.train_fraction,
            ),
            seed=int(sub[0]),
        )
        cls_report = run_classification(
            model,
            task.inputs,
            task.labels,
            task.train_idx,
            task.test_idx,
            input_duration=cfg.data.input_duration,
            rest_duration=cfg.data.rest_duration,
            window=cfg.metrics.window,
            max_rate=cfg.metrics.max_rate,
            seed=int(sub[1]),
            regularization=cfg.readout.regularization,
            plastic=cfg.plasticity.enabled and model.stdp_params is not None,
        )
        report.update(cls_report.as_dict())

    if cfg.metrics.compute_capacity:
        capacity, _ = run_capacity_experiment(
            model,
            n_samples=cfg.metrics.n_samples,
            tau_max=cfg.metrics.tau_max,
            washout=cfg.metrics.washout,
            window=cfg.metrics.window,
            max_rate=cfg.metrics.max_rate,
            seed=int(sub[2]),
        )
        report["capacity_metrics"] = capacity.as_dict()
    if cfg.metrics.compute_separation:
        separation = run_separation_experiment(
            model,
            n_stimuli=cfg.metrics.separation_stimuli,
            input_duration=cfg.data.input_duration,
            window=cfg.metrics.window,
            max_rate=cfg.metrics.max_rate,
            seed=int(sub[3]),
        )
        report["separation_rank"] = separation.rank

    report_path = os.path.join(out_dir, "evaluate_report.json")
    _write_json(report_path, report)
    artifacts.append(report_path)
    _write_manifest(out_dir, cfg, "evaluate", started, artifacts)
    if args.task in CHAOTIC_TASKS:
        print(f"evaluated {args.task}: mean NRMSE {report['mean_nrmse']:.4f}, VPT {report['vpt']}")
    else:
        print(f"evaluated {args.task}: accuracy {report['accuracy']:.4f}, rank {report['rank']}")
    return 0


def cmd_bo(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    out_dir = _ensure_out(args.out or cfg.run.out)
    started = time.time()
    seed = _stage_seed(cfg, "bo")
    objective = make_distribution_objective(
        topology_from(cfg),
        metric=cfg.bo.objective,
        seed=seed,
        n_samples=cfg.bo.eval_samples,
        tau_max=cfg.bo.eval_tau_max,
        washout=cfg.metrics.washout,
        stdp_train_samples=cfg.plasticity.train_samples if cfg.plasticity.enabled else 0,
        dt=cfg.dynamics.dt,
        window=cfg.metrics.window,
        max_rate=cfg.metrics.max_rate,
    )
    result = bo_loop(
        objective,
        default_search_space(),
        budget=cfg.bo.budget,
        seed=seed,
        n_init=cfg.bo.n_init,
        n_candidates=cfg.bo.n_candidates,
        smoothness=cfg.bo.smoothness,
        mode=cfg.bo.distance_mode,
    )
    rows = []
    best = -np.inf
    for step in result.trace:
        best = max(best, step.value)
        point = step.point
        rows.append(
            [step.index, step.stage, step.value, best]
            + [x for spec in point.marginals() for x in (spec.shape, spec.scale)]
        )
    header = ["index", "stage", "value", "best_so_far"]
    for name in ("tau_m_exc", "tau_m_inh", "gain_plus", "gain_minus", "tau_plus", "tau_minus"):
        header += [f"{name}_shape", f"{name}_scale"]
    trace_path = os.path.join(out_dir, "bo_trace.csv")
    _write_csv(trace_path, header, rows)
    best_payload = {
        "objective": cfg.bo.objective,
        "best_value": result.best_value,
        "n_failures": len(result.failures),
        "best_point": {
            name: {"shape": spec.shape, "scale": spec.scale}
            for name, spec in zip(
                ("tau_m_exc", "tau_m_inh", "gain_plus", "gain_minus", "tau_plus", "tau_minus"),
                result.best_point.marginals(),
            )
        },
    }
    best_path = os.path.join(out_dir, "bo_best.json")
    _write_json(best_path, best_payload)
    _write_manifest(out_dir, cfg, "bo", started, [trace_path, best_path])
    print(
        f"search over {cfg.bo.budget} evaluations ({cfg.bo.objective}): "
        f"best {result.best_value:.6f}, {len(result.failures)} failed evaluations"
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spikeres",
        description="Heterogeneous spiking reservoirs: build, train, prune, evaluate, search.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, task_required=False):
        p.add_argument("--config", required=True, help="INI experiment config")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--out", default=None, help="output directory (default: [run] out)")
        p.add_argument("--snapshot", default=None, help="network snapshot to load")
        if task_required:
            p.add_argument("--task", required=True, choices=ALL_TASKS)

    add_common(sub.add_parser("build", help="build and snapshot a network"))
    add_common(sub.add_parser("train", help="run plasticity over a task stream"), task_required=True)
    add_common(sub.add_parser("prune", help="run iterative pruning on a snapshot"))
    add_common(sub.add_parser("evaluate", help="score a snapshot on a task"), task_required=True)
    add_common(sub.add_parser("bo", help="search parameter distributions"))

    args = parser.parse_args(argv)
    handlers = {
        "build": cmd_build,
        "train": cmd_train,
        "prune": cmd_prune,
        "evaluate": cmd_evaluate,
        "bo": cmd_bo,
    }
    try:
        return handlers[args.command](args)
    except SpikeresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
