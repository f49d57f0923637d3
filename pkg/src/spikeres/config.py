"""Experiment configuration: INI parsing with a strict typed schema.

Unknown sections or keys are configuration errors with section-qualified
messages; the run seed is the only required value. The resolved config hashes
to a stable digest so runs can be compared and reproduced.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields

from .bayesopt import ParamDistributionSet
from .distributions import GammaSpec, PointMass
from .errors import ConfigurationError, StorageError
from .neurons import HeterogeneityProfile, NeuronParams, gamma_profile, homogeneous_profile
from .plasticity import StdpProfile
from .pruning import PruneConfig
from .topology import TopologyConfig


@dataclass(frozen=True)
class RunSection:
    seed: int
    out: str = "out"


@dataclass(frozen=True)
class TopologySection:
    n_total: int = 100
    lattice_x: int = 5
    lattice_y: int = 5
    lattice_z: int = 4
    ei_exc: int = 4
    ei_inh: int = 1
    amplitude_c: float = 0.6
    lambda_scale: float = 2.0
    w_scale: float = 1.0
    input_fraction: float = 0.3
    input_connect_prob: float = 0.3
    n_encoders: int = 8


@dataclass(frozen=True)
class DynamicsSection:
    dt: float = 0.5
    tau_syn: float = 5.0
    heterogeneous: bool = True
    tau_m_exc_mean: float = 20.0
    tau_m_inh_mean: float = 10.0
    tau_m_shape: float = 8.0
    tau_floor: float = 5.0
    v_threshold: float = 20.0
    v_rest: float = 0.0
    v_reset: float = 0.0
    refractory: float = 2.0
    r_m: float = 1.0


@dataclass(frozen=True)
class PlasticitySection:
    enabled: bool = False
    heterogeneous: bool = True
    gain_plus_mean: float = 0.01
    gain_minus_mean: float = 0.012
    gain_shape: float = 4.0
    tau_plus_mean: float = 20.0
    tau_minus_mean: float = 20.0
    tau_shape: float = 8.0
    w_min: float = 0.0
    w_max: float = 2.0
    train_samples: int = 200


@dataclass(frozen=True)
class ReadoutSection:
    fraction: float = 0.1
    filter_tau: float = 20.0
    regularization: float = 1e-4


@dataclass(frozen=True)
class MetricsSection:
    n_samples: int = 400
    tau_max: int = 100
    washout: int = 50
    window: float = 1.0
    max_rate: float = 200.0
    compute_capacity: bool = False
    compute_separation: bool = False
    separation_stimuli: int = 20


@dataclass(frozen=True)
class PruningSection:
    mode: str = "stability"
    iterations: int = 10
    rho_density: float = 0.55
    diagonal_mode: str = "perturb"
    centrality_quantile: float = 0.05
    m_delocalize: int = 5
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
    epsilon_quadform: float = 0.2
    target_synapses: int = 0


@dataclass(frozen=True)
class BoSection:
    budget: int = 20
    objective: str = "efficiency"
    n_init: int = 8
    n_candidates: int = 1024
    smoothness: float = 2.5
    distance_mode: str = "marginal_sum"
    eval_samples: int = 300
    eval_tau_max: int = 50


@dataclass(frozen=True)
class DataSection:
    dt: float = 0.01
    n_steps: int = 700
    washout: int = 100
    train_samples: int = 500
    horizon: int = 100
    feature_washout: int = 50
    n_classes: int = 3
    trials_per_class: int = 20
    noise: float = 0.05
    train_fraction: float = 0.7
    input_duration: float = 100.0
    rest_duration: float = 100.0


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunSection
    topology: TopologySection = TopologySection()
    dynamics: DynamicsSection = DynamicsSection()
    plasticity: PlasticitySection = PlasticitySection()
    readout: ReadoutSection = ReadoutSection()
    metrics: MetricsSection = MetricsSection()
    pruning: PruningSection = PruningSection()
    bo: BoSection = BoSection()
    data: DataSection = DataSection()


_SECTIONS = {
    "run": RunSection,
    "topology": TopologySection,
    "dynamics": DynamicsSection,
    "plasticity": PlasticitySection,
    "readout": ReadoutSection,
    "metrics": MetricsSection,
    "pruning": PruningSection,
    "bo": BoSection,
    "data": DataSection,
}

_CHOICES = {
    ("pruning", "mode"): ("stability", "activity"),
    ("pruning", "diagonal_mode"): ("retain", "perturb"),
    ("bo", "objective"): ("capacity", "spike_count", "efficiency"),
    ("bo", "distance_mode"): ("marginal_sum", "sinkhorn"),
}


def _convert(section: str, key: str, raw: str, target_type: type):
    where = f"[{section}] {key}"
    raw = raw.strip()
    try:
        if target_type is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigurationError(
            f"{where}: cannot parse {raw!r} as {target_type.__name__}"
        ) from exc


_KEY_TYPES: dict[str, dict[str, type]] = {
    "run": {"seed": int, "out": str},
}
for _name, _cls in _SECTIONS.items():
    if _name != "run":
        _instance = _cls()
        _KEY_TYPES[_name] = {f.name: type(getattr(_instance, f.name)) for f in fields(_cls)}


def parse_config(text: str, seed_override: int | None = None) -> ExperimentConfig:
    """Parse INI text into a validated config; unknown names are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from exc

    values: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigurationError(f"unknown config section [{section}]")
        types = _KEY_TYPES[section]
        section_values = {}
        for key, raw in parser.items(section):
            if key not in types:
                raise ConfigurationError(f"unknown key [{section}] {key}")
            section_values[key] = _convert(section, key, raw, types[key])
        values[section] = section_values

    run_values = values.get("run", {})
    if seed_override is not None:
        run_values["seed"] = seed_override
    if "seed" not in run_values:
        raise ConfigurationError("[run] seed is required")
    values["run"] = run_values

    out = {}
    for section, cls in _SECTIONS.items():
        try:
            out[section] = cls(**values.get(section, {}))
        except TypeError as exc:
            raise ConfigurationError(f"section [{section}]: {exc}") from exc
    cfg = ExperimentConfig(**out)
    _validate_choices(cfg)
    return cfg


def _validate_choices(cfg: ExperimentConfig):
    for (section, key), allowed in _CHOICES.items():
        value = getattr(getattr(cfg, section), key)
        if value not in allowed:
            raise ConfigurationError(
                f"[{section}] {key}: {value!r} not one of {', '.join(allowed)}"
            )


def load_config(path: str, seed_override: int | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise StorageError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, seed_override=seed_override)


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable digest of every resolved value, including defaults."""
    parts = []
    for section in sorted(_SECTIONS):
        obj = getattr(cfg, section)
        for f in sorted(fields(obj), key=lambda f: f.name):
            parts.append(f"{section}.{f.name}={getattr(obj, f.name)!r}")
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()


# --- builders shared by the command-line stages ---------------------------------


def topology_from(cfg: ExperimentConfig) -> TopologyConfig:
    t = cfg.topology
    return TopologyConfig(
        n_total=t.n_total,
        lattice_shape=(t.lattice_x, t.lattice_y, t.lattice_z),
        ei_ratio=(t.ei_exc, t.ei_inh),
        amplitude_c=t.amplitude_c,
        lambda_scale=t.lambda_scale,
        w_scale=t.w_scale,
        input_fraction=t.input_fraction,
        input_connect_prob=t.input_connect_prob,
        n_encoders=t.n_encoders,
    )


def neuron_profile_from(cfg: ExperimentConfig) -> HeterogeneityProfile:
    d = cfg.dynamics
    base = NeuronParams(
        tau_m=d.tau_m_exc_mean,
        r_m=d.r_m,
        v_rest=d.v_rest,
        v_threshold=d.v_threshold,
        v_reset=d.v_reset,
        refractory=d.refractory,
    )
    if d.heterogeneous:
        profile = gamma_profile(
            mean_exc=d.tau_m_exc_mean,
            mean_inh=d.tau_m_inh_mean,
            shape=d.tau_m_shape,
            base=base,
        )
        return HeterogeneityProfile(
            tau_m_exc=profile.tau_m_exc,
            tau_m_inh=profile.tau_m_inh,
            v_th_exc=profile.v_th_exc,
            v_th_inh=profile.v_th_inh,
            base=base,
            tau_floor=d.tau_floor,
        )
    hom = homogeneous_profile(tau_exc=d.tau_m_exc_mean, tau_inh=d.tau_m_inh_mean, base=base)
    return HeterogeneityProfile(
        tau_m_exc=hom.tau_m_exc, tau_m_inh=hom.tau_m_inh, base=base, tau_floor=d.tau_floor
    )


def stdp_profile_from(cfg: ExperimentConfig) -> StdpProfile | None:
    p = cfg.plasticity
    if not p.enabled:
        return None
    if p.heterogeneous:
        return StdpProfile(
            gain_plus=GammaSpec(p.gain_shape, p.gain_plus_mean / p.gain_shape),
            gain_minus=GammaSpec(p.gain_shape, p.gain_minus_mean / p.gain_shape),
            tau_plus=GammaSpec(p.tau_shape, p.tau_plus_mean / p.tau_shape),
            tau_minus=GammaSpec(p.tau_shape, p.tau_minus_mean / p.tau_shape),
            w_min=p.w_min,
            w_max=p.w_max,
        )
    return StdpProfile(
        gain_plus=PointMass(p.gain_plus_mean),
        gain_minus=PointMass(p.gain_minus_mean),
        tau_plus=PointMass(p.tau_plus_mean),
        tau_minus=PointMass(p.tau_minus_mean),
        w_min=p.w_min,
        w_max=p.w_max,
    )


def prune_config_from(cfg: ExperimentConfig) -> PruneConfig:
    p = cfg.pruning
    return PruneConfig(
        rho_density=p.rho_density,
        diagonal_mode=p.diagonal_mode,
        centrality_quantile=p.centrality_quantile,
        m_delocalize=p.m_delocalize,
        epsilon_quadform=p.epsilon_quadform,
        iterations=p.iterations,
        p_min=p.p_min,
        pool_multiplier=p.pool_multiplier,
        lyap_epsilon=p.lyap_epsilon,
        noise_sigma=p.noise_sigma,
        hurwitz_margin=p.hurwitz_margin,
        lyap_horizon=p.lyap_horizon,
        n_perturbations=p.n_perturbations,
        delta0=p.delta0,
        timescale_budget=p.timescale_budget,
        excitability_gain=p.excitability_gain,
        w_scale=cfg.topology.w_scale,
    )


def distribution_set_from(cfg: ExperimentConfig) -> ParamDistributionSet:
    d, p = cfg.dynamics, cfg.plasticity
    return ParamDistributionSet(
        tau_m_exc=GammaSpec(d.tau_m_shape, d.tau_m_exc_mean / d.tau_m_shape),
        tau_m_inh=GammaSpec(d.tau_m_shape, d.tau_m_inh_mean / d.tau_m_shape),
        gain_plus=GammaSpec(p.gain_shape, p.gain_plus_mean / p.gain_shape),
        gain_minus=GammaSpec(p.gain_shape, p.gain_minus_mean / p.gain_shape),
        tau_plus=GammaSpec(p.tau_shape, p.tau_plus_mean / p.tau_shape),
        tau_minus=GammaSpec(p.tau_shape, p.tau_minus_mean / p.tau_shape),
    )
