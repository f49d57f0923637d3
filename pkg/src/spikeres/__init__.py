"""Heterogeneous recurrent spiking networks: simulation, metrics, stability pruning."""

from .bayesopt import (
    BoResult,
    KernelHyper,
    ParamDistributionSet,
    SearchSpace,
    bo_loop,
    expected_improvement,
    gp_fit,
    gp_predict,
    matern_w_kernel,
    set_distance,
    sinkhorn_distance,
    wasserstein_1d,
)
from .datasets import (
    ChaoticConfig,
    ClassTaskSpec,
    generate_lorenz63,
    generate_lorenz96,
    generate_rossler,
    generate_series,
    make_classification_task,
    normalize_series,
)
from .distributions import GammaSpec, PointMass
from .errors import ConfigurationError, NumericError, SpikeresError, StorageError
from .metrics import (
    CapacityReport,
    EnergyReport,
    count_sops,
    effective_rank,
    heterogeneity_score,
    memory_capacity,
    nrmse,
    spike_efficiency,
    valid_prediction_time,
)
from .model import LinearSystemModel, ReservoirModel
from .neurons import (
    EncoderSpikes,
    HeterogeneityProfile,
    NetworkState,
    NeuronParams,
    SimResult,
    SpikeRecord,
    firing_rates,
    gamma_profile,
    homogeneous_profile,
    initial_state,
    sample_params,
    simulate,
    spike_stats,
    step,
)
from .plasticity import StdpParams, StdpProfile, sample_stdp_params, step_plasticity
from .pruning import (
    NodeLyapunov,
    PruneConfig,
    PruneRun,
    build_lyapunov_matrix,
    delocalize_edges,
    estimate_node_lyapunov,
    linearize,
    optimize_timescales,
    prune_nodes,
    prune_synapses,
    run_activity_pruning,
    run_pruning,
    sparsify_matrix,
    stationary_covariance,
)
from .readout import (
    RateEncoderConfig,
    ReadoutLayer,
    StateFeatures,
    extract_features,
    fit_hidden_readout,
    fit_linear_readout,
    rate_encode,
    select_readout_neurons,
)
from .topology import (
    NetworkGraph,
    TopologyConfig,
    betweenness_centrality,
    build_recurrent_graph,
    degree_variance,
    graph_from_json,
    graph_to_json,
)

__version__ = "0.1.0"

__all__ = [
    "BoResult",
    "CapacityReport",
    "ChaoticConfig",
    "ClassTaskSpec",
    "ConfigurationError",
    "EncoderSpikes",
    "EnergyReport",
    "GammaSpec",
    "HeterogeneityProfile",
    "KernelHyper",
    "LinearSystemModel",
    "NetworkGraph",
    "NetworkState",
    "NeuronParams",
    "NodeLyapunov",
    "NumericError",
    "ParamDistributionSet",
    "PointMass",
    "PruneConfig",
    "PruneRun",
    "RateEncoderConfig",
    "ReadoutLayer",
    "ReservoirModel",
    "SearchSpace",
    "SimResult",
    "SpikeRecord",
    "SpikeresError",
    "StateFeatures",
    "StdpParams",
    "StdpProfile",
    "StorageError",
    "TopologyConfig",
    "betweenness_centrality",
    "bo_loop",
    "build_lyapunov_matrix",
    "build_recurrent_graph",
    "count_sops",
    "degree_variance",
    "delocalize_edges",
    "effective_rank",
    "estimate_node_lyapunov",
    "expected_improvement",
    "extract_features",
    "firing_rates",
    "fit_hidden_readout",
    "fit_linear_readout",
    "gamma_profile",
    "generate_lorenz63",
    "generate_lorenz96",
    "generate_rossler",
    "generate_series",
    "gp_fit",
    "gp_predict",
    "graph_from_json",
    "graph_to_json",
    "heterogeneity_score",
    "homogeneous_profile",
    "initial_state",
    "linearize",
    "make_classification_task",
    "matern_w_kernel",
    "memory_capacity",
    "normalize_series",
    "nrmse",
    "optimize_timescales",
    "prune_nodes",
    "prune_synapses",
    "rate_encode",
    "run_activity_pruning",
    "run_pruning",
    "sample_params",
    "sample_stdp_params",
    "select_readout_neurons",
    "set_distance",
    "simulate",
    "sinkhorn_distance",
    "sparsify_matrix",
    "spike_efficiency",
    "spike_stats",
    "stationary_covariance",
    "step",
    "step_plasticity",
    "valid_prediction_time",
    "wasserstein_1d",
]
