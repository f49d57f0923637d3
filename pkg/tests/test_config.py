"""INI schema: parsing, validation, hashing, and section-to-object builders."""

import pytest

from spikeres.config import (
    config_hash,
    distribution_set_from,
    load_config,
    neuron_profile_from,
    parse_config,
    prune_config_from,
    stdp_profile_from,
    topology_from,
)
from spikeres.distributions import GammaSpec, PointMass
from spikeres.errors import ConfigurationError, StorageError

MINIMAL = "[run]\nseed = 3\n"


class TestParseConfig:
    def test_minimal_config_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.run.seed == 3
        assert cfg.run.out == "out"
        assert cfg.topology.n_total == 100
        assert cfg.dynamics.heterogeneous is True
        assert cfg.plasticity.enabled is False
        assert cfg.pruning.mode == "stability"

    def test_typed_values_parsed(self):
        cfg = parse_config(
            "[run]\nseed = 9\nout = results\n"
            "[topology]\nn_total = 60\nlattice_x = 5\nlattice_y = 4\nlattice_z = 3\n"
            "w_scale = 8.0\n"
            "[dynamics]\nheterogeneous = no\ntau_m_exc_mean = 15.5\n"
            "[plasticity]\nenabled = yes\ntrain_samples = 50\n"
            "[bo]\nbudget = 12\nobjective = capacity\n"
        )
        assert cfg.run.out == "results"
        assert cfg.topology.n_total == 60
        assert cfg.topology.w_scale == 8.0
        assert cfg.dynamics.heterogeneous is False
        assert cfg.dynamics.tau_m_exc_mean == 15.5
        assert cfg.plasticity.enabled is True
        assert cfg.plasticity.train_samples == 50
        assert cfg.bo.budget == 12
        assert cfg.bo.objective == "capacity"

    def test_bool_spellings(self):
        for raw, want in (("true", True), ("on", True), ("1", True),
                          ("false", False), ("off", False), ("0", False)):
            cfg = parse_config(MINIMAL + f"[plasticity]\nenabled = {raw}\n")
            assert cfg.plasticity.enabled is want

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigurationError, match=r"\[training\]"):
            parse_config(MINIMAL + "[training]\nrate = 1\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError, match=r"\[topology\] n_nodes"):
            parse_config(MINIMAL + "[topology]\nn_nodes = 10\n")

    def test_bad_literals_name_the_location(self):
        with pytest.raises(ConfigurationError, match=r"\[run\] seed"):
            parse_config("[run]\nseed = plenty\n")
        with pytest.raises(ConfigurationError, match=r"\[dynamics\] dt"):
            parse_config(MINIMAL + "[dynamics]\ndt = fast\n")
        with pytest.raises(ConfigurationError, match=r"\[plasticity\] enabled"):
            parse_config(MINIMAL + "[plasticity]\nenabled = maybe\n")

    def test_seed_required(self):
        with pytest.raises(ConfigurationError, match="seed"):
            parse_config("[topology]\nn_total = 10\n")

    def test_seed_override_wins_and_suffices(self):
        assert parse_config(MINIMAL, seed_override=11).run.seed == 11
        assert parse_config("[topology]\nn_total = 10\n", seed_override=4).run.seed == 4

    def test_choice_fields_validated(self):
        with pytest.raises(ConfigurationError, match="mode"):
            parse_config(MINIMAL + "[pruning]\nmode = random\n")
        with pytest.raises(ConfigurationError, match="objective"):
            parse_config(MINIMAL + "[bo]\nobjective = loss\n")

    def test_syntax_errors_are_configuration_errors(self):
        with pytest.raises(ConfigurationError, match="syntax"):
            parse_config("run]\nseed = 1\n")


class TestLoadConfig:
    def test_reads_file(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(MINIMAL)
        assert load_config(str(path)).run.seed == 3

    def test_missing_file_is_a_storage_error(self, tmp_path):
        with pytest.raises(StorageError):
            load_config(str(tmp_path / "absent.ini"))


class TestConfigHash:
    def test_stable_across_parses(self):
        assert config_hash(parse_config(MINIMAL)) == config_hash(parse_config(MINIMAL))

    def test_explicit_default_hashes_like_omitted(self):
        explicit = parse_config(MINIMAL + "[topology]\nn_total = 100\n")
        assert config_hash(explicit) == config_hash(parse_config(MINIMAL))

    def test_sensitive_to_any_value(self):
        base = config_hash(parse_config(MINIMAL))
        assert config_hash(parse_config("[run]\nseed = 4\n")) != base
        assert config_hash(parse_config(MINIMAL + "[metrics]\ntau_max = 99\n")) != base


class TestBuilders:
    def test_topology_mapping(self):
        cfg = parse_config(
            MINIMAL + "[topology]\nn_total = 60\nlattice_x = 5\nlattice_y = 4\n"
            "lattice_z = 3\nei_exc = 3\nei_inh = 2\nw_scale = 4.0\nn_encoders = 6\n"
        )
        topo = topology_from(cfg)
        assert topo.n_total == 60
        assert topo.lattice_shape == (5, 4, 3)
        assert topo.ei_ratio == (3, 2)
        assert topo.w_scale == 4.0
        assert topo.n_encoders == 6

    def test_heterogeneous_neuron_profile(self):
        cfg = parse_config(
            MINIMAL + "[dynamics]\ntau_m_exc_mean = 16.0\ntau_m_inh_mean = 8.0\n"
            "tau_m_shape = 4.0\ntau_floor = 2.0\nv_threshold = 25.0\nrefractory = 1.5\n"
        )
        profile = neuron_profile_from(cfg)
        assert profile.tau_m_exc == GammaSpec(4.0, 4.0)
        assert profile.tau_m_inh == GammaSpec(4.0, 2.0)
        assert profile.tau_floor == 2.0
        assert profile.base.v_threshold == 25.0
        assert profile.base.refractory == 1.5

    def test_homogeneous_neuron_profile(self):
        cfg = parse_config(MINIMAL + "[dynamics]\nheterogeneous = false\n")
        profile = neuron_profile_from(cfg)
        assert profile.tau_m_exc == PointMass(20.0)
        assert profile.tau_m_inh == PointMass(10.0)

    def test_stdp_profile_modes(self):
        assert stdp_profile_from(parse_config(MINIMAL)) is None
        het = stdp_profile_from(parse_config(
            MINIMAL + "[plasticity]\nenabled = true\ngain_plus_mean = 0.02\n"
            "gain_shape = 2.0\nw_max = 3.0\n"
        ))
        assert het.gain_plus == GammaSpec(2.0, 0.01)
        assert het.w_max == 3.0
        hom = stdp_profile_from(parse_config(
            MINIMAL + "[plasticity]\nenabled = true\nheterogeneous = false\n"
            "tau_plus_mean = 25.0\n"
        ))
        assert hom.gain_plus == PointMass(0.01)
        assert hom.tau_plus == PointMass(25.0)

    def test_prune_config_takes_w_scale_from_topology(self):
        cfg = parse_config(
            MINIMAL + "[topology]\nw_scale = 6.0\n"
            "[pruning]\niterations = 3\nrho_density = 1.2\ncentrality_quantile = 0.02\n"
        )
        prune = prune_config_from(cfg)
        assert prune.iterations == 3
        assert prune.rho_density == 1.2
        assert prune.centrality_quantile == 0.02
        assert prune.w_scale == 6.0

    def test_distribution_set_mapping(self):
        cfg = parse_config(
            MINIMAL + "[dynamics]\ntau_m_exc_mean = 16.0\ntau_m_shape = 4.0\n"
            "[plasticity]\ngain_plus_mean = 0.02\ngain_shape = 2.0\n"
        )
        dist = distribution_set_from(cfg)
        assert dist.tau_m_exc == GammaSpec(4.0, 4.0)
        assert dist.gain_plus == GammaSpec(2.0, 0.01)
