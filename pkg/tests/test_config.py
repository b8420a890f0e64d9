import pytest

from vdclink.config import SCHEMA, Config, ConfigError, default_config


def test_every_key_has_type_and_description():
    for key, spec in SCHEMA.items():
        assert "." in key
        assert spec.type in ("float", "int", "bool", "str", "floats", "ints")
        assert spec.description


def test_defaults_match_documented_values():
    cfg = default_config()
    assert cfg["machine.psi_pm"] == 0.4235
    assert cfg["machine.pole_pairs"] == 2
    assert cfg["cmc.n_units"] == 100
    assert cfg["sim.dt"] == 1e-6
    assert cfg["sim.n_max"] == 90
    assert cfg["modulation.opwm_ratio"] == 0.9
    assert cfg["drive.n_max"] == 50


def test_dump_load_round_trip(tmp_path):
    cfg = default_config().with_overrides(["machine.r_s=0.812345678901234", "sim.seed=7",
                                           "cmc.balancing=false", "modulation.pattern_orders=5,7,11"])
    path = tmp_path / "c.cfg"
    cfg.dump(path)
    back = Config.load(path)
    assert back == cfg
    assert back.dumps() == cfg.dumps()


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError):
        Config.parse("machine.nope = 1\n")
    with pytest.raises(ConfigError):
        default_config().with_overrides(["foo.bar=1"])
    with pytest.raises(ConfigError):
        default_config()["x.y"]
    with pytest.raises(ConfigError):
        Config({"a.b": 1})


def test_malformed_values_rejected():
    with pytest.raises(ConfigError):
        Config.parse("sim.seed = abc\n")
    with pytest.raises(ConfigError):
        Config.parse("just text\n")
    with pytest.raises(ConfigError):
        default_config().with_overrides(["sim.seed"])
    with pytest.raises(ConfigError):
        default_config().with_overrides(["cmc.balancing=maybe"])


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        Config.load(tmp_path / "missing.cfg")


def test_partial_file_keeps_defaults():
    cfg = Config.parse("# comment\n\nsim.seed = 3  # trailing\n")
    assert cfg["sim.seed"] == 3
    assert cfg["sim.dt"] == default_config()["sim.dt"]


def test_with_and_section():
    cfg = default_config().with_(sim__seed=5)
    assert cfg["sim.seed"] == 5
    assert cfg.section("sim")["seed"] == 5
    assert cfg != default_config()
