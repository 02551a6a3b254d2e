import json

import pytest

from utils.config_manager import THREADS_ENV, ConfigManager
from utils.errors import ConfigError
from utils.file_handler import parse_initial, parse_optional_float, parse_spin, read_config_file
from utils.linalg import get_tolerances


def test_defaults_resolve():
    config = ConfigManager.resolve({})
    params = ConfigManager.spin_params(config)
    assert (params.spin, params.B0, params.B1, params.omega) == (3.0, 0.05, 0.5, 1.0)
    assert ConfigManager.methods(config) == ["rwa-full", "rwa-reduced", "chrw"]
    assert ConfigManager.initial_state(config).label == "M=0"
    assert config["samples"] == 1000


def test_file_then_flags_precedence(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"spin": "5/2", "B1": 0.2, "omega": 1.3, "tolerances": {"leakage": 1e-4}}))
    config = ConfigManager.resolve({"omega": 1.1}, str(path))
    assert config["spin"] == 2.5
    assert config["B1"] == 0.2
    assert config["omega"] == 1.1
    assert ConfigManager.apply_tolerances(config).leakage == 1e-4
    assert get_tolerances().leakage == 1e-4


def test_unknown_settings_rejected(tmp_path):
    with pytest.raises(ConfigError):
        ConfigManager.resolve({"bogus": 1})
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"tolerances": {"nope": 1}}))
    with pytest.raises(ConfigError):
        ConfigManager.resolve({}, str(path))


@pytest.mark.parametrize("flags", [
    {"samples": 1},
    {"methods": "exact,magnus"},
    {"initial": "up"},
    {"vary": "B0"},
    {"metric": "trace"},
    {"spin": "0.3"},
    {"B1": "strong"},
])
def test_invalid_values_rejected(flags):
    with pytest.raises(ConfigError):
        ConfigManager.resolve(flags)


def test_solver_config_flags():
    config = ConfigManager.resolve({"dt": "0.001", "no_renormalize": True, "allow_large_dt": True})
    solver = ConfigManager.solver_config(config)
    assert solver.dt == 0.001
    assert solver.renormalize is False
    assert solver.allow_large_dt is True


def test_method_list_from_json_array(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"methods": ["exact", "chrw"]}))
    assert ConfigManager.methods(ConfigManager.resolve({}, str(path))) == ["exact", "chrw"]


def test_worker_count_clamped_by_environment(monkeypatch):
    config = ConfigManager.resolve({"parallel": 8})
    monkeypatch.setenv(THREADS_ENV, "2")
    assert ConfigManager.worker_count(config) == 2
    monkeypatch.delenv(THREADS_ENV)
    assert ConfigManager.worker_count(config) == 8
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        ConfigManager.worker_count(config)


def test_read_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(None)
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "run.yaml")
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        read_config_file(broken)
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        read_config_file(listing)


def test_parse_spin():
    assert parse_spin("5/2") == 2.5
    assert parse_spin(3) == 3.0
    assert parse_spin("1.5") == 1.5
    for bad in ("0", "1/3", "abc"):
        with pytest.raises(ConfigError):
            parse_spin(bad)


def test_parse_initial():
    assert parse_initial("x").kind == "x"
    state = parse_initial("M=-3/2")
    assert (state.kind, state.m) == ("basis", -1.5)
    assert parse_initial(" m = 2 ").m == 2.0
    with pytest.raises(ConfigError):
        parse_initial("M=")


def test_parse_optional_float():
    assert parse_optional_float(None) is None
    assert parse_optional_float("auto") is None
    assert parse_optional_float("1/4") == 0.25
    with pytest.raises(ConfigError):
        parse_optional_float("fast")
