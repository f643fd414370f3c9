"""
Test configuration, tolerances and random streams
"""

import numpy as np
import pytest

from rumoverload.config import (
    DEFAULT_TOLERANCES,
    RunConfig,
    Tolerances,
    get_nested_value,
    load_config,
    seed_from_environment,
    tolerances_from_config,
)
from rumoverload.errors import ValidationError
from rumoverload.streams import make_rng, map_replications, replication_seeds


def test_default_tolerances():
    assert DEFAULT_TOLERANCES.feasibility == 1e-9
    assert DEFAULT_TOLERANCES.integrality == 1e-6
    assert DEFAULT_TOLERANCES.equality_slack == 1e-7
    assert DEFAULT_TOLERANCES.stall_iterations == 5


def test_tolerances_replace():
    tolerances = Tolerances().replace(kkt=1e-6)
    assert tolerances.kkt == 1e-6
    assert tolerances.feasibility == 1e-9
    with pytest.raises(ValidationError):
        Tolerances().replace(nonsense=1.0)


def test_stochastic_command_needs_seed():
    with pytest.raises(ValidationError, match="seed"):
        RunConfig(command="test-rum")
    assert RunConfig(command="test-rum", seed=3).seed == 3
    assert RunConfig(command="bounds").seed is None


@pytest.mark.parametrize(
    "settings",
    [
        {"command": "plot"},
        {"command": "bounds", "model": "iv"},
        {"command": "bounds", "scope": "half"},
        {"command": "bounds", "format": "xml"},
        {"command": "bounds", "bootstrap": 0},
        {"command": "bounds", "threads": 0},
    ],
)
def test_run_config_validation(settings):
    with pytest.raises(ValidationError):
        RunConfig(**settings)


def test_get_nested_value():
    config = {"a": {"b": {"c": 1}}}
    assert get_nested_value(config, ["a", "b", "c"]) == 1
    assert get_nested_value(config, ["a", "x"], default=5) == 5


def test_load_config(tmp_path):
    assert load_config(None) == {}
    path = tmp_path / "config.toml"
    path.write_text(
        '[rumoverload]\nmodel = "ii"\n\n[rumoverload.tolerances]\nkkt = 1e-8\n'
    )
    config = load_config(path)
    assert config["rumoverload"]["model"] == "ii"
    assert tolerances_from_config(config).kkt == 1e-8
    assert tolerances_from_config({}) is DEFAULT_TOLERANCES


def test_load_config_errors(tmp_path):
    with pytest.raises(ValidationError):
        load_config(tmp_path / "missing.toml")
    path = tmp_path / "broken.toml"
    path.write_text("[rumoverload\n")
    with pytest.raises(ValidationError):
        load_config(path)


def test_seed_from_environment(monkeypatch):
    monkeypatch.delenv("RUMOVERLOAD_SEED", raising=False)
    assert seed_from_environment() is None
    monkeypatch.setenv("RUMOVERLOAD_SEED", "42")
    assert seed_from_environment() == 42
    monkeypatch.setenv("RUMOVERLOAD_SEED", "forty-two")
    with pytest.raises(ValidationError):
        seed_from_environment()


def test_streams_are_reproducible():
    first = make_rng(11).random(5)
    second = make_rng(11).random(5)
    np.testing.assert_array_equal(first, second)
    children = [make_rng(s).random() for s in replication_seeds(11, 4)]
    again = [make_rng(s).random() for s in replication_seeds(11, 4)]
    assert children == again
    assert len(set(children)) == 4
    generator = make_rng(1)
    assert make_rng(generator) is generator


def test_map_replications_keeps_the_order():
    items = list(range(-5, 5))
    assert map_replications(abs, items) == [abs(i) for i in items]
    assert map_replications(abs, items, workers=2) == [abs(i) for i in items]
