import json

import pytest

from dms.config import ScenarioConfig
from dms.errors import ConfigurationError


def test_defaults_are_the_standard_scenario():
    cfg = ScenarioConfig()
    assert cfg.n_bs == 7
    assert cfg.W == 70
    assert cfg.area_m == (300.0, 500.0)
    assert cfg.gbr_rate_mbps == 4.0


def test_unknown_key_rejected():
    with pytest.raises(ConfigurationError) as err:
        ScenarioConfig.from_dict({"n_bsx": 3})
    assert "n_bsx" in str(err.value)


def test_field_level_messages():
    with pytest.raises(ConfigurationError) as err:
        ScenarioConfig.from_dict({"W": 0})
    assert err.value.field == "W"


def test_fixed_penalty_mode_parsing():
    cfg = ScenarioConfig.from_dict({"penalty_mode": {"fixed": 0.25}})
    assert cfg.penalty_mode == "fixed"
    assert cfg.fixed_penalty == 0.25


def test_deadline_policy_parsing():
    assert ScenarioConfig.from_dict({"deadline_policy": "n"}).deadline_rounds(7) == 7
    assert ScenarioConfig.from_dict({"deadline_policy": "n_squared"}).deadline_rounds(7) == 49
    cfg = ScenarioConfig.from_dict({"deadline_policy": {"explicit": 12}})
    assert cfg.deadline_rounds(7) == 12


def test_demand_schedule_validation_and_lookup():
    cfg = ScenarioConfig.from_dict({"demand_schedule": [[3, 5.0], [6, 2.0]]})
    assert cfg.gbr_rate_at(0) == 4.0
    assert cfg.gbr_rate_at(3) == 5.0
    assert cfg.gbr_rate_at(7) == 2.0
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict({"demand_schedule": [[5, 1.0], [5, 2.0]]})


def test_inline_mcs_table():
    cfg = ScenarioConfig.from_dict({"mcs_table": [[-5.0, 1000], [5.0, 2000]]})
    table = cfg.mcs()
    assert table.n_levels == 2
    assert table.best_rate(10 ** (5.0 / 10)) == 2000.0


def test_mcs_table_from_path(tmp_path):
    path = tmp_path / "mcs.json"
    path.write_text(json.dumps([[-5.0, 1000], [5.0, 2000]]))
    cfg = ScenarioConfig.from_dict({"mcs_table": str(path)})
    assert cfg.mcs().n_levels == 2


def test_round_trip_through_to_dict():
    cfg = ScenarioConfig.from_dict({
        "n_bs": 3, "seeds": [1, 2], "penalty_mode": {"fixed": 0.1},
        "deadline_policy": {"explicit": 5}, "baseline": "legacy",
    })
    again = ScenarioConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_json_file_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_json_file(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_json_file(bad)
