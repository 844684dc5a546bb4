"""Scenario schema round-trips and strict validation."""

import copy
import json
from pathlib import Path

import pytest

from edgemig.errors import ScenarioError
from edgemig.scenario import (
    dumps_scenario,
    load_scenario,
    parse_scenario,
    save_scenario,
    scenario_to_dict,
)

DEMO = Path(__file__).resolve().parent.parent / "demos" / "scenario.json"


@pytest.fixture()
def raw():
    return json.loads(DEMO.read_text())


def test_demo_scenario_round_trips_exactly(raw):
    scenario = parse_scenario(raw)
    assert scenario_to_dict(scenario) == raw


def test_serialized_text_is_a_fixed_point(raw):
    scenario = parse_scenario(raw)
    text = dumps_scenario(scenario)
    again = dumps_scenario(parse_scenario(json.loads(text)))
    assert again == text
    assert text.endswith("\n")


def test_save_and_load(tmp_path, raw):
    scenario = parse_scenario(raw)
    out = tmp_path / "copy.json"
    save_scenario(scenario, out)
    assert load_scenario(out) == scenario


def test_lookups(raw):
    scenario = parse_scenario(raw)
    assert scenario.host("edge-a").role == "source"
    link = scenario.link_between("edge-b", "edge-a")  # order-insensitive
    assert link is not None and link.bandwidth_mbps == 1000.0
    assert scenario.link_between("edge-a", "nowhere") is None
    assert scenario.profile_by_id("packet-probe").profile.state_size_bytes \
        == 524288


def test_unknown_top_level_key_rejected(raw):
    raw["surprise"] = 1
    with pytest.raises(ScenarioError, match="surprise"):
        parse_scenario(raw)


def test_unknown_nested_key_rejected(raw):
    raw["hosts"][0]["color"] = "red"
    with pytest.raises(ScenarioError, match="color"):
        parse_scenario(raw)


def test_bad_host_role_rejected(raw):
    raw["hosts"][0]["role"] = "bystander"
    with pytest.raises(ScenarioError):
        parse_scenario(raw)


def test_duplicate_host_ids_rejected(raw):
    raw["hosts"][1]["id"] = raw["hosts"][0]["id"]
    with pytest.raises(ScenarioError, match="duplicate"):
        parse_scenario(raw)


def test_task_must_reference_known_profile(raw):
    raw["task"]["ms_profile"] = "missing-profile"
    with pytest.raises(ScenarioError):
        parse_scenario(raw)


def test_task_must_reference_known_hosts(raw):
    raw["task"]["client"] = "ghost"
    with pytest.raises(ScenarioError):
        parse_scenario(raw)


def test_missing_required_section(raw):
    del raw["hosts"]
    with pytest.raises(ScenarioError, match="hosts"):
        parse_scenario(raw)


def test_malformed_json_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_sweep_targets_inclusive_grid(raw):
    scenario = parse_scenario(raw)
    assert scenario.sweep is not None
    targets = scenario.sweep.targets()
    assert targets[0] == 1.0
    assert targets[-1] == 10.0
    assert len(targets) == 19


def test_optional_sections_may_be_absent(raw):
    minimal = copy.deepcopy(raw)
    for key in ("task", "sweep", "bandwidth_distribution", "dirty_samples",
                "calibration_runs"):
        minimal.pop(key, None)
    scenario = parse_scenario(minimal)
    assert scenario.task is None and scenario.sweep is None
    assert scenario_to_dict(scenario) == minimal
