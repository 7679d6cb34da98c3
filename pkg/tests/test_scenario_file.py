"""Tests scenario_file.py"""
import json

import numpy as np
import pytest

from wvlab import scenario_file
from wvlab.errors import ScenarioParseError
from wvlab.pointer import GridSpec
from wvlab.qmath import DensityOp, PureState
from wvlab.resources import ResourceKind

SIGMA_Z_ROWS = [[1, 0], [0, -1]]
BASE = {
    "name": "plus-to-zero",
    "observable": SIGMA_Z_ROWS,
    "psi_i": [0.7071067811865476, 0.7071067811865476],
    "psi_f": [1, 0],
}


def parse(**changes):
    document = {**BASE, **changes}
    return scenario_file.parse_scenario(
        {key: value for key, value in document.items() if value is not None}
    )


def parse_errors(**changes):
    with pytest.raises(ScenarioParseError) as err:
        parse(**changes)
    return err.value.errors


def test_defaults():
    parsed = parse()
    scenario = parsed.scenario
    assert scenario.resource.kind is ResourceKind.SINGLET
    assert scenario.accepted_bell_outcome == 4
    assert scenario.g == 0.0
    assert scenario.pointer.sigma == 1.0
    assert scenario.g_values is None
    assert isinstance(scenario.pre, PureState)
    assert (parsed.shots, parsed.seed, parsed.grid, parsed.p_values) == (
        10_000,
        0,
        None,
        None,
    )


def test_complex_entries_and_mixed_states():
    parsed = parse(
        psi_i=None,
        rho_i=[[[0.5, 0], [0, -0.5]], [[0, 0.5], [0.5, 0]]],
        psi_f=[[0.7071067811865476, 0], [0, 0.7071067811865476]],
    )
    assert isinstance(parsed.scenario.pre, DensityOp)
    assert np.allclose(parsed.scenario.pre.mat, [[0.5, -0.5j], [0.5j, 0.5]])
    assert np.allclose(parsed.scenario.post.amps, np.array([1, 1j]) / np.sqrt(2))


@pytest.mark.parametrize(
    "changes,resource_kind",
    [
        ({"resource": "nonmax", "n": [0.5, 0]}, ResourceKind.NONMAX),
        ({"resource": "werner", "p": 0.25}, ResourceKind.WERNER),
        (
            {
                "resource": "custom",
                "xi": [[0.25 if i == j else 0 for j in range(4)] for i in range(4)],
            },
            ResourceKind.CUSTOM,
        ),
    ],
)
def test_resources(changes, resource_kind):
    assert parse(**changes).scenario.resource.kind is resource_kind


def test_nonmax_default_outcome():
    assert parse(resource="nonmax", n=0.5).scenario.accepted_bell_outcome == 2


def test_every_error_is_reported():
    errors = parse_errors(observable=None, psi_f=None, sigma=0, colour="blue")
    assert errors == [
        "colour: unknown key",
        "observable: required",
        "psi_f: give exactly one of psi_f or rho_f",
        "sigma: must be positive",
    ]


@pytest.mark.parametrize(
    "changes,key",
    [
        ({"observable": [[0, 1], [0, 0]]}, "observable"),
        ({"observable": [[1, 0]]}, "observable"),
        ({"psi_i": [1, 0, 0]}, "psi_i"),
        ({"psi_i": [0, 0]}, "psi_i"),
        ({"rho_f": [[1, 0], [0, 0]]}, "psi_f"),
        ({"resource": "ghz"}, "resource"),
        ({"resource": "nonmax"}, "n"),
        ({"resource": "nonmax", "n": 0}, "n"),
        ({"resource": "werner"}, "p"),
        ({"resource": "werner", "p": 1.5}, "p"),
        ({"resource": "custom"}, "xi"),
        ({"g": "small"}, "g"),
        ({"g_values": [0.1, 0.01]}, "g_values"),
        ({"g_values": []}, "g_values"),
        ({"shots": 0}, "shots"),
        ({"shots": 2.5}, "shots"),
        ({"seed": -1}, "seed"),
        ({"seed": True}, "seed"),
        ({"accepted_bell_outcome": 0}, "accepted_bell_outcome"),
        ({"name": 3}, "name"),
        ({"grid": {"min": -10, "max": 10}}, "grid"),
        ({"grid": {"min": -10, "max": 10, "points": 1000}}, "grid"),
    ],
)
def test_errors_name_the_key(changes, key):
    errors = parse_errors(**changes)
    assert len(errors) == 1
    assert errors[0].startswith(f"{key}: ")


def test_not_an_object():
    with pytest.raises(ScenarioParseError, match="JSON object"):
        scenario_file.parse_scenario([1, 2])


def test_grid():
    parsed = parse(grid={"min": -20, "max": 20, "points": 4096})
    assert parsed.grid == GridSpec(q_min=-20.0, q_max=20.0, points=4096)


def test_p_values_scenarios():
    parsed = parse(resource="werner", p_values=[0, 0.5, 1])
    scenarios = parsed.scenarios()
    assert [scenario.resource.p for scenario in scenarios] == [0.0, 0.5, 1.0]
    assert [scenario.name for scenario in scenarios] == [
        "plus-to-zero p=0.0",
        "plus-to-zero p=0.5",
        "plus-to-zero p=1.0",
    ]


def test_p_values_need_werner():
    errors = parse_errors(p_values=[0.5])
    assert errors == ["p_values: only allowed with the werner resource"]


def test_p_values_range():
    errors = parse_errors(resource="werner", p_values=[0.5, 2])
    assert errors == ["p_values: every weight must lie in [0, 1]"]


def test_load_scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({**BASE, "shots": 500, "seed": 12}))
    parsed = scenario_file.load_scenario_file(str(path))
    assert (parsed.shots, parsed.seed) == (500, 12)
    assert parsed.scenario.name == "plus-to-zero"


def test_load_scenario_file_syntax_error(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text('{\n  "observable": [[1, 0], [0, -1]],\n  "psi_i": [1, 0\n}\n')
    with pytest.raises(ScenarioParseError) as err:
        scenario_file.load_scenario_file(str(path))
    assert err.value.errors[0].startswith("line 4: ")


def test_digest_is_stable():
    first = scenario_file.scenario_digest(parse().scenario)
    second = scenario_file.scenario_digest(parse().scenario)
    assert first == second
    assert len(first) == 64


def test_digest_tracks_content():
    base = scenario_file.scenario_digest(parse().scenario)
    assert scenario_file.scenario_digest(parse(g=0.1).scenario) != base
    assert scenario_file.scenario_digest(parse(name="other").scenario) != base
    assert (
        scenario_file.scenario_digest(parse(accepted_bell_outcome=1).scenario) != base
    )


def test_scenario_to_dict():
    document = scenario_file.scenario_to_dict(parse(g=0.1).scenario)
    assert document["resource"] == "singlet"
    assert document["pre"] == {
        "amps": [[0.7071067811865476, 0.0], [0.7071067811865476, 0.0]]
    }
    assert document["observable"] == [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [-1.0, 0.0]],
    ]
    assert document["xi"] is None
    assert document["g"] == 0.1
