import json
from pathlib import Path

import numpy as np
import pytest

from src.gauge.equation_model import Grid, STField
from src.gauge.errors import GridError, ScenarioError, WindingError
from src.gauge.export import dumps, load_st_field, read_trajectory, save_st_field, write_trajectory
from src.gauge.scenario import build_equation, build_gauge, build_initial, load_scenario, parse_scenario
from src.gauge.solver import evolve

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

BASE = {
    "equation": {"form": "linear", "coefficients": {"hbar": 1, "m": 1}},
    "grid": {"L": 40, "N": 64},
    "initial": {"S": "0", "T": "ln(1 + 0.5*exp(-x^2/4))"},
    "run": {"t0": 0, "t1": 0.1, "dt": 0.005},
}


def scenario_with(**changes):
    return parse_scenario({**BASE, **changes})


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_build(path):
    scenario = load_scenario(path)
    build_equation(scenario.equation)
    build_initial(scenario)
    build_gauge(scenario)


@pytest.mark.parametrize(
    "changes, path",
    [
        ({"equation": {"form": "bogus"}}, "equation.form"),
        ({"extra": 1}, "extra"),
        ({"run": {"snapshots": 1}}, "run.snapshots"),
        ({"grid": {"L": -1}}, "grid.L"),
    ],
)
def test_scenario_errors_name_the_field(changes, path):
    with pytest.raises(ScenarioError) as info:
        scenario_with(**changes)
    assert info.value.path == path
    assert info.value.exit_code == 2


def test_coefficient_errors_name_the_slot():
    with pytest.raises(ScenarioError) as info:
        build_equation(scenario_with(equation={"form": "ab", "coefficients": {"a2": "sin("}}).equation)
    assert info.value.path == "equation.coefficients.a2"
    with pytest.raises(ScenarioError) as info:
        build_equation(scenario_with(equation={"form": "numu", "coefficients": {"zz": 1}}).equation)
    assert info.value.path == "equation.coefficients.zz"


@pytest.mark.parametrize("text", ["x", "sqrt(-1)", "1 + y*t"])
def test_bad_coefficient_values_name_the_slot(text):
    with pytest.raises(ScenarioError) as info:
        build_equation(scenario_with(equation={"form": "ab", "coefficients": {"a2": text}}).equation)
    assert info.value.path == "equation.coefficients.a2"
    assert info.value.exit_code == 2


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ScenarioError) as info:
        load_scenario(tmp_path / "absent.json")
    assert info.value.path == "scenario"
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(broken)


def test_gauge_and_initial_data_errors():
    with pytest.raises(ScenarioError) as info:
        build_gauge(scenario_with(), required=True)
    assert info.value.path == "gauge"
    with pytest.raises(ScenarioError) as info:
        build_gauge(scenario_with(gauge={"Lambda": "1", "mu": "2"}))
    assert info.value.path == "gauge.mu"
    with pytest.raises(WindingError) as info:
        build_initial(scenario_with(initial={"S": "0", "T": "x"}))
    assert info.value.path == "initial.T"
    with pytest.raises(WindingError) as info:
        build_initial(scenario_with(initial={"S": "x^2", "T": "0"}))
    assert info.value.path == "initial.S"
    with pytest.raises(GridError) as info:
        build_initial(scenario_with(grid={"L": 40, "N": 100}))
    assert info.value.path == "grid.N"


def test_evaluation_time_defaults_to_the_start():
    assert scenario_with().t_eval == 0.0
    assert scenario_with(run={"t0": 0.2, "t1": 1, "t_eval": 0.5}).t_eval == 0.5


def test_json_is_stable():
    text = dumps({"b": np.float64(0.5), "a": np.arange(3)})
    assert text == '{\n  "a": [\n    0,\n    1,\n    2\n  ],\n  "b": 0.5\n}\n'


def test_grid_files_keep_the_winding(tmp_path):
    grid = Grid(40.0, 64)
    k = 2 * np.pi / grid.length
    f = STField(grid, 0.3 * np.sin(k * grid.x), 0.1 * np.cos(k * grid.x), slope=2 * k)
    path = save_st_field(f, tmp_path / "field.csv")
    assert json.loads(path.with_suffix(".json").read_text())["N"] == 64
    back = load_st_field(path)
    assert back.slope == f.slope
    assert np.array_equal(back.S, f.S) and np.array_equal(back.T, f.T)


def test_trajectory_file(tmp_path, linear_ab, linear_numu):
    scenario = scenario_with()
    traj = evolve(linear_ab, build_initial(scenario), 0.0, 0.1, 0.005, snapshots=3)
    table = read_trajectory(write_trajectory(linear_numu, traj, tmp_path / "trajectory.csv"))
    assert table["t"].shape == (3 * 64,)
    assert np.allclose(np.unique(table["t"]), traj.times)
    assert np.allclose(table["rho"], np.exp(2 * table["T"]))
