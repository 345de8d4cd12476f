#SPDX-License-Identifier: Apache-2.0
#File : test_cli.py

import json

import pandas as pd
import pytest
from conftest import two_sprite_doc

from render_gym_client.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, main
from render_gym_client.simulation import TRACE_COLUMNS
from render_gym_scene.scene import load_scenario


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(two_sprite_doc()))
    return str(path)


def test_simulate_writes_the_trace(scenario_file, tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["simulate", "--scenario", scenario_file, "--out", str(out)]) == EXIT_OK
    table = pd.read_csv(out)
    assert list(table.columns) == list(TRACE_COLUMNS)
    assert len(table) == 8
    assert set(table["policy"]) == {"greedy"}


def test_simulate_flags_override_the_config(scenario_file, tmp_path):
    out = tmp_path / "trace.csv"
    code = main(["--log-level", "DEBUG", "simulate", "--scenario", scenario_file, "--out", str(out),
                 "--model", "binary", "--policy", "sahni:1", "--alpha", "0.5", "--budget", "40", "--w-geo", "0.1"])
    assert code == EXIT_OK
    table = pd.read_csv(out)
    assert set(table["policy"]) == {"sahni:1"}
    assert set(table["frame_budget"]) == {40.0}
    # binary primary probability 0.6 with alpha 0.5
    assert table.loc[table["sprite_id"] == "ship", "attention_weight"].iloc[0] == pytest.approx(0.8)


def test_simulate_with_config_file_and_summary(scenario_file, tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"attention": {"model": "continuous"}, "regulator": {"policy": "multidim"}}))
    out = tmp_path / "trace.csv"
    code = main(["simulate", "--scenario", scenario_file, "--out", str(out), "--config", str(config), "--summary"])
    assert code == EXIT_OK
    assert set(pd.read_csv(out)["policy"]) <= {"multidim", "multidim:greedy"}
    assert "continuous" in capsys.readouterr().out


def test_generate(tmp_path):
    out = tmp_path / "generated.json"
    assert main(["generate", "--seed", "3", "--sprites", "4", "--frames", "5", "--out", str(out)]) == EXIT_OK
    scenario = load_scenario(str(out))
    assert len(scenario.sprites) == 4
    assert scenario.frame_count == 5


def test_compare(scenario_file, tmp_path):
    first = tmp_path / "greedy.json"
    first.write_text(json.dumps({"regulator": {"policy": "greedy"}}))
    second = tmp_path / "warp.json"
    second.write_text(json.dumps({"label": "warp", "regulator": {"policy": "warp-all"}}))
    out = tmp_path / "compare.csv"
    code = main(["compare", "--scenario", scenario_file, "--configs", "%s,%s" % (first, second), "--out", str(out)])
    assert code == EXIT_OK
    table = pd.read_csv(out)
    assert table["label"].tolist() == [str(first), "warp"]
    assert table["policy"].tolist() == ["greedy", "warp-all"]


def test_oracle(scenario_file, capsys):
    assert main(["oracle", "--scenario", scenario_file, "--frame", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "frame 1" in out
    assert "greedy" in out
    assert "oracle" in out


@pytest.mark.parametrize("argv", [
    ["simulate", "--scenario", "missing.json", "--out", "trace.csv"],
    ["oracle", "--scenario", "SCENARIO", "--frame", "9"],
    ["simulate", "--scenario", "SCENARIO", "--out", "trace.csv", "--policy", "bogus"],
    ["compare", "--scenario", "SCENARIO", "--configs", "CONFIG", "--out", "compare.csv"],
])
def test_invalid_input_exits_2(scenario_file, tmp_path, argv):
    config = tmp_path / "run.json"
    config.write_text("{}")
    argv = [scenario_file if a == "SCENARIO" else str(config) if a == "CONFIG" else a for a in argv]
    argv = [str(tmp_path / a) if a.endswith(".csv") or a == "missing.json" else a for a in argv]
    assert main(argv) == EXIT_INVALID


def test_bad_scenario_exits_2(tmp_path):
    doc = two_sprite_doc()
    doc["frame_budget"] = -1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path / "t.csv")]) == EXIT_INVALID


def test_infeasible_budget_exits_3(scenario_file, tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["simulate", "--scenario", scenario_file, "--out", str(out), "--budget", "0.1"]) == EXIT_INFEASIBLE
    assert not out.exists()
