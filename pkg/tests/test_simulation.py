#SPDX-License-Identifier: Apache-2.0
#File : test_simulation.py

import pandas as pd
import pytest

from render_gym_client.simulation import (TRACE_COLUMNS, RunSettings, frame_sprites, initial_state, plan_from_selection,
                                          run_frame, traces_to_dataframe, write_trace_csv)
from render_gym_model.attention import BinaryAttention
from render_gym_regulator.regulator import FramePlan, plan_frame
from render_gym_scene.errors import ConfigError, InfeasibleBudgetError, ValidationError


@pytest.fixture
def settings(config):
    return RunSettings.from_config(config("binary"))


def run(scenario, settings, policy, frames=None, attention=None):
    attention = attention or BinaryAttention({"ship": 1.0, "sky": 1.0})
    models = settings.models(scenario, attention)
    state = initial_state(settings)
    traces = []
    for _ in range(frames or scenario.frame_count):
        sprites = frame_sprites(state, scenario)
        # frame 0 has nothing to warp, so every policy renders it
        plan = plan_frame(sprites, models, scenario.frame_budget, policy if state.frame else "greedy")
        state, trace = run_frame(state, scenario, plan, models, scenario.frame_budget)
        traces.append(trace)
    return state, traces


def test_settings_from_config(config):
    settings = RunSettings.from_config(config("object", regulator={"policy": "sahni:2", "frame_budget": 12}))
    assert settings.policy == "sahni:2"
    assert settings.frame_budget == 12.0
    assert settings.history_window == 8
    assert settings.compute_model is None


def test_settings_budget_falls_back_to_scenario(two_sprite_scenario, settings, config):
    assert settings.budget(two_sprite_scenario) == 50.0
    override = RunSettings.from_config(config("binary", regulator={"frame_budget": 20.0}))
    assert override.budget(two_sprite_scenario) == 20.0
    custom = RunSettings.from_config(config("binary", compute_model={"c0": 2.0}))
    models = custom.models(two_sprite_scenario, BinaryAttention({"ship": 1.0, "sky": 1.0}))
    assert models.compute_model.c0 == 2.0


@pytest.mark.parametrize("regulator, message", [
    ({"policy": "bogus"}, "unknown policy"),
    ({"frame_budget": 0}, "frame_budget must be > 0"),
    ({"frame_budget": "ten"}, "frame_budget must be > 0"),
    ({"budget": 3}, "unknown key"),
])
def test_invalid_regulator_section(config, regulator, message):
    with pytest.raises(ConfigError, match=message):
        RunSettings.from_config(config("binary", regulator=regulator))


def test_first_frame_renders_everything(two_sprite_scenario, settings):
    state, traces = run(two_sprite_scenario, settings, "greedy", frames=1)
    trace = traces[0]
    assert trace.frame == 0
    assert trace.rerendered == ("ship", "sky")
    assert trace.raw_cost == 0.0
    assert trace.expected_cost == 0.0
    assert trace.spend == pytest.approx(9.795 + 6.4)
    assert state.frame == 1
    assert all(sprite.rendered and sprite.last_render_frame == 0 for sprite in state.sprites.values())
    assert state.history.costs("ship") == (0.0,)


def test_render_everything_resets_warp_error(two_sprite_scenario, settings):
    _, traces = run(two_sprite_scenario, settings, "render-all")
    for trace in traces:
        assert trace.raw_cost == 0.0
        assert all(row.fiducial.geometric_warp_error == 0.0 for row in trace.sprites)
        assert all(row.frames_since_render == 0 for row in trace.sprites)


def test_warping_grows_the_wobble_error(two_sprite_scenario, settings):
    state, traces = run(two_sprite_scenario, settings, "warp-all")
    ship = [next(r for r in trace.sprites if r.sprite_id == "ship") for trace in traces[1:]]
    sky = [next(r for r in trace.sprites if r.sprite_id == "sky") for trace in traces[1:]]
    # the first corner drifts one pixel per frame on top of a rigid translation
    for t, row in enumerate(ship, start=1):
        assert row.action == "warp"
        assert row.frames_since_render == t
        assert row.fiducial.geometric_warp_error == pytest.approx(t * t / 4.0)
    assert all(row.fiducial.geometric_warp_error == pytest.approx(0.0, abs=1e-12) for row in sky)
    assert state.sprites["ship"].last_render_frame == 0
    assert len(state.sprites["ship"].error_history) == two_sprite_scenario.frame_count


def test_attention_weights_the_expected_cost(two_sprite_scenario, settings):
    attention = BinaryAttention({"ship": 0.5, "sky": 0.0}, alpha=0.2)
    _, traces = run(two_sprite_scenario, settings, "warp-all", attention=attention)
    last = traces[-1]
    ship = next(r for r in last.sprites if r.sprite_id == "ship")
    assert ship.attention_weight == pytest.approx(0.6)
    assert ship.attention_mass == 0.5
    assert last.expected_cost == pytest.approx(sum(r.attention_weight * r.perceptual_cost for r in last.sprites))
    assert last.expected_cost <= last.raw_cost


def test_plan_from_selection(two_sprite_scenario, settings):
    state, _ = run(two_sprite_scenario, settings, "greedy", frames=1)
    sprites = frame_sprites(state, two_sprite_scenario)
    models = settings.models(two_sprite_scenario, BinaryAttention({"ship": 1.0, "sky": 1.0}))
    plan = plan_from_selection(sprites, ["ship"], models, 50.0)
    assert plan.rerendered == ("ship",)
    assert plan.policy == "agent"
    assert plan.spend == pytest.approx(9.795 + 0.2 + 0.5)
    with pytest.raises(ValidationError, match="unknown sprite"):
        plan_from_selection(sprites, ["ghost"], models, 50.0)


def test_run_frame_rejects_incomplete_plans(two_sprite_scenario, settings):
    state, _ = run(two_sprite_scenario, settings, "greedy", frames=1)
    sprites = frame_sprites(state, two_sprite_scenario)
    models = settings.models(two_sprite_scenario, BinaryAttention({"ship": 1.0, "sky": 1.0}))
    plan = plan_frame(sprites, models, 50.0)
    partial = FramePlan({"ship": plan.actions["ship"]}, 0.0, 0.0, 50.0, "manual")
    with pytest.raises(ValidationError, match="no action for sprite"):
        run_frame(state, two_sprite_scenario, partial, models, 50.0)


def test_run_frame_checks_the_budget(two_sprite_scenario, settings):
    state = initial_state(settings)
    sprites = frame_sprites(state, two_sprite_scenario)
    models = settings.models(two_sprite_scenario, BinaryAttention({"ship": 1.0, "sky": 1.0}))
    plan = plan_from_selection(sprites, ["ship", "sky"], models, 10.0)
    with pytest.raises(InfeasibleBudgetError) as info:
        run_frame(state, two_sprite_scenario, plan, models, 10.0)
    assert info.value.frame == 0


def test_frame_sprites_past_the_end(two_sprite_scenario, settings):
    state, _ = run(two_sprite_scenario, settings, "greedy")
    with pytest.raises(ValidationError, match="past the end"):
        frame_sprites(state, two_sprite_scenario)


def test_trace_table(two_sprite_scenario, settings, tmp_path):
    _, traces = run(two_sprite_scenario, settings, "greedy")
    table = traces_to_dataframe(traces)
    assert list(table.columns) == list(TRACE_COLUMNS)
    assert len(table) == 2 * two_sprite_scenario.frame_count
    assert set(table["action"]) <= {"rerender", "warp"}
    assert (table["frame_spend"] <= table["frame_budget"]).all()

    path = tmp_path / "trace.csv"
    write_trace_csv(traces, path)
    loaded = pd.read_csv(path)
    assert list(loaded.columns) == list(TRACE_COLUMNS)
    assert loaded["sprite_id"].tolist() == table["sprite_id"].tolist()


def test_trace_output_is_deterministic(two_sprite_scenario, settings, tmp_path):
    _, first = run(two_sprite_scenario, settings, "greedy")
    _, second = run(two_sprite_scenario, settings, "greedy")
    write_trace_csv(first, tmp_path / "a.csv")
    write_trace_csv(second, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
