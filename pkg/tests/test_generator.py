#SPDX-License-Identifier: Apache-2.0
#File : test_generator.py

import json

import pytest

from render_gym_model.fiducial import FINEST, fit_affine
from render_gym_scene.errors import ValidationError
from render_gym_scene.generator import generate_synthetic, load_generator_spec, lod_curve, motion_classes
from render_gym_scene.scene import make_sprite, scenario_to_dict


def test_shipped_defaults():
    spec = load_generator_spec()
    assert spec.sprite_count == 20 and spec.frame_count == 100
    assert spec.period == 400.0
    scenario = generate_synthetic(spec, 7)
    assert scenario.frame_count == 100
    assert len(scenario.sprites) == 20
    assert set(motion_classes(spec, 7).values()) <= {"static", "translating", "rotating", "wobble"}


def test_static_scene_never_moves():
    spec = load_generator_spec(sprite_count=3, frame_count=5, motion_mix={"static": 1.0})
    scenario = generate_synthetic(spec, 1)
    assert scenario.frame_count == 5
    assert len(scenario.sprites) == 3
    for frame in scenario.frames[1:]:
        for sprite_id, state in frame.items():
            assert state.points == scenario.frames[0][sprite_id].points


def test_generation_is_deterministic():
    spec = load_generator_spec(sprite_count=6, frame_count=12)
    first = json.dumps(scenario_to_dict(generate_synthetic(spec, 3)), sort_keys=True)
    second = json.dumps(scenario_to_dict(generate_synthetic(spec, 3)), sort_keys=True)
    other = json.dumps(scenario_to_dict(generate_synthetic(spec, 4)), sort_keys=True)
    assert first == second
    assert first != other


@pytest.mark.parametrize("motion", ["translating", "rotating"])
def test_rigid_motion_warps_exactly(motion):
    spec = load_generator_spec(sprite_count=10, frame_count=100, motion_mix={motion: 1.0})
    scenario = generate_synthetic(spec, 7)
    assert set(motion_classes(spec, 7).values()) == {motion}
    for sprite_id in scenario.sprites:
        start = scenario.frames[0][sprite_id].points
        for t in (1, 50, 99):
            assert fit_affine(start, scenario.frames[t][sprite_id].points).residual <= 1e-9


def test_wobble_error_grows_over_the_first_quarter_period():
    spec = load_generator_spec(sprite_count=4, frame_count=12, motion_mix={"wobble": 1.0})
    scenario = generate_synthetic(spec, 9)
    for sprite_id in scenario.sprites:
        start = scenario.frames[0][sprite_id].points
        residuals = [fit_affine(start, scenario.frames[t][sprite_id].points).residual for t in range(1, 12)]
        assert residuals[0] > 0
        assert all(b > a for a, b in zip(residuals, residuals[1:]))


def test_objects_and_groups_are_valid():
    spec = load_generator_spec(sprite_count=15, frame_count=2, group_probabilities={"secondary_actor": 1.0})
    scenario = generate_synthetic(spec, 11)
    owned = [s for o in scenario.objects for s in o.sprite_ids]
    assert sorted(owned) == sorted(scenario.sprites)
    assert {o.group for o in scenario.objects} == {"secondary_actor"}
    assert all(len(o.sprite_ids) <= spec.sprites_per_object for o in scenario.objects)


def test_auto_budget_sits_between_warp_and_render():
    spec = load_generator_spec(sprite_count=6, frame_count=2, budget_render_fraction=0.5)
    scenario = generate_synthetic(spec, 1)
    sprites = [make_sprite(scenario.sprites[s], scenario.frames[0][s]) for s in scenario.sprites]
    warp = sum(scenario.compute_model.warp_cost(s) for s in sprites)
    render = sum(scenario.compute_model.render_cost(s, FINEST) for s in sprites)
    assert scenario.frame_budget == pytest.approx(warp + 0.5 * (render - warp))

    explicit = generate_synthetic(load_generator_spec(sprite_count=6, frame_count=2, frame_budget=12.5), 1)
    assert explicit.frame_budget == 12.5


def test_lod_curve_shape():
    levels = lod_curve((6795, 2400, 850, 300, 97), 1.0)
    assert levels[0].geometry_error == 0.0
    assert levels[-1].geometry_error == pytest.approx(1.0)
    assert [lod.polygon_count for lod in levels] == [6795, 2400, 850, 300, 97]
    errors = [lod.geometry_error for lod in levels]
    assert errors == sorted(errors)


@pytest.mark.parametrize("overrides, message", [
    ({"sprite_count": 0}, "sprite count"),
    ({"frame_count": 0}, "frame count"),
    ({"motion_mix": {"teleport": 1.0}}, "unknown key"),
    ({"lod_polygons": [10, 20]}, "strictly decreasing"),
    ({"colour": "red"}, "unknown key"),
])
def test_invalid_spec(overrides, message):
    with pytest.raises(ValidationError, match=message):
        load_generator_spec(**overrides)


def test_spec_file_overrides_defaults(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"sprite_count": 4, "frame_count": 3, "screen": [320, 240]}))
    spec = load_generator_spec(path, frame_count=6)
    assert spec.sprite_count == 4
    assert spec.frame_count == 6
    assert spec.screen == (320, 240)
    assert spec.period == 24.0
