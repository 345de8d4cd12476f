#SPDX-License-Identifier: Apache-2.0
#File : test_scene.py

import json
import pathlib
from dataclasses import replace

import numpy as np
import pytest
from conftest import two_sprite_doc

from render_gym_scene.errors import ScenarioFormatError, ValidationError
from render_gym_scene.scene import (GROUPS, CharacteristicPointSet, SceneObject, load_scenario, make_sprite, save_scenario,
                                    scenario_from_dict, scenario_to_dict)

SPACECRAFT = pathlib.Path(__file__).resolve().parent.parent / "render_gym_scene" / "scenarios" / "spacecraft.json"


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_load_hand_written_scenario(tmp_path):
    scenario = load_scenario(write(tmp_path, two_sprite_doc(frame_count=10)))
    assert scenario.frame_count == 10
    assert sorted(scenario.sprites) == ["ship", "sky"]
    assert scenario.group_of("ship") == "primary_actor"
    assert scenario.object_of("sky").id == "backdrop"
    assert scenario.objects_by_id["craft"].edge_sprite_ids == ("ship",)
    assert scenario.frame_budget == 50.0
    assert scenario.seed == 1


def test_area_fraction_out_of_range(tmp_path, scenario_doc):
    scenario_doc["frames"][2]["sky"]["area_fraction"] = 1.3
    with pytest.raises(ValidationError, match="area_fraction out of range"):
        load_scenario(write(tmp_path, scenario_doc))


def test_sprite_missing_from_frame(tmp_path, scenario_doc):
    del scenario_doc["frames"][1]["ship"]
    with pytest.raises(ValidationError, match="'ship' referenced by object 'craft' is absent from frame 1"):
        load_scenario(write(tmp_path, scenario_doc))


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d.update(extra=1), "unknown top-level key"),
    (lambda d: d.pop("compute_model"), "missing top-level key"),
    (lambda d: d.update(frame_budget=0), "frame_budget must be > 0"),
    (lambda d: d["objects"][0].update(group="hero"), "unknown group 'hero'"),
    (lambda d: d["objects"][1]["sprites"].append(dict(d["objects"][0]["sprites"][0])), "belongs to more than one object"),
    (lambda d: d["objects"][0]["sprites"][0].update(polygon_budget=[[0, 100, 0.0], [1, 200, 0.5]]), "monotone decreasing"),
    (lambda d: d["objects"][0]["sprites"][0].update(polygon_budget=[[0, 100, 0.1]]), "lod 0 must be 0"),
    (lambda d: d["frames"][3]["ship"]["points"].pop(), "changes its characteristic point count"),
    (lambda d: d["frames"][0]["ship"].update(points=[[0, 0], [1, 1]]), "at least 3 characteristic points"),
    (lambda d: d["frames"][0]["ship"].update(pixel_count=-4), "pixel_count must be a nonnegative integer"),
    (lambda d: d["frames"][0].update(ghost=d["frames"][0]["sky"]), "undeclared sprite"),
])
def test_validation_names_the_violation(tmp_path, scenario_doc, mutate, message):
    mutate(scenario_doc)
    with pytest.raises(ValidationError, match=message):
        load_scenario(write(tmp_path, scenario_doc))


def test_malformed_file_is_a_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"frame_budget": 3,')
    with pytest.raises(ScenarioFormatError):
        load_scenario(path)


def test_nonfinite_points_rejected():
    with pytest.raises(ValidationError, match="finite"):
        CharacteristicPointSet([[0, 0], [1, np.inf], [2, 2]])


def test_edge_sprites_must_belong_to_object():
    with pytest.raises(ValidationError, match="edge sprite"):
        SceneObject("o", GROUPS[0], ("a",), ("b",))


def test_round_trip_is_structurally_identical(tmp_path, scenario_doc):
    scenario = scenario_from_dict(scenario_doc)
    doc = scenario_to_dict(scenario)
    assert doc["objects"] == scenario_doc["objects"]
    assert doc["frames"] == scenario_doc["frames"]
    assert doc["seed"] == scenario_doc["seed"]

    path = tmp_path / "saved.json"
    save_scenario(scenario, path)
    assert scenario_to_dict(load_scenario(path)) == doc


def test_make_sprite_carries_render_state(two_sprite_scenario):
    decl = two_sprite_scenario.sprites["ship"]
    first = make_sprite(decl, two_sprite_scenario.frames[0]["ship"])
    assert not first.rendered
    assert first.max_geometry_lod == 2
    assert first.polygons(1) == 850
    assert first.geometry_error(2) == 1.0

    rendered = replace(first, points_at_last_render=first.points_gold, last_render_frame=0)
    later = make_sprite(decl, two_sprite_scenario.frames[3]["ship"], rendered)
    assert later.rendered
    assert later.last_render_frame == 0
    assert later.points_at_last_render == first.points_gold
    assert later.points_gold == two_sprite_scenario.frames[3]["ship"].points


def test_with_budget(two_sprite_scenario):
    assert two_sprite_scenario.with_budget(7.5).frame_budget == 7.5
    assert two_sprite_scenario.frame_budget == 50.0
    with pytest.raises(ValidationError):
        two_sprite_scenario.with_budget(-1)


def test_shipped_spacecraft_scenario():
    scenario = load_scenario(SPACECRAFT)
    assert len(scenario.sprites) >= 6
    assert len(scenario.objects) >= 3
    groups = {o.group for o in scenario.objects}
    assert {"primary_actor", "secondary_actor", "background_environment"} <= groups
    for frame in scenario.frames:
        assert set(frame) == set(scenario.sprites)
