#SPDX-License-Identifier: Apache-2.0
#File : conftest.py

import copy

import numpy as np
import pytest

from render_gym_client.env import load_config_file
from render_gym_model.attention import BinaryAttention
from render_gym_model.fiducial import FINEST
from render_gym_model.perceptual_cost import CostModel
from render_gym_regulator.regulator import RegulatorModels
from render_gym_scene.compute_cost import ComputeCostModel
from render_gym_scene.generator import generate_synthetic, load_generator_spec
from render_gym_scene.scene import CharacteristicPointSet, LodLevel, Sprite, scenario_from_dict

SQUARE = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]


def _square_at(x, y, corner_dx=0.0):
    """Unit-10 square at (x, y); ``corner_dx`` displaces the first corner only."""
    points = [[px + x, py + y] for px, py in SQUARE]
    points[0][0] += corner_dx
    return points


def two_sprite_doc(frame_count=4):
    """``ship`` (primary, wobbling first corner) and ``sky`` (background, static)."""
    frames = []
    for t in range(frame_count):
        frames.append({
            "ship": {"points": _square_at(100.0 + 2.0 * t, 50.0, corner_dx=float(t)), "area_fraction": 0.2, "pixel_count": 20000},
            "sky": {"points": _square_at(300.0, 200.0), "area_fraction": 0.5, "pixel_count": 50000},
        })
    return {
        "frame_budget": 50.0,
        "compute_model": {"c0": 1.0, "c_poly": 0.001, "c_pix": 0.0001, "w0": 0.2, "w_pix": 0.00001},
        "objects": [
            {"id": "craft", "group": "primary_actor", "sprites": [
                {"id": "ship", "edge": True, "polygon_budget": [[0, 6795, 0.0], [1, 850, 0.3], [2, 97, 1.0]],
                 "max_texture_lod": 3, "max_shading_level": 2}]},
            {"id": "backdrop", "group": "background_environment", "sprites": [
                {"id": "sky", "edge": False, "polygon_budget": [[0, 400, 0.0], [1, 100, 0.5]],
                 "max_texture_lod": 3, "max_shading_level": 2}]},
        ],
        "frames": frames,
        "seed": 1,
    }


@pytest.fixture
def scenario_doc():
    return two_sprite_doc()


@pytest.fixture
def two_sprite_scenario():
    return scenario_from_dict(two_sprite_doc())


@pytest.fixture
def generated_scenario():
    spec = load_generator_spec(sprite_count=8, frame_count=10)
    return generate_synthetic(spec, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def make_sprite():
    """Factory for runtime sprites; ``last`` points make the sprite warp-eligible."""
    def factory(sprite_id="s", area=0.5, points=SQUARE, last=None, quality=None, pixels=10000,
                budget=((0, 1000, 0.0), (1, 100, 0.5)), max_texture_lod=4, max_shading_level=3):
        return Sprite(
            id=sprite_id, object_id="obj_" + sprite_id, area_fraction=area,
            points_gold=CharacteristicPointSet(points), pixel_count=pixels,
            polygon_budget=tuple(LodLevel(*level) for level in budget),
            max_texture_lod=max_texture_lod, max_shading_level=max_shading_level,
            points_at_last_render=None if last is None else CharacteristicPointSet(last),
            last_render_frame=None if last is None else 0,
            quality_at_last_render=None if last is None else (quality or FINEST),
        )
    return factory


@pytest.fixture
def make_models():
    """Factory for regulator models with a binary attention model over ``p``."""
    def factory(p, alpha=0.0, cost_model=None, compute_model=None, **kwargs):
        return RegulatorModels(cost_model or CostModel(), BinaryAttention(p, alpha),
                               compute_model or ComputeCostModel(), **kwargs)
    return factory


@pytest.fixture
def config():
    """Factory for merged configs: ``config(model, regulator={...}, attention={...})``."""
    def factory(model="object", **sections):
        config_json = copy.deepcopy(load_config_file(model=model))
        for section, values in sections.items():
            if isinstance(values, dict):
                config_json[section] = {**(config_json.get(section) or {}), **values}
            else:
                config_json[section] = values
        return config_json
    return factory
