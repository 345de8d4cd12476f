#SPDX-License-Identifier: Apache-2.0
#File : generator.py

"""Synthetic scenario generator.

Every sprite gets one motion class:

- ``static``: points never move.
- ``translating``: constant velocity.
- ``rotating``: constant angular velocity about the sprite's initial centroid.
- ``wobble``: constant velocity plus a per-point displacement
  ``a*sin(2*pi*t/period)*u_i`` along a fixed unit direction ``u_i``; the
  displacement is not affine, so warping accumulates geometric error.

The output is a pure function of (spec, seed).
"""

import json
import logging
import math
import pathlib
import types
from dataclasses import dataclass, field, fields
from typing import Mapping, Optional, Tuple

import numpy as np

from render_gym_model.fiducial import QualityVector
from render_gym_scene.compute_cost import ComputeCostModel
from render_gym_scene.errors import ValidationError
from render_gym_scene.scene import (GROUPS, CharacteristicPointSet, LodLevel, Scenario, SceneObject, SpriteDecl,
                                    SpriteState, make_sprite)

FILE_PATH = pathlib.Path(__file__).parent

logger = logging.getLogger(__name__)

MOTION_CLASSES = ("static", "translating", "rotating", "wobble")


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of :func:`generate_synthetic`.

    ``frame_budget=None`` sizes the budget as the cost of warping every sprite
    plus ``budget_render_fraction`` of the cost of re-rendering every sprite at
    full quality, measured on frame 0.
    """
    sprite_count: int
    frame_count: int
    motion_mix: Mapping[str, float] = field(default_factory=lambda: {"static": 0.25, "translating": 0.25, "rotating": 0.25, "wobble": 0.25})
    group_probabilities: Mapping[str, float] = field(default_factory=lambda: {"primary_actor": 0.25, "secondary_actor": 0.25, "critical_environment": 0.25, "background_environment": 0.25})
    points_per_sprite: int = 4
    sprites_per_object: int = 3
    frame_budget: Optional[float] = None
    budget_render_fraction: float = 0.3
    screen: Tuple[int, int] = (640, 480)
    area_range: Tuple[float, float] = (0.01, 0.12)
    speed_range: Tuple[float, float] = (0.5, 4.0)
    angular_speed_range: Tuple[float, float] = (0.005, 0.03)
    wobble_amplitude: float = 3.0
    wobble_period: Optional[float] = None
    lod_polygons: Tuple[int, ...] = (6795, 2400, 850, 300, 97)
    max_geometry_error: float = 1.0
    max_texture_lod: int = 4
    max_shading_level: int = 3
    compute_model: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.sprite_count < 1:
            raise ValidationError("sprite count must be >= 1")
        if self.frame_count < 1:
            raise ValidationError("frame count must be >= 1")
        if self.points_per_sprite < 3:
            raise ValidationError("points_per_sprite must be >= 3")
        if self.sprites_per_object < 1:
            raise ValidationError("sprites_per_object must be >= 1")
        for name, mix, known in (("motion_mix", self.motion_mix, MOTION_CLASSES),
                                 ("group_probabilities", self.group_probabilities, GROUPS)):
            unknown = sorted(set(mix) - set(known))
            if unknown:
                raise ValidationError("%s has unknown key(s): %s" % (name, ", ".join(unknown)))
            if any(v < 0 for v in mix.values()) or sum(mix.values()) <= 0:
                raise ValidationError("%s must be nonnegative and not all zero" % name)
        if len(self.lod_polygons) < 1 or any(b >= a for a, b in zip(self.lod_polygons, self.lod_polygons[1:])):
            raise ValidationError("lod_polygons must be a non-empty, strictly decreasing list")
        if self.frame_budget is not None and self.frame_budget <= 0:
            raise ValidationError("frame_budget must be > 0")

    @property
    def period(self):
        return self.wobble_period if self.wobble_period else 4.0 * self.frame_count


def load_generator_spec(path=None, **overrides):
    """Read a generator spec JSON file on top of the shipped defaults.

    Args:
        path (str): spec file; ``None`` uses only ``generator_config.json``
        **overrides: fields that win over both files

    Returns:
        GeneratorSpec: the merged spec
    """
    with open(FILE_PATH / 'generator_config.json') as f:
        params = json.load(f)
    if path is not None:
        with open(path) as f:
            params.update(json.load(f))
    params.update(overrides)
    known = {f.name for f in fields(GeneratorSpec)}
    unknown = sorted(set(params) - known)
    if unknown:
        raise ValidationError("generator spec has unknown key(s): " + ", ".join(unknown))
    for key in ("screen", "area_range", "speed_range", "angular_speed_range", "lod_polygons"):
        if key in params:
            params[key] = tuple(params[key])
    return GeneratorSpec(**params)


def lod_curve(polygons, max_error):
    """Polygon budget whose geometry error grows with the squared log of the reduction factor."""
    top = polygons[0]
    span = math.log(top / polygons[-1]) if len(polygons) > 1 else 1.0
    return tuple(LodLevel(i, int(p), max_error * (math.log(top / p) / span) ** 2) for i, p in enumerate(polygons))


def _normalized(mix, keys):
    weights = np.array([float(mix.get(k, 0.0)) for k in keys])
    return weights / weights.sum()


def _base_points(rng, center, radius, count):
    angles = 2 * np.pi * np.arange(count) / count + np.pi / 4 + rng.uniform(-0.2, 0.2, count)
    radii = radius * rng.uniform(0.8, 1.0, count)
    return center + np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def motion_points(motion, base, t, velocity, omega, amplitude, period, directions):
    """Gold-standard points of a sprite at frame ``t`` for its motion class."""
    if motion == "static":
        return base
    if motion == "translating":
        return base + velocity * t
    if motion == "rotating":
        center = base.mean(axis=0)
        return center + (base - center) @ _rotation(omega * t).T
    return base + velocity * t + amplitude * math.sin(2 * math.pi * t / period) * directions


def generate_synthetic(spec, seed):
    """Generate a validated scenario.

    Args:
        spec (GeneratorSpec): generator parameters
        seed (int): random seed

    Returns:
        Scenario: deterministic in (spec, seed)
    """
    return _generate(spec, seed)[0]


def motion_classes(spec, seed):
    """Motion class of every sprite that :func:`generate_synthetic` produces for (spec, seed)."""
    return _generate(spec, seed)[1]


def _generate(spec, seed):
    rng = np.random.default_rng(seed)
    width, height = spec.screen
    motion_p = _normalized(spec.motion_mix, MOTION_CLASSES)
    group_p = _normalized(spec.group_probabilities, GROUPS)
    budget = lod_curve(spec.lod_polygons, spec.max_geometry_error)

    objects = []
    decls = {}
    tracks = {}
    index = 0
    while index < spec.sprite_count:
        size = int(min(rng.integers(1, spec.sprites_per_object + 1), spec.sprite_count - index))
        object_id = "obj%03d" % len(objects)
        group = GROUPS[int(rng.choice(len(GROUPS), p=group_p))]
        sprite_ids = tuple("s%03d" % i for i in range(index, index + size))
        edges = rng.random(size) < 0.5
        for sprite_id, edge in zip(sprite_ids, edges):
            decls[sprite_id] = SpriteDecl(sprite_id, object_id, bool(edge), budget,
                                          spec.max_texture_lod, spec.max_shading_level)
            area = float(rng.uniform(*spec.area_range))
            radius = math.sqrt(area * width * height) / 2
            center = np.array([rng.uniform(radius, max(radius, width - radius)),
                               rng.uniform(radius, max(radius, height - radius))])
            heading = rng.uniform(0, 2 * np.pi)
            directions = rng.uniform(0, 2 * np.pi, spec.points_per_sprite)
            tracks[sprite_id] = dict(
                motion=MOTION_CLASSES[int(rng.choice(len(MOTION_CLASSES), p=motion_p))],
                base=_base_points(rng, center, radius, spec.points_per_sprite),
                velocity=rng.uniform(*spec.speed_range) * np.array([math.cos(heading), math.sin(heading)]),
                omega=float(rng.uniform(*spec.angular_speed_range) * rng.choice([-1.0, 1.0])),
                amplitude=spec.wobble_amplitude,
                period=spec.period,
                directions=np.stack([np.cos(directions), np.sin(directions)], axis=1),
                area=area,
                pixels=int(round(area * width * height)),
            )
        objects.append(SceneObject(object_id, group, sprite_ids, tuple(s for s, e in zip(sprite_ids, edges) if e)))
        index += size

    frames = []
    for t in range(spec.frame_count):
        states = {}
        for sprite_id, track in tracks.items():
            points = motion_points(track["motion"], track["base"], t, track["velocity"], track["omega"],
                                   track["amplitude"], track["period"], track["directions"])
            states[sprite_id] = SpriteState(CharacteristicPointSet(points), track["area"], track["pixels"])
        frames.append(types.MappingProxyType(states))

    compute_model = ComputeCostModel.from_dict(dict(spec.compute_model))
    frame_budget = spec.frame_budget
    if frame_budget is None:
        sprites = [make_sprite(decls[s], frames[0][s]) for s in decls]
        finest = QualityVector()
        warp_total = sum(compute_model.warp_cost(s) for s in sprites)
        render_total = sum(compute_model.render_cost(s, finest) for s in sprites)
        frame_budget = warp_total + spec.budget_render_fraction * (render_total - warp_total)
    logger.debug("generated %d sprites in %d objects over %d frames (seed %d)",
                 len(decls), len(objects), spec.frame_count, seed)
    scenario = Scenario(float(frame_budget), compute_model, tuple(objects), types.MappingProxyType(decls), tuple(frames), seed)
    return scenario, {sprite_id: track["motion"] for sprite_id, track in tracks.items()}

