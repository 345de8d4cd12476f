#SPDX-License-Identifier: Apache-2.0
#File : scene.py

"""Scene and scenario data model.

A scenario file is one self-contained JSON document::

    {
      "frame_budget": 40.0,
      "compute_model": {"c0": 1.0, "c_poly": 0.001, "c_pix": 0.0001, "w0": 0.2, "w_pix": 0.00001},
      "objects": [
        {"id": "craft_a", "group": "primary_actor",
         "sprites": [{"id": "a_hull", "edge": true,
                      "polygon_budget": [[0, 6795, 0.0], [1, 97, 0.8]],
                      "max_texture_lod": 3, "max_shading_level": 2}]}
      ],
      "frames": [
        {"a_hull": {"points": [[0, 0], [10, 0], [10, 10], [0, 10]], "area_fraction": 0.05, "pixel_count": 15360}}
      ],
      "seed": 7
    }

``seed`` is optional. Every frame lists every declared sprite; a sprite that is
off screen for a while keeps ``area_fraction = 0`` for those frames.
"""

import json
import logging
import math
import pathlib
import types
from dataclasses import dataclass, replace
from functools import cached_property
from typing import TYPE_CHECKING, Mapping, Optional, Tuple

import numpy as np

from render_gym_scene.compute_cost import ComputeCostModel
from render_gym_scene.errors import ScenarioFormatError, ValidationError

if TYPE_CHECKING:
    from render_gym_model.fiducial import QualityVector

logger = logging.getLogger(__name__)

GROUPS = ("primary_actor", "secondary_actor", "critical_environment", "background_environment")
REQUIRED_KEYS = ("frame_budget", "compute_model", "objects", "frames")
OPTIONAL_KEYS = ("seed",)


def _is_number(value):
    return not isinstance(value, bool) and isinstance(value, (int, float)) and math.isfinite(value)


@dataclass(frozen=True, eq=False)
class CharacteristicPointSet:
    """Ordered screen-space points (pixels) tracked on a sprite. At least 3, all finite."""
    points: np.ndarray

    def __post_init__(self):
        try:
            pts = np.array(self.points, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError("characteristic points must be a list of [x, y] pairs")
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError("characteristic points must be a list of [x, y] pairs")
        if len(pts) < 3:
            raise ValidationError("at least 3 characteristic points are required, got %d" % len(pts))
        if not np.all(np.isfinite(pts)):
            raise ValidationError("characteristic points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, CharacteristicPointSet):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.array_equal(self.points, other.points))

    __hash__ = None

    def to_list(self):
        return self.points.tolist()


@dataclass(frozen=True)
class LodLevel:
    level: int
    polygon_count: int
    geometry_error: float


@dataclass(frozen=True)
class SpriteDecl:
    """Static, per-scenario facts about a sprite."""
    id: str
    object_id: str
    edge: bool
    polygon_budget: Tuple[LodLevel, ...]
    max_texture_lod: int = 0
    max_shading_level: int = 0


@dataclass(frozen=True)
class SpriteState:
    """One sprite in one frame: gold-standard points and screen footprint."""
    points: CharacteristicPointSet
    area_fraction: float
    pixel_count: int


@dataclass(frozen=True)
class SceneObject:
    id: str
    group: str
    sprite_ids: Tuple[str, ...]
    edge_sprite_ids: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValidationError("object '%s' has unknown group '%s' (expected one of %s)" % (self.id, self.group, ", ".join(GROUPS)))
        if not self.sprite_ids:
            raise ValidationError("object '%s' has no sprites" % self.id)
        stray = [s for s in self.edge_sprite_ids if s not in self.sprite_ids]
        if stray:
            raise ValidationError("object '%s' marks edge sprite(s) it does not own: %s" % (self.id, ", ".join(stray)))


@dataclass(frozen=True, eq=False)
class Sprite:
    """The unit of regulation, as seen by the regulator in the current frame.

    ``points_gold``, ``area_fraction`` and ``pixel_count`` describe the current
    frame; the ``*_at_last_render`` fields and ``last_render_frame`` describe
    the last re-render and stay ``None`` until the sprite has been rendered once.
    """
    id: str
    object_id: str
    area_fraction: float
    points_gold: CharacteristicPointSet
    pixel_count: int
    polygon_budget: Tuple[LodLevel, ...]
    max_texture_lod: int = 0
    max_shading_level: int = 0
    points_at_last_render: Optional[CharacteristicPointSet] = None
    last_render_frame: Optional[int] = None
    quality_at_last_render: Optional["QualityVector"] = None
    error_history: Tuple[float, ...] = ()

    @property
    def rendered(self):
        return self.points_at_last_render is not None

    @property
    def max_geometry_lod(self):
        return len(self.polygon_budget) - 1

    def polygons(self, geometry_lod):
        return self.polygon_budget[geometry_lod].polygon_count

    def geometry_error(self, geometry_lod):
        return self.polygon_budget[geometry_lod].geometry_error


def make_sprite(decl, state, previous=None):
    """Build the runtime :class:`Sprite` for a frame.

    Args:
        decl (SpriteDecl): static declaration
        state (SpriteState): the sprite in the current frame
        previous (Sprite): the sprite as of the previous frame, carrying its render state

    Returns:
        Sprite: current-frame sprite
    """
    if previous is None:
        return Sprite(id=decl.id, object_id=decl.object_id, area_fraction=state.area_fraction,
                      points_gold=state.points, pixel_count=state.pixel_count,
                      polygon_budget=decl.polygon_budget, max_texture_lod=decl.max_texture_lod,
                      max_shading_level=decl.max_shading_level)
    return replace(previous, area_fraction=state.area_fraction, points_gold=state.points, pixel_count=state.pixel_count)


@dataclass(frozen=True, eq=False)
class Scenario:
    frame_budget: float
    compute_model: ComputeCostModel
    objects: Tuple[SceneObject, ...]
    sprites: Mapping[str, SpriteDecl]
    frames: Tuple[Mapping[str, SpriteState], ...]
    seed: Optional[int] = None

    @property
    def frame_count(self):
        return len(self.frames)

    @property
    def sprite_ids(self):
        return tuple(self.sprites)

    @cached_property
    def objects_by_id(self):
        return {o.id: o for o in self.objects}

    def object_of(self, sprite_id):
        return self.objects_by_id[self.sprites[sprite_id].object_id]

    def group_of(self, sprite_id):
        return self.object_of(sprite_id).group

    def with_budget(self, frame_budget):
        """Copy of this scenario with another frame budget."""
        if not _is_number(frame_budget) or frame_budget <= 0:
            raise ValidationError("frame_budget must be > 0")
        return replace(self, frame_budget=float(frame_budget))


def _parse_polygon_budget(sprite_id, raw):
    if not isinstance(raw, list) or not raw:
        raise ValidationError("sprite '%s': polygon_budget must be a non-empty list of [lod, polygons, geometry_error]" % sprite_id)
    levels = []
    for index, entry in enumerate(raw):
        if not isinstance(entry, list) or len(entry) != 3:
            raise ValidationError("sprite '%s': polygon_budget entries must be [lod, polygons, geometry_error]" % sprite_id)
        lod, polygons, error = entry
        if lod != index:
            raise ValidationError("sprite '%s': polygon_budget lod levels must be 0..L-1 in order" % sprite_id)
        if isinstance(polygons, bool) or not isinstance(polygons, int) or polygons <= 0:
            raise ValidationError("sprite '%s': polygon counts must be positive integers" % sprite_id)
        if not _is_number(error) or error < 0:
            raise ValidationError("sprite '%s': geometry_error must be a finite nonnegative number" % sprite_id)
        levels.append(LodLevel(index, polygons, float(error)))
    if levels[0].geometry_error != 0:
        raise ValidationError("sprite '%s': geometry_error at lod 0 must be 0" % sprite_id)
    for finer, coarser in zip(levels, levels[1:]):
        if coarser.polygon_count >= finer.polygon_count:
            raise ValidationError("sprite '%s': polygon_budget must be monotone decreasing" % sprite_id)
        if coarser.geometry_error < finer.geometry_error:
            raise ValidationError("sprite '%s': geometry_error must not decrease as lod coarsens" % sprite_id)
    return tuple(levels)


def _parse_level_count(sprite_id, sprite, key):
    value = sprite.get(key, 0)
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValidationError("sprite '%s': %s must be a nonnegative integer" % (sprite_id, key))
    return value


def _parse_objects(raw):
    if not isinstance(raw, list) or not raw:
        raise ValidationError("objects must be a non-empty list")
    objects = []
    sprites = {}
    seen_objects = set()
    for obj in raw:
        if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
            raise ValidationError("every object needs a string id")
        object_id = obj["id"]
        if object_id in seen_objects:
            raise ValidationError("duplicate object id '%s'" % object_id)
        seen_objects.add(object_id)
        unknown = sorted(set(obj) - {"id", "group", "sprites"})
        if unknown:
            raise ValidationError("object '%s' has unknown key(s): %s" % (object_id, ", ".join(unknown)))
        raw_sprites = obj.get("sprites")
        if not isinstance(raw_sprites, list) or not raw_sprites:
            raise ValidationError("object '%s' has no sprites" % object_id)
        sprite_ids = []
        edge_ids = []
        for sprite in raw_sprites:
            if not isinstance(sprite, dict) or not isinstance(sprite.get("id"), str):
                raise ValidationError("object '%s': every sprite needs a string id" % object_id)
            sprite_id = sprite["id"]
            if sprite_id in sprites:
                raise ValidationError("sprite '%s' belongs to more than one object" % sprite_id)
            unknown = sorted(set(sprite) - {"id", "edge", "polygon_budget", "max_texture_lod", "max_shading_level"})
            if unknown:
                raise ValidationError("sprite '%s' has unknown key(s): %s" % (sprite_id, ", ".join(unknown)))
            edge = sprite.get("edge", False)
            if not isinstance(edge, bool):
                raise ValidationError("sprite '%s': edge must be true or false" % sprite_id)
            sprites[sprite_id] = SpriteDecl(
                id=sprite_id, object_id=object_id, edge=edge,
                polygon_budget=_parse_polygon_budget(sprite_id, sprite.get("polygon_budget")),
                max_texture_lod=_parse_level_count(sprite_id, sprite, "max_texture_lod"),
                max_shading_level=_parse_level_count(sprite_id, sprite, "max_shading_level"))
            sprite_ids.append(sprite_id)
            if edge:
                edge_ids.append(sprite_id)
        objects.append(SceneObject(object_id, obj.get("group"), tuple(sprite_ids), tuple(edge_ids)))
    return tuple(objects), sprites


def _parse_state(frame_index, sprite_id, raw):
    if not isinstance(raw, dict):
        raise ValidationError("frame %d: sprite '%s' state must be an object" % (frame_index, sprite_id))
    unknown = sorted(set(raw) - {"points", "area_fraction", "pixel_count"})
    if unknown:
        raise ValidationError("frame %d: sprite '%s' has unknown key(s): %s" % (frame_index, sprite_id, ", ".join(unknown)))
    area = raw.get("area_fraction")
    if not _is_number(area) or not 0.0 <= area <= 1.0:
        raise ValidationError("area_fraction out of range: frame %d, sprite '%s', value %r" % (frame_index, sprite_id, area))
    pixels = raw.get("pixel_count")
    if isinstance(pixels, bool) or not isinstance(pixels, int) or pixels < 0:
        raise ValidationError("pixel_count must be a nonnegative integer: frame %d, sprite '%s'" % (frame_index, sprite_id))
    try:
        points = CharacteristicPointSet(raw.get("points"))
    except ValidationError as e:
        raise ValidationError("frame %d, sprite '%s': %s" % (frame_index, sprite_id, e))
    return SpriteState(points, float(area), pixels)


def _parse_frames(raw, objects, sprites):
    if not isinstance(raw, list) or not raw:
        raise ValidationError("frames must be a non-empty list")
    frames = []
    point_counts = {}
    for t, frame in enumerate(raw):
        if not isinstance(frame, dict):
            raise ValidationError("frame %d must map sprite ids to states" % t)
        for obj in objects:
            for sprite_id in obj.sprite_ids:
                if sprite_id not in frame:
                    raise ValidationError("sprite '%s' referenced by object '%s' is absent from frame %d" % (sprite_id, obj.id, t))
        stray = sorted(set(frame) - set(sprites))
        if stray:
            raise ValidationError("frame %d lists undeclared sprite(s): %s" % (t, ", ".join(stray)))
        states = {}
        for sprite_id in sprites:
            state = _parse_state(t, sprite_id, frame[sprite_id])
            expected = point_counts.setdefault(sprite_id, len(state.points))
            if len(state.points) != expected:
                raise ValidationError("sprite '%s' changes its characteristic point count at frame %d" % (sprite_id, t))
            states[sprite_id] = state
        frames.append(types.MappingProxyType(states))
    return tuple(frames)


def scenario_from_dict(doc):
    """Validate a parsed scenario document and build the :class:`Scenario`.

    Args:
        doc (dict): the parsed JSON document

    Returns:
        Scenario: the validated scenario
    """
    if not isinstance(doc, dict):
        raise ScenarioFormatError("a scenario document must be a JSON object")
    unknown = sorted(set(doc) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise ValidationError("unknown top-level key(s): " + ", ".join(unknown))
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise ValidationError("missing top-level key(s): " + ", ".join(missing))
    budget = doc["frame_budget"]
    if not _is_number(budget) or budget <= 0:
        raise ValidationError("frame_budget must be > 0")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ValidationError("seed must be an integer")
    compute_model = ComputeCostModel.from_dict(doc["compute_model"])
    objects, sprites = _parse_objects(doc["objects"])
    frames = _parse_frames(doc["frames"], objects, sprites)
    return Scenario(float(budget), compute_model, objects, types.MappingProxyType(sprites), frames, seed)


def scenario_to_dict(scenario):
    """Inverse of :func:`scenario_from_dict`."""
    objects = []
    for obj in scenario.objects:
        members = []
        for sprite_id in obj.sprite_ids:
            decl = scenario.sprites[sprite_id]
            members.append({
                "id": sprite_id,
                "edge": decl.edge,
                "polygon_budget": [[lod.level, lod.polygon_count, lod.geometry_error] for lod in decl.polygon_budget],
                "max_texture_lod": decl.max_texture_lod,
                "max_shading_level": decl.max_shading_level,
            })
        objects.append({"id": obj.id, "group": obj.group, "sprites": members})
    frames = []
    for frame in scenario.frames:
        frames.append({sprite_id: {"points": state.points.to_list(),
                                   "area_fraction": state.area_fraction,
                                   "pixel_count": state.pixel_count}
                       for sprite_id, state in frame.items()})
    doc = {
        "frame_budget": scenario.frame_budget,
        "compute_model": scenario.compute_model.to_dict(),
        "objects": objects,
        "frames": frames,
    }
    if scenario.seed is not None:
        doc["seed"] = scenario.seed
    return doc


def load_scenario(path):
    """Load and validate a scenario file.

    Args:
        path (str or pathlib.Path): the JSON scenario file

    Returns:
        Scenario: the validated scenario
    """
    path = pathlib.Path(path)
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError("cannot parse scenario '%s': %s" % (path, e))
    scenario = scenario_from_dict(doc)
    logger.info("loaded scenario %s: %d frames, %d sprites, %d objects",
                path.name, scenario.frame_count, len(scenario.sprites), len(scenario.objects))
    return scenario


def save_scenario(scenario, path):
    """Write ``scenario`` in the scenario file format."""
    with open(path, "w") as outfile:
        json.dump(scenario_to_dict(scenario), outfile, indent=2)
