#SPDX-License-Identifier: Apache-2.0
#File : attention.py

"""Viewer attention models and expected perceptual cost.

Three families are supported:

- :class:`BinaryAttention`: sprite ``i`` is attended with probability ``p_i``;
  an unattended sprite's cost is discounted by a constant ``alpha``.
- :class:`ContinuousAttention`: attention is a random variable ``x`` in [0, 1]
  with a piecewise-constant density per sprite; cost is discounted by ``alpha(x)``.
- :class:`ObjectConditionedAttention`: the viewer attends to an object with
  ``p_obj`` and then to one of its sprites with ``p(sprite | object)``.

In every family the expected cost is linear in each sprite's cost, so a model
reduces to a per-sprite multiplier (:func:`attention_weight`).
"""

import logging
import math
import types
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import ClassVar, Tuple, Union

import numpy as np
from scipy import stats

from render_gym_scene.errors import AttentionModelError
from render_gym_scene.scene import GROUPS

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
DEFAULT_PRIORS = {"primary_actor": 0.6, "secondary_actor": 0.25, "critical_environment": 0.1, "background_environment": 0.05}

# assumption flag recorded in traces when object attention sums to one
OBJECT_NORMALIZED = "object_attention_normalized"


def _check_probability(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating)) or not 0.0 <= value <= 1.0:
        raise AttentionModelError("%s must be a probability in [0, 1], got %r" % (name, value))
    return float(value)


@dataclass(frozen=True)
class BinaryAttention:
    p: Mapping[str, float]
    alpha: float = 0.0
    assumptions: Tuple[str, ...] = ()
    family: ClassVar[str] = "binary"

    def __post_init__(self):
        _check_probability("alpha", self.alpha)
        p = {s: _check_probability("p[%s]" % s, v) for s, v in self.p.items()}
        object.__setattr__(self, "p", types.MappingProxyType(p))
        object.__setattr__(self, "alpha", float(self.alpha))

    def mass(self, sprite_id):
        try:
            return self.p[sprite_id]
        except KeyError:
            raise AttentionModelError("no attention probability for sprite '%s'" % sprite_id)

    def weight(self, sprite_id):
        p = self.mass(sprite_id)
        return p + (1.0 - p) * self.alpha


@dataclass(frozen=True)
class Attenuation:
    """Monotone map ``alpha(x)`` from attention level to cost multiplier.

    ``power``: ``x**exponent``; ``floor``: ``floor + (1 - floor)*x``.
    """
    family: str = "power"
    exponent: float = 1.0
    floor: float = 0.0

    def __post_init__(self):
        if self.family not in ("power", "floor"):
            raise AttentionModelError("unknown attenuation family '%s' (expected power or floor)" % self.family)
        if not self.exponent > 0:
            raise AttentionModelError("attenuation exponent must be > 0")
        _check_probability("attenuation floor", self.floor)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "power":
            return x ** self.exponent
        return self.floor + (1.0 - self.floor) * x


def make_attenuation(spec=None):
    """Build an :class:`Attenuation` from a config dict (``None`` gives ``alpha(x) = x``)."""
    if spec is None:
        return Attenuation()
    if isinstance(spec, Attenuation):
        return spec
    unknown = sorted(set(spec) - {"family", "exponent", "floor"})
    if unknown:
        raise AttentionModelError("attenuation has unknown key(s): " + ", ".join(unknown))
    return Attenuation(**spec)


@dataclass(frozen=True, eq=False)
class ContinuousAttention:
    """Per-sprite piecewise-constant densities on [0, 1].

    ``densities[s][k]`` is the density height on bin ``[k/K, (k+1)/K)``, so
    ``sum(densities[s]) / K`` must be 1. ``attenuation`` is averaged over each
    bin by the midpoint rule with ``subdivisions`` points.

    Attention is resolved per bin only: a density held entirely in the top of
    K bins has mean attention ``1 - 1/(2K)``, and under ``alpha(x) = x`` its
    weight is ``1 - 1/(2K)`` rather than 1. Narrow the top bin to approach a
    point mass at full attention.
    """
    densities: Mapping[str, np.ndarray]
    attenuation: object = field(default_factory=Attenuation)
    subdivisions: int = 64
    assumptions: Tuple[str, ...] = ()
    family: ClassVar[str] = "continuous"

    def __post_init__(self):
        if self.subdivisions < 64:
            raise AttentionModelError("at least 64 subdivisions per bin are required, got %d" % self.subdivisions)
        densities = {}
        bins = None
        for sprite_id, heights in self.densities.items():
            heights = np.array(heights, dtype=float)
            if heights.ndim != 1 or len(heights) < 1:
                raise AttentionModelError("density for sprite '%s' must be a non-empty list of bin heights" % sprite_id)
            if bins is None:
                bins = len(heights)
            elif len(heights) != bins:
                raise AttentionModelError("all densities need the same bin count; sprite '%s' has %d, expected %d"
                                          % (sprite_id, len(heights), bins))
            if not np.all(np.isfinite(heights)) or np.any(heights < 0):
                raise AttentionModelError("density for sprite '%s' must be finite and nonnegative" % sprite_id)
            total = math.fsum(heights) / bins
            if abs(total - 1.0) > TOLERANCE:
                raise AttentionModelError("density for sprite '%s' integrates to %.12g, not 1" % (sprite_id, total))
            heights.setflags(write=False)
            densities[sprite_id] = heights
        object.__setattr__(self, "densities", types.MappingProxyType(densities))
        object.__setattr__(self, "attenuation", make_attenuation(self.attenuation) if isinstance(self.attenuation, dict) else self.attenuation)
        object.__setattr__(self, "_bin_attenuation", self._average_attenuation(bins or 1))

    @property
    def bins(self):
        return len(self._bin_attenuation)

    def _average_attenuation(self, bins):
        offsets = (np.arange(self.subdivisions) + 0.5) / self.subdivisions
        x = (np.arange(bins)[:, None] + offsets[None, :]) / bins
        values = np.asarray(self.attenuation(x), dtype=float)
        if np.any(values < -TOLERANCE) or np.any(values > 1 + TOLERANCE):
            raise AttentionModelError("attenuation must map [0, 1] into [0, 1]")
        if np.any(np.diff(values.ravel()) < -TOLERANCE):
            raise AttentionModelError("attenuation must be monotone nondecreasing")
        averages = values.mean(axis=1)
        averages.setflags(write=False)
        return averages

    def _heights(self, sprite_id):
        try:
            return self.densities[sprite_id]
        except KeyError:
            raise AttentionModelError("no attention density for sprite '%s'" % sprite_id)

    def weight(self, sprite_id):
        heights = self._heights(sprite_id)
        return math.fsum(heights * self._bin_attenuation) / self.bins

    def mass(self, sprite_id):
        """Mean attention level of the sprite."""
        heights = self._heights(sprite_id)
        centers = (np.arange(self.bins) + 0.5) / self.bins
        return math.fsum(heights * centers) / self.bins


@dataclass(frozen=True, eq=False)
class ObjectConditionedAttention:
    """``p_sprite_given_obj[object_id][sprite_id]``; a sprite belongs to one object."""
    p_obj: Mapping[str, float]
    p_sprite_given_obj: Mapping[str, Mapping[str, float]]
    alpha: float = 0.0
    assumptions: Tuple[str, ...] = ()
    family: ClassVar[str] = "object"

    def __post_init__(self):
        _check_probability("alpha", self.alpha)
        p_obj = {o: _check_probability("p_obj[%s]" % o, v) for o, v in self.p_obj.items()}
        members = {}
        owner = {}
        for object_id, conditionals in self.p_sprite_given_obj.items():
            checked = {s: _check_probability("p_sprite_given_obj[%s][%s]" % (object_id, s), v)
                       for s, v in conditionals.items()}
            total = math.fsum(checked.values())
            if total > 1.0 + TOLERANCE:
                raise AttentionModelError("sprite conditionals of object '%s' sum to %.12g > 1" % (object_id, total))
            for sprite_id in checked:
                if sprite_id in owner:
                    raise AttentionModelError("sprite '%s' is listed under objects '%s' and '%s'"
                                              % (sprite_id, owner[sprite_id], object_id))
                owner[sprite_id] = object_id
            members[object_id] = types.MappingProxyType(checked)
        object.__setattr__(self, "p_obj", types.MappingProxyType(p_obj))
        object.__setattr__(self, "p_sprite_given_obj", types.MappingProxyType(members))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "_owner", types.MappingProxyType(owner))

    def object_of(self, sprite_id):
        object_id = self._owner.get(sprite_id)
        if object_id is None or object_id not in self.p_obj:
            raise AttentionModelError("orphan sprite '%s': no object attention probability" % sprite_id)
        return object_id

    def mass(self, sprite_id):
        object_id = self.object_of(sprite_id)
        return self.p_sprite_given_obj[object_id][sprite_id] * self.p_obj[object_id]

    def weight(self, sprite_id):
        q = self.mass(sprite_id)
        return q + (1.0 - q) * self.alpha

    def to_binary(self):
        """Flatten to a :class:`BinaryAttention` with ``p_i = q_ij``."""
        return BinaryAttention({s: self.mass(s) for s in self._owner if self._owner[s] in self.p_obj},
                               self.alpha, self.assumptions)


AttentionModel = Union[BinaryAttention, ContinuousAttention, ObjectConditionedAttention]


def attention_weight(model, sprite_id):
    """Multiplier of the sprite's perceptual cost in the expected frame cost."""
    return model.weight(sprite_id)


def attention_mass(model, sprite_id):
    """Probability (or mean attention level, for continuous models) the viewer attends the sprite."""
    return model.mass(sprite_id)


def _sprite_key(model, key):
    if isinstance(key, tuple):
        sprite_id, object_id = key
        if isinstance(model, ObjectConditionedAttention) and model.object_of(sprite_id) != object_id:
            raise AttentionModelError("sprite '%s' does not belong to object '%s'" % (sprite_id, object_id))
        return sprite_id
    return key


def expected_cost(costs, model):
    """Expected perceptual cost of a frame under ``model``.

    Args:
        costs (dict): sprite id (or ``(sprite_id, object_id)``) to perceptual cost
        model (AttentionModel): any attention family

    Returns:
        float: sum of attention weight times cost
    """
    return math.fsum(model.weight(_sprite_key(model, key)) * cost for key, cost in costs.items())


def _require(model, cls):
    if not isinstance(model, cls):
        raise AttentionModelError("expected a %s attention model, got %s" % (cls.family, type(model).__name__))


def expected_cost_binary(costs, model):
    _require(model, BinaryAttention)
    return expected_cost(costs, model)


def expected_cost_continuous(costs, model):
    _require(model, ContinuousAttention)
    return expected_cost(costs, model)


def expected_cost_object(costs, model):
    _require(model, ObjectConditionedAttention)
    return expected_cost(costs, model)


@dataclass(frozen=True)
class GroupPriorSpec:
    """Group priors plus the size and edge modulation of object and sprite attention.

    ``focus_objects`` are author-declared primary foci; their size score is
    multiplied by ``focus_gain`` before normalization within the group.
    """
    priors: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_PRIORS))
    area_exponent: float = 1.0
    edge_bonus: float = 0.5
    focus_objects: Tuple[str, ...] = ()
    focus_gain: float = 1.0

    def __post_init__(self):
        unknown = sorted(set(self.priors) - set(GROUPS))
        if unknown:
            raise AttentionModelError("group priors name unknown group(s): " + ", ".join(unknown))
        priors = {g: float(self.priors.get(g, 0.0)) for g in GROUPS}
        if any(v < 0 for v in priors.values()):
            raise AttentionModelError("group priors must be nonnegative")
        total = math.fsum(priors.values())
        if abs(total - 1.0) > TOLERANCE:
            raise AttentionModelError("group priors sum to %.12g, not 1" % total)
        if self.area_exponent <= 0:
            raise AttentionModelError("area_exponent must be > 0")
        if self.edge_bonus < 0 or self.focus_gain <= 0:
            raise AttentionModelError("edge_bonus must be >= 0 and focus_gain > 0")
        object.__setattr__(self, "priors", types.MappingProxyType(priors))
        object.__setattr__(self, "focus_objects", tuple(self.focus_objects))

    @classmethod
    def from_dict(cls, params):
        params = dict(params or {})
        unknown = sorted(set(params) - {"priors", "area_exponent", "edge_bonus", "focus_objects", "focus_gain"})
        if unknown:
            raise AttentionModelError("group prior spec has unknown key(s): " + ", ".join(unknown))
        return cls(**params)


def attention_from_groups(objects, frame, spec=None, alpha=0.0):
    """Author an object-conditioned model from object groups.

    Object attention is ``prior(group) * s(j) / sum(s(k) for k in group)``, with
    ``s(j)`` the object's summed sprite area raised to ``area_exponent``. A
    group with no visible object hands its prior to the other groups in
    proportion to their priors. Within an object, sprites are weighted by
    area, with edge sprites boosted by ``1 + edge_bonus``.

    Args:
        objects (list): :class:`SceneObject` list
        frame (dict): sprite id to anything with ``area_fraction``
        spec (GroupPriorSpec): priors and modulation; ``None`` uses defaults
        alpha (float): attention factor of the resulting model

    Returns:
        ObjectConditionedAttention: the authored model
    """
    if not objects:
        raise AttentionModelError("empty object set")
    spec = spec or GroupPriorSpec()
    focus = set(spec.focus_objects)

    scores = {}
    for obj in objects:
        area = math.fsum(frame[s].area_fraction for s in obj.sprite_ids)
        score = area ** spec.area_exponent
        if obj.id in focus:
            score *= spec.focus_gain
        scores[obj.id] = score
    group_totals = {}
    for obj in objects:
        group_totals[obj.group] = group_totals.get(obj.group, 0.0) + scores[obj.id]

    priors = dict(spec.priors)
    populated = [g for g in GROUPS if group_totals.get(g, 0.0) > 0]
    stranded = math.fsum(priors[g] for g in GROUPS if g not in populated)
    if stranded > 0:
        kept = math.fsum(priors[g] for g in populated)
        if kept > 0:
            priors = {g: priors[g] / kept for g in populated}
        else:
            priors = {g: 1.0 / len(populated) for g in populated}
        logger.debug("group prior mass %.3g has no visible object; renormalized over %s", stranded, populated)

    p_obj = {}
    p_sprite = {}
    for obj in objects:
        total = group_totals[obj.group]
        p_obj[obj.id] = priors[obj.group] * scores[obj.id] / total if total > 0 else 0.0
        edges = set(obj.edge_sprite_ids)
        weights = {s: frame[s].area_fraction * (1.0 + spec.edge_bonus * (s in edges)) for s in obj.sprite_ids}
        weight_total = math.fsum(weights.values())
        if weight_total > 0:
            p_sprite[obj.id] = {s: w / weight_total for s, w in weights.items()}
        else:
            p_sprite[obj.id] = {s: 1.0 / len(obj.sprite_ids) for s in obj.sprite_ids}
    if not populated:
        logger.warning("no object is visible in this frame; every object attention probability is 0")
    return ObjectConditionedAttention(p_obj, p_sprite, alpha, (OBJECT_NORMALIZED,))


def condition_on_cost(model, histories, beta):
    """Shift sprite attention toward sprites with persistent artifacts.

    Each ``p(sprite | object)`` is scaled by ``1 + beta * persistence(sprite)``
    and the object's conditionals are rescaled to their original total.

    Args:
        model (ObjectConditionedAttention): the model to condition
        histories (CostHistory or dict): cost history, or sprite id to persistence score
        beta (float): gain >= 0; 0 returns ``model`` itself

    Returns:
        ObjectConditionedAttention: the conditioned model
    """
    _require(model, ObjectConditionedAttention)
    if beta < 0:
        raise AttentionModelError("beta must be >= 0, got %r" % (beta,))
    if beta == 0:
        return model
    if isinstance(histories, Mapping):
        persistence = lambda s: histories.get(s, 0.0)
    else:
        persistence = histories.summarize
    members = {}
    for object_id, conditionals in model.p_sprite_given_obj.items():
        original = math.fsum(conditionals.values())
        boosted = {s: p * (1.0 + beta * persistence(s)) for s, p in conditionals.items()}
        total = math.fsum(boosted.values())
        if total > 0:
            members[object_id] = {s: min(1.0, w * original / total) for s, w in boosted.items()}
        else:
            members[object_id] = dict(conditionals)
    return replace(model, p_sprite_given_obj=members)


def continuous_from_object(model, bins=16, attend_shape=(8.0, 1.0), ignore_shape=(1.0, 8.0), attenuation=None):
    """Continuous densities from an object-conditioned model.

    Each sprite's density is the mixture ``q*Beta(attend) + (1-q)*Beta(ignore)``
    with ``q`` its object-conditioned attention probability, binned exactly
    with the Beta CDF.
    """
    if bins < 1:
        raise AttentionModelError("bins must be >= 1")
    edges = np.linspace(0.0, 1.0, bins + 1)
    attend = np.diff(stats.beta.cdf(edges, *attend_shape))
    ignore = np.diff(stats.beta.cdf(edges, *ignore_shape))
    densities = {}
    for object_id, conditionals in model.p_sprite_given_obj.items():
        for sprite_id in conditionals:
            q = model.mass(sprite_id)
            mass = q * attend + (1.0 - q) * ignore
            densities[sprite_id] = bins * mass / math.fsum(mass)
    return ContinuousAttention(densities, make_attenuation(attenuation), assumptions=model.assumptions)


def binary_from_groups(objects, probabilities, alpha=0.0):
    """Binary model where each sprite takes its group's attention probability."""
    unknown = sorted(set(probabilities) - set(GROUPS))
    if unknown:
        raise AttentionModelError("group probabilities name unknown group(s): " + ", ".join(unknown))
    p = {}
    for obj in objects:
        for sprite_id in obj.sprite_ids:
            p[sprite_id] = probabilities.get(obj.group, 0.0)
    return BinaryAttention(p, alpha)
