#SPDX-License-Identifier: Apache-2.0
#File : perceptual_cost.py

"""Perceptual cost of sprites and frames.

A sprite's cost is its screen area times a weighted sum of its fiducial
errors (:class:`CostModel`). Frame costs combine sprite costs additively, and
:class:`CostHistory` keeps a short window of per-sprite costs so persistent
errors can be told apart from brief ones.
"""

import logging
import math
from collections import deque
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Protocol

from render_gym_scene.errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostModel:
    """Weights of the fiducial components in the perceptual cost.

    ``w_geo`` is per pixel^2 of geometric warp error, the others per
    normalized error unit.
    """
    w_geo: float = 0.05
    w_res: float = 1.0
    w_tex: float = 0.5
    w_geom_lod: float = 1.0
    w_shade: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
                raise ValidationError("cost_model.%s must be a finite nonnegative number, got %r" % (f.name, value))
            object.__setattr__(self, f.name, float(value))
        if not any(getattr(self, f.name) > 0 for f in fields(self)):
            raise ValidationError("cost_model needs at least one positive weight")

    @classmethod
    def from_dict(cls, params):
        if not params:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(params) - known)
        if unknown:
            raise ValidationError("cost_model has unknown weight(s): " + ", ".join(unknown))
        return cls(**params)

    def to_dict(self):
        return asdict(self)


def sprite_cost(sprite, fid, model):
    """Perceptual cost of a sprite: area fraction times the weighted fiducial sum.

    Args:
        sprite (Sprite): supplies ``area_fraction``
        fid (Fiducial): the sprite's errors under the chosen action
        model (CostModel): component weights

    Returns:
        float: cost >= 0
    """
    weighted = (model.w_geo * fid.geometric_warp_error
                + model.w_res * fid.resolution_error
                + model.w_tex * fid.texture_error
                + model.w_geom_lod * fid.geometry_error
                + model.w_shade * fid.shading_error)
    return sprite.area_fraction * weighted


class CostCombiner(Protocol):
    """Combines per-sprite costs into one frame cost."""

    def combine(self, costs: Iterable[float]) -> float:
        ...


class AdditiveCombiner:
    """Plain sum, rounded once, so the result does not depend on sprite order."""

    def combine(self, costs):
        return math.fsum(costs)


ADDITIVE = AdditiveCombiner()


def frame_cost(costs, combiner=ADDITIVE):
    """Whole-frame perceptual cost.

    Args:
        costs (list or dict): per-sprite costs; a dict is summed over its values
        combiner (CostCombiner): defaults to the additive combiner

    Returns:
        float: frame cost, 0 for an empty frame
    """
    if isinstance(costs, Mapping):
        costs = costs.values()
    return combiner.combine(costs)


class CostHistory:
    """Per-sprite window of the last ``window`` per-frame perceptual costs.

    One simulation run owns one history and is its only writer.
    """

    def __init__(self, window=8, decay=1.0):
        if isinstance(window, bool) or not isinstance(window, int) or window < 1:
            raise ValidationError("history window must be a positive integer, got %r" % (window,))
        if not (isinstance(decay, (int, float)) and math.isfinite(decay) and decay > 0):
            raise ValidationError("history decay must be > 0, got %r" % (decay,))
        self.window = window
        self.decay = float(decay)
        self._buffers = {}

    @classmethod
    def from_dict(cls, params):
        params = dict(params or {})
        unknown = sorted(set(params) - {"window", "decay"})
        if unknown:
            raise ValidationError("history has unknown key(s): " + ", ".join(unknown))
        return cls(**params)

    def push(self, sprite_id, cost):
        if not math.isfinite(cost) or cost < 0:
            raise ValidationError("history cost for sprite '%s' must be a finite number >= 0, got %r" % (sprite_id, cost))
        buffer = self._buffers.get(sprite_id)
        if buffer is None:
            buffer = self._buffers[sprite_id] = deque(maxlen=self.window)
        buffer.append(float(cost))
        return self

    def costs(self, sprite_id):
        return tuple(self._buffers.get(sprite_id, ()))

    def summarize(self, sprite_id):
        buffer = self._buffers.get(sprite_id)
        if not buffer:
            return 0.0
        return 1.0 - math.exp(-self.decay * math.fsum(buffer) / len(buffer))

    def persistence(self):
        """Persistence score of every sprite with a history."""
        return {sprite_id: self.summarize(sprite_id) for sprite_id in self._buffers}

    def copy(self):
        other = CostHistory(self.window, self.decay)
        other._buffers = {k: deque(v, maxlen=self.window) for k, v in self._buffers.items()}
        return other

    def __contains__(self, sprite_id):
        return sprite_id in self._buffers


def push_history(h, sprite_id, cost):
    """Append ``cost`` to the sprite's window, evicting the oldest entry past the window."""
    return h.push(sprite_id, cost)


def summarize_history(h, sprite_id):
    """Persistence score ``1 - exp(-decay * mean(window))`` in [0, 1); 0 for an empty window."""
    return h.summarize(sprite_id)
