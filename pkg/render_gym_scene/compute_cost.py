#SPDX-License-Identifier: Apache-2.0
#File : compute_cost.py

import math
from dataclasses import asdict, dataclass, fields

from render_gym_scene.errors import ValidationError


@dataclass(frozen=True)
class ComputeCostModel:
    """Per-sprite compute cost of the two rendering actions, in budget units.

    render: ``c0 + c_poly*polygons(geometry_lod) + c_pix*pixels*s^2``
    (+ ``c_tex*pixels*s^2*4^-texture_lod`` + ``c_shade*pixels*s^2*(1 - shading_level/max)``)

    warp: ``w0 + w_pix*pixels``
    """
    c0: float = 1.0
    c_poly: float = 0.001
    c_pix: float = 0.0001
    w0: float = 0.2
    w_pix: float = 0.00001
    c_tex: float = 0.0
    c_shade: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
                raise ValidationError("compute_model.%s must be a finite nonnegative number, got %r" % (f.name, value))
            object.__setattr__(self, f.name, float(value))

    @classmethod
    def from_dict(cls, params):
        """Build the model from a ``compute_model`` JSON section.

        Args:
            params (dict): coefficients; missing keys keep their defaults

        Returns:
            ComputeCostModel: the validated model
        """
        if params is None:
            return cls()
        if not isinstance(params, dict):
            raise ValidationError("compute_model must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(params) - known)
        if unknown:
            raise ValidationError("compute_model has unknown coefficient(s): " + ", ".join(unknown))
        return cls(**params)

    def to_dict(self):
        return asdict(self)

    def render_cost(self, sprite, quality):
        """Cost of re-rendering ``sprite`` at ``quality``."""
        pixels = sprite.pixel_count * quality.spatial_factor ** 2
        cost = self.c0 + self.c_poly * sprite.polygons(quality.geometry_lod) + self.c_pix * pixels
        if self.c_tex > 0:
            cost += self.c_tex * pixels * 4.0 ** (-quality.texture_lod)
        if self.c_shade > 0 and sprite.max_shading_level > 0:
            cost += self.c_shade * pixels * (1.0 - quality.shading_level / sprite.max_shading_level)
        return cost

    def warp_cost(self, sprite):
        """Cost of reusing ``sprite`` through an affine warp."""
        return self.w0 + self.w_pix * sprite.pixel_count
