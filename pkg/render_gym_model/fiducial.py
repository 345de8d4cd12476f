#SPDX-License-Identifier: Apache-2.0
#File : fiducial.py

"""Fiducials: per-dimension error estimates against a gold-standard rendering.

Geometric warp error is the least-squares residual (pixels^2) of the best 2D
affine map from the characteristic points at the last re-render to the
current gold-standard points. Resolution, texture and shading errors are
normalized to [0, 1]; geometry error is read from the sprite's declared LOD
curve.
"""

import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np

from render_gym_scene.errors import FiducialError
from render_gym_scene.scene import CharacteristicPointSet

logger = logging.getLogger(__name__)

# fixed degradation priority of the multi-dimension pass
DIMENSIONS = ("texture", "geometry", "spatial", "shading")


@dataclass(frozen=True, eq=False)
class Affine2D:
    """``x -> linear @ x + translation`` in screen space (pixels)."""
    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        linear = np.array(self.linear, dtype=float).reshape(2, 2)
        translation = np.array(self.translation, dtype=float).reshape(2)
        if not (np.all(np.isfinite(linear)) and np.all(np.isfinite(translation))):
            raise FiducialError("affine transform entries must be finite")
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls):
        return cls(np.eye(2), np.zeros(2))

    def apply(self, points):
        return _as_array(points) @ self.linear.T + self.translation


@dataclass(frozen=True)
class AffineFit:
    transform: Affine2D
    residual: float
    degenerate: bool


def _as_array(points):
    if isinstance(points, CharacteristicPointSet):
        return points.points
    return np.asarray(points, dtype=float)


def fit_affine(src, dst):
    """Least-squares affine map from ``src`` to ``dst``.

    The source points are centered before solving, which keeps the normal
    equations well conditioned at pixel scale. Collinear or coincident source
    points make the system rank deficient; the minimum-norm solution is
    returned and the fit is flagged ``degenerate``.

    Args:
        src (CharacteristicPointSet): points at the last re-render
        dst (CharacteristicPointSet): corresponding current points

    Returns:
        AffineFit: transform, sum of squared residuals (pixels^2), degeneracy flag
    """
    src = _as_array(src)
    dst = _as_array(dst)
    if len(src) != len(dst):
        raise FiducialError("point count mismatch: %d source points vs %d target points" % (len(src), len(dst)))
    if len(src) < 3:
        raise FiducialError("an affine fit needs at least 3 correspondences, got %d" % len(src))
    mean = src.mean(axis=0)
    design = np.hstack([src - mean, np.ones((len(src), 1))])
    solution, _, rank, _ = np.linalg.lstsq(design, dst, rcond=None)
    degenerate = bool(rank < 3)
    if degenerate:
        logger.warning("degenerate affine fit: source points are collinear or coincident (rank %d)", rank)
    linear = solution[:2].T
    transform = Affine2D(linear, solution[2] - linear @ mean)
    residual = float(np.sum((design @ solution - dst) ** 2))
    return AffineFit(transform, residual, degenerate)


@dataclass(frozen=True)
class QualityVector:
    """Re-render knobs. Level 0 / factor 1 is the finest setting of each knob."""
    spatial_factor: float = 1.0
    texture_lod: int = 0
    geometry_lod: int = 0
    shading_level: int = 0

    def __post_init__(self):
        if not (isinstance(self.spatial_factor, (int, float)) and 0.0 < self.spatial_factor <= 1.0):
            raise FiducialError("spatial_factor must be in (0, 1], got %r" % (self.spatial_factor,))
        for name in ("texture_lod", "geometry_lod", "shading_level"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                raise FiducialError("%s must be an integer >= 0, got %r" % (name, value))

    @property
    def is_finest(self):
        return self.spatial_factor == 1.0 and self.texture_lod == 0 and self.geometry_lod == 0 and self.shading_level == 0

    def check_ranges(self, sprite):
        """Raise :class:`FiducialError` if a knob lies outside the sprite's declared range."""
        for name, value, limit in (("texture_lod", self.texture_lod, sprite.max_texture_lod),
                                   ("geometry_lod", self.geometry_lod, sprite.max_geometry_lod),
                                   ("shading_level", self.shading_level, sprite.max_shading_level)):
            if value > limit:
                raise FiducialError("%s %d outside 0..%d for sprite '%s'" % (name, value, limit, sprite.id))

    def degrade(self, dimension, sprite, levels=1, spatial_scale=0.75, min_spatial_factor=0.125):
        """One predefined degradation step along ``dimension``.

        Returns:
            QualityVector: the coarser vector, or ``None`` when the knob is already at its limit
        """
        if dimension == "texture":
            lod = min(self.texture_lod + levels, sprite.max_texture_lod)
            return None if lod == self.texture_lod else replace(self, texture_lod=lod)
        if dimension == "geometry":
            lod = min(self.geometry_lod + levels, sprite.max_geometry_lod)
            return None if lod == self.geometry_lod else replace(self, geometry_lod=lod)
        if dimension == "spatial":
            factor = max(self.spatial_factor * spatial_scale, min_spatial_factor)
            return None if factor >= self.spatial_factor else replace(self, spatial_factor=factor)
        if dimension == "shading":
            level = min(self.shading_level + levels, sprite.max_shading_level)
            return None if level == self.shading_level else replace(self, shading_level=level)
        raise FiducialError("unknown degradation dimension '%s' (expected one of %s)" % (dimension, ", ".join(DIMENSIONS)))

    def to_dict(self):
        return asdict(self)


FINEST = QualityVector()


@dataclass(frozen=True)
class RenderAction:
    """``rerender`` at ``quality``, or ``warp`` (reuses the quality of the last re-render)."""
    mode: str
    quality: Optional[QualityVector] = None

    def __post_init__(self):
        if self.mode == "rerender" and self.quality is None:
            raise FiducialError("a rerender action needs a QualityVector")
        if self.mode == "warp" and self.quality is not None:
            raise FiducialError("a warp action carries no quality knobs")
        if self.mode not in ("rerender", "warp"):
            raise FiducialError("unknown render action mode '%s'" % self.mode)

    @classmethod
    def rerender(cls, quality=FINEST):
        return cls("rerender", quality)

    @classmethod
    def warp(cls):
        return cls("warp")

    @property
    def is_warp(self):
        return self.mode == "warp"


@dataclass(frozen=True)
class Fiducial:
    geometric_warp_error: float = 0.0
    resolution_error: float = 0.0
    texture_error: float = 0.0
    geometry_error: float = 0.0
    shading_error: float = 0.0

    def as_array(self):
        return np.array([getattr(self, f.name) for f in fields(self)])

    @property
    def is_zero(self):
        return not np.any(self.as_array())


@dataclass(frozen=True)
class ErrorForms:
    """Functional forms of the normalized quality errors.

    resolution ``(1-s)^resolution_exponent``, texture ``1-texture_base^-lod``,
    shading ``(level/max)^shading_exponent``.
    """
    resolution_exponent: float = 1.0
    texture_base: float = 2.0
    shading_exponent: float = 1.0

    def __post_init__(self):
        if self.resolution_exponent <= 0 or self.shading_exponent <= 0:
            raise FiducialError("fiducial exponents must be > 0")
        if self.texture_base <= 1:
            raise FiducialError("fiducial texture_base must be > 1")

    @classmethod
    def from_dict(cls, params):
        if not params:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(params) - known)
        if unknown:
            raise FiducialError("fiducial section has unknown key(s): " + ", ".join(unknown))
        return cls(**params)


DEFAULT_FORMS = ErrorForms()


def quality_errors(sprite, q, forms=DEFAULT_FORMS):
    """Resolution, texture, geometry and shading errors of rendering ``sprite`` at ``q``.

    Args:
        sprite (Sprite): the sprite, supplying declared knob ranges and its LOD curve
        q (QualityVector): the quality knobs
        forms (ErrorForms): functional forms

    Returns:
        Fiducial: with ``geometric_warp_error = 0``
    """
    q.check_ranges(sprite)
    shading = 0.0
    if sprite.max_shading_level > 0:
        shading = (q.shading_level / sprite.max_shading_level) ** forms.shading_exponent
    return Fiducial(
        geometric_warp_error=0.0,
        resolution_error=(1.0 - q.spatial_factor) ** forms.resolution_exponent,
        texture_error=1.0 - forms.texture_base ** (-q.texture_lod),
        geometry_error=sprite.geometry_error(q.geometry_lod),
        shading_error=shading,
    )


def warp_error(sprite, current_points):
    """Residual (pixels^2) of warping the last rendered image onto ``current_points``."""
    if not sprite.rendered:
        raise FiducialError("sprite '%s' has never been rendered; warp is illegal" % sprite.id)
    return fit_affine(sprite.points_at_last_render, current_points).residual


def evaluate_fiducial(sprite, action, current_points=None, forms=DEFAULT_FORMS):
    """Fiducial of taking ``action`` on ``sprite`` this frame.

    Args:
        sprite (Sprite): the sprite
        action (RenderAction): rerender or warp
        current_points (CharacteristicPointSet): gold points; defaults to ``sprite.points_gold``
        forms (ErrorForms): functional forms of the quality errors

    Returns:
        Fiducial: the per-dimension errors
    """
    if current_points is None:
        current_points = sprite.points_gold
    if action.is_warp:
        geometric = warp_error(sprite, current_points)
        base = quality_errors(sprite, sprite.quality_at_last_render or FINEST, forms)
        return replace(base, geometric_warp_error=geometric)
    return quality_errors(sprite, action.quality, forms)
