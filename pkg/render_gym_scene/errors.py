#SPDX-License-Identifier: Apache-2.0
#File : errors.py

"""Exception hierarchy shared by every render_gym package.

The command line maps :class:`ValidationError` and :class:`ScenarioFormatError`
to exit code 2 and :class:`InfeasibleBudgetError` to exit code 3.
"""


class RenderGymError(Exception):
    """Base class for all render_gym errors."""


class ScenarioFormatError(RenderGymError):
    """The scenario (or config) document could not be parsed."""


class ValidationError(RenderGymError, ValueError):
    """An input violates a documented invariant. The message names the invariant."""


class FiducialError(ValidationError):
    """Bad input to a fiducial computation (point counts, unrendered sprite, knob range)."""


class AttentionModelError(ValidationError):
    """An attention model is malformed or cannot price a sprite."""


class ConfigError(ValidationError):
    """The merged configuration is invalid."""


class OracleSizeError(ValidationError):
    """Too many candidates for the exact knapsack oracle."""


class AlwaysRenderError(RenderGymError):
    """Re-rendering a sprite costs no more than warping it, so it is never a knapsack item."""

    def __init__(self, sprite_id, marginal_cost):
        super().__init__("always-render sprite '%s': marginal compute cost %g <= 0" % (sprite_id, marginal_cost))
        self.sprite_id = sprite_id
        self.marginal_cost = marginal_cost


class InfeasibleBudgetError(RenderGymError):
    """The frame budget cannot pay for the all-warp baseline plan."""

    def __init__(self, required, budget, frame=None):
        where = "" if frame is None else " at frame %d" % frame
        super().__init__(
            "infeasible baseline%s: warping every sprite needs %.9g budget units but the frame budget is %.9g; "
            "run the spatial-degradation pass or reduce the sprite set" % (where, required, budget))
        self.required = required
        self.budget = budget
        self.frame = frame

    def at_frame(self, frame):
        """Return a copy of this error that names the frame it happened in."""
        return InfeasibleBudgetError(self.required, self.budget, frame)
