#SPDX-License-Identifier: Apache-2.0
#File : simulation.py

"""Frame loop mechanics and trace output.

One run is sequential: frame ``t + 1`` starts from the render state frame
``t`` left behind. :func:`run_frame` applies a plan to one frame, updates
every sprite's last-render snapshot and error history, and accounts the
realized costs in a :class:`FrameTrace`.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import pandas as pd

from render_gym_model.attention import attention_mass, attention_weight
from render_gym_model.fiducial import FINEST, ErrorForms, Fiducial, QualityVector, RenderAction, evaluate_fiducial
from render_gym_model.perceptual_cost import CostHistory, CostModel, frame_cost, sprite_cost
from render_gym_regulator.regulator import DegradationSteps, FramePlan, RegulatorModels, expected_frame_cost, parse_policy
from render_gym_scene.compute_cost import ComputeCostModel
from render_gym_scene.errors import ConfigError, InfeasibleBudgetError, ValidationError
from render_gym_scene.scene import make_sprite

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "frame", "policy", "sprite_id", "object_id", "group", "action", "frames_since_render",
    "spatial_factor", "texture_lod", "geometry_lod", "shading_level",
    "geometric_warp_error", "resolution_error", "texture_error", "geometry_error", "shading_error",
    "perceptual_cost", "attention_mass", "attention_weight", "compute_spent",
    "frame_expected_cost", "frame_raw_cost", "frame_budget", "frame_spend", "frame_slack", "assumption_flags",
)
FLOAT_FORMAT = "%.9g"


@dataclass(frozen=True)
class RunSettings:
    """Everything in a merged config except the attention model, which adapters build per frame."""
    policy: str
    frame_budget: Optional[float]
    cost_model: CostModel
    compute_model: Optional[ComputeCostModel]
    forms: ErrorForms
    steps: DegradationSteps
    history_window: int
    history_decay: float

    @classmethod
    def from_config(cls, config_json):
        regulator = dict(config_json.get("regulator") or {})
        unknown = sorted(set(regulator) - {"policy", "frame_budget", "degradation_steps"})
        if unknown:
            raise ConfigError("regulator section has unknown key(s): " + ", ".join(unknown))
        policy = regulator.get("policy", "greedy")
        parse_policy(policy)
        budget = regulator.get("frame_budget")
        if budget is not None and (isinstance(budget, bool) or not isinstance(budget, (int, float)) or not budget > 0):
            raise ConfigError("regulator.frame_budget must be > 0, got %r" % (budget,))
        compute = config_json.get("compute_model")
        history = CostHistory.from_dict(config_json.get("history"))
        return cls(
            policy=policy,
            frame_budget=None if budget is None else float(budget),
            cost_model=CostModel.from_dict(config_json.get("cost_model")),
            compute_model=None if compute is None else ComputeCostModel.from_dict(compute),
            forms=ErrorForms.from_dict(config_json.get("fiducial")),
            steps=DegradationSteps.from_dict(regulator.get("degradation_steps")),
            history_window=history.window,
            history_decay=history.decay,
        )

    def budget(self, scenario):
        return self.frame_budget if self.frame_budget is not None else scenario.frame_budget

    def models(self, scenario, attention):
        return RegulatorModels(self.cost_model, attention, self.compute_model or scenario.compute_model,
                               self.forms, self.steps)

    def new_history(self):
        return CostHistory(self.history_window, self.history_decay)


@dataclass(frozen=True)
class SimulationState:
    """Render state after ``frame`` frames have run."""
    frame: int
    sprites: Dict[str, object]
    history: CostHistory


def initial_state(settings):
    return SimulationState(0, {}, settings.new_history())


def frame_sprites(state, scenario):
    """Runtime sprites of frame ``state.frame``, carrying their render state forward."""
    if state.frame >= scenario.frame_count:
        raise ValidationError("frame %d is past the end of the scenario (%d frames)" % (state.frame, scenario.frame_count))
    frame = scenario.frames[state.frame]
    return {s: make_sprite(scenario.sprites[s], frame[s], state.sprites.get(s)) for s in sorted(scenario.sprites)}


@dataclass(frozen=True)
class SpriteTrace:
    sprite_id: str
    object_id: str
    group: str
    action: str
    frames_since_render: int
    quality: QualityVector
    fiducial: Fiducial
    perceptual_cost: float
    attention_mass: float
    attention_weight: float
    compute_spent: float


@dataclass(frozen=True)
class FrameTrace:
    frame: int
    policy: str
    sprites: Tuple[SpriteTrace, ...]
    expected_cost: float
    raw_cost: float
    budget: float
    spend: float
    predicted_expected_cost: float
    assumption_flags: Tuple[str, ...] = ()

    @property
    def slack(self):
        return self.budget - self.spend

    @property
    def utilization(self):
        return self.spend / self.budget

    @property
    def rerendered(self):
        return tuple(s.sprite_id for s in self.sprites if s.action == "rerender")


def plan_from_selection(sprites, selection, models, budget, policy="agent"):
    """FramePlan that re-renders ``selection`` at finest quality and warps the rest."""
    unknown = sorted(set(selection) - set(sprites))
    if unknown:
        raise ValidationError("plan references unknown sprite(s): " + ", ".join(unknown))
    actions = {s: RenderAction.rerender(FINEST) if s in selection else RenderAction.warp() for s in sorted(sprites)}
    spend = math.fsum(models.compute_model.render_cost(sprites[s], FINEST) if s in selection
                      else models.compute_model.warp_cost(sprites[s]) for s in actions)
    return FramePlan(actions, expected_frame_cost(sprites, actions, models), spend, budget, policy, {})


def run_frame(state, scenario, plan, models, budget):
    """Apply ``plan`` to frame ``state.frame``.

    Args:
        state (SimulationState): render state before the frame
        scenario (Scenario): the scenario being run
        plan (FramePlan): one action per sprite
        models (RegulatorModels): pricing models, including this frame's attention model
        budget (float): frame budget

    Returns:
        tuple: ``(SimulationState, FrameTrace)``
    """
    sprites = frame_sprites(state, scenario)
    unknown = sorted(set(plan.actions) - set(sprites))
    if unknown:
        raise ValidationError("plan references unknown sprite(s): " + ", ".join(unknown))
    missing = sorted(set(sprites) - set(plan.actions))
    if missing:
        raise ValidationError("plan has no action for sprite(s): " + ", ".join(missing))

    t = state.frame
    rows = []
    updated = {}
    for sprite_id, sprite in sprites.items():
        action = plan.actions[sprite_id]
        fid = evaluate_fiducial(sprite, action, forms=models.forms)
        cost = sprite_cost(sprite, fid, models.cost_model)
        if action.is_warp:
            compute = models.compute_model.warp_cost(sprite)
            quality = sprite.quality_at_last_render
            age = t - sprite.last_render_frame
            after = sprite
        else:
            compute = models.compute_model.render_cost(sprite, action.quality)
            quality = action.quality
            age = 0
            after = replace(sprite, points_at_last_render=sprite.points_gold, last_render_frame=t,
                            quality_at_last_render=action.quality)
        updated[sprite_id] = after
        obj = scenario.object_of(sprite_id)
        rows.append(SpriteTrace(sprite_id, obj.id, obj.group, action.mode, age, quality, fid, cost,
                                attention_mass(models.attention, sprite_id),
                                attention_weight(models.attention, sprite_id), compute))

    spend = math.fsum(r.compute_spent for r in rows)
    if spend > budget:
        raise InfeasibleBudgetError(spend, budget, t)
    for row in rows:
        state.history.push(row.sprite_id, row.perceptual_cost)
        updated[row.sprite_id] = replace(updated[row.sprite_id], error_history=state.history.costs(row.sprite_id))
    trace = FrameTrace(
        frame=t,
        policy=plan.policy,
        sprites=tuple(rows),
        expected_cost=frame_cost([r.attention_weight * r.perceptual_cost for r in rows], models.combiner),
        raw_cost=frame_cost([r.perceptual_cost for r in rows], models.combiner),
        budget=budget,
        spend=spend,
        predicted_expected_cost=plan.expected_cost,
        assumption_flags=tuple(getattr(models.attention, "assumptions", ())),
    )
    logger.debug("frame %d: %d re-rendered, expected cost %.6g, spend %.6g / %.6g",
                 t, len(trace.rerendered), trace.expected_cost, spend, budget)
    return SimulationState(t + 1, updated, state.history), trace


def traces_to_dataframe(traces):
    """One row per sprite per frame, columns in :data:`TRACE_COLUMNS` order."""
    records = []
    for trace in traces:
        flags = ";".join(trace.assumption_flags)
        for row in trace.sprites:
            quality = row.quality or FINEST
            records.append({
                "frame": trace.frame,
                "policy": trace.policy,
                "sprite_id": row.sprite_id,
                "object_id": row.object_id,
                "group": row.group,
                "action": row.action,
                "frames_since_render": row.frames_since_render,
                "spatial_factor": quality.spatial_factor,
                "texture_lod": quality.texture_lod,
                "geometry_lod": quality.geometry_lod,
                "shading_level": quality.shading_level,
                "geometric_warp_error": row.fiducial.geometric_warp_error,
                "resolution_error": row.fiducial.resolution_error,
                "texture_error": row.fiducial.texture_error,
                "geometry_error": row.fiducial.geometry_error,
                "shading_error": row.fiducial.shading_error,
                "perceptual_cost": row.perceptual_cost,
                "attention_mass": row.attention_mass,
                "attention_weight": row.attention_weight,
                "compute_spent": row.compute_spent,
                "frame_expected_cost": trace.expected_cost,
                "frame_raw_cost": trace.raw_cost,
                "frame_budget": trace.budget,
                "frame_spend": trace.spend,
                "frame_slack": trace.slack,
                "assumption_flags": flags,
            })
    return pd.DataFrame.from_records(records, columns=list(TRACE_COLUMNS))


def write_trace_csv(traces, path):
    traces_to_dataframe(traces).to_csv(path, index=False, float_format=FLOAT_FORMAT)
