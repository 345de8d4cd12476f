#SPDX-License-Identifier: Apache-2.0
#File : regulator.py

"""Per-frame regulation: decide which sprites to re-render and at what quality.

The all-warp plan is the baseline. Re-rendering a warp-eligible sprite buys
``benefit`` (the drop in its expected perceptual cost) for ``cost`` extra
compute; choosing the re-render set within the residual budget is a 0/1
knapsack. Sprites that were never rendered cannot be warped and are charged
their render cost up front.
"""

import logging
import math
import types
from dataclasses import asdict, dataclass, field, fields
from typing import Mapping

from render_gym_model.attention import attention_weight
from render_gym_model.fiducial import DEFAULT_FORMS, DIMENSIONS, FINEST, ErrorForms, RenderAction, evaluate_fiducial, quality_errors
from render_gym_model.perceptual_cost import ADDITIVE, CostModel, frame_cost, sprite_cost
from render_gym_regulator.knapsack import Candidate, exact_knapsack_oracle, greedy_knapsack, sahni_knapsack
from render_gym_scene.compute_cost import ComputeCostModel
from render_gym_scene.errors import AlwaysRenderError, ConfigError, InfeasibleBudgetError

logger = logging.getLogger(__name__)

POLICY_HELP = "greedy, sahni:k, multidim[:base], render-all, warp-all, oracle or threshold:tau"


@dataclass(frozen=True)
class DegradationSteps:
    """Size of one degradation step per dimension."""
    texture: int = 1
    geometry: int = 1
    spatial_scale: float = 0.75
    shading: int = 1
    min_spatial_factor: float = 0.125

    def __post_init__(self):
        if self.texture < 1 or self.geometry < 1 or self.shading < 1:
            raise ConfigError("degradation level steps must be >= 1")
        if not 0 < self.spatial_scale < 1:
            raise ConfigError("spatial_scale must be in (0, 1)")
        if not 0 < self.min_spatial_factor <= 1:
            raise ConfigError("min_spatial_factor must be in (0, 1]")

    @classmethod
    def from_dict(cls, params):
        params = dict(params or {})
        unknown = sorted(set(params) - {f.name for f in fields(cls)})
        if unknown:
            raise ConfigError("degradation_steps has unknown key(s): " + ", ".join(unknown))
        return cls(**params)

    def to_dict(self):
        return asdict(self)

    def apply(self, quality, dimension, sprite):
        levels = {"texture": self.texture, "geometry": self.geometry, "shading": self.shading}.get(dimension, 1)
        return quality.degrade(dimension, sprite, levels=levels, spatial_scale=self.spatial_scale,
                               min_spatial_factor=self.min_spatial_factor)


@dataclass(frozen=True)
class RegulatorModels:
    """Everything the regulator prices a frame with."""
    cost_model: CostModel
    attention: object
    compute_model: ComputeCostModel
    forms: ErrorForms = DEFAULT_FORMS
    steps: DegradationSteps = field(default_factory=DegradationSteps)
    combiner: object = ADDITIVE


@dataclass(frozen=True, eq=False)
class FramePlan:
    """Chosen action per sprite with the predicted expected cost and compute spend."""
    actions: Mapping[str, RenderAction]
    expected_cost: float
    spend: float
    budget: float
    policy: str
    diagnostics: Mapping[str, object] = field(default_factory=dict)

    @property
    def slack(self):
        return self.budget - self.spend

    @property
    def rerendered(self):
        return tuple(s for s, a in self.actions.items() if not a.is_warp)

    @property
    def benefit(self):
        return self.diagnostics.get("benefit", 0.0)


def parse_policy(policy):
    """Split a policy string into ``(name, argument)``.

    Returns:
        tuple: ``("sahni", k)``, ``("threshold", tau)``, ``("multidim", base)`` or ``(name, None)``
    """
    name, _, arg = str(policy).partition(":")
    if name in ("greedy", "render-all", "warp-all", "oracle") and not arg:
        return name, None
    if name == "sahni":
        try:
            k = int(arg)
        except ValueError:
            raise ConfigError("sahni policy needs an integer seed size, got '%s'" % policy)
        if not 0 <= k <= 3:
            raise ConfigError("sahni seed size must be in 0..3, got %d" % k)
        return name, k
    if name == "threshold":
        try:
            tau = float(arg)
        except ValueError:
            raise ConfigError("threshold policy needs a number, got '%s'" % policy)
        if not tau >= 0:
            raise ConfigError("threshold must be >= 0")
        return name, tau
    if name == "multidim":
        base = arg or "greedy"
        if parse_policy(base)[0] not in ("greedy", "sahni", "oracle"):
            raise ConfigError("multidim base must be greedy, sahni:k or oracle, got '%s'" % base)
        return name, base
    raise ConfigError("unknown policy '%s' (expected %s)" % (policy, POLICY_HELP))


def marginal_compute_cost(sprite, q, ccm):
    """Extra compute of re-rendering ``sprite`` at ``q`` instead of warping it."""
    return ccm.render_cost(sprite, q) - ccm.warp_cost(sprite)


def marginal_perceptual_benefit(sprite, attention, cost_model, current_points=None, quality=FINEST, forms=DEFAULT_FORMS):
    """Expected-cost drop of re-rendering ``sprite`` at ``quality`` instead of warping it.

    Args:
        sprite (Sprite): a sprite that has been rendered before
        attention (AttentionModel): the active attention model
        cost_model (CostModel): fiducial weights
        current_points (CharacteristicPointSet): defaults to ``sprite.points_gold``
        quality (QualityVector): re-render quality
        forms (ErrorForms): fiducial forms

    Returns:
        float: attention weight times (warp cost - re-render cost)
    """
    warp = sprite_cost(sprite, evaluate_fiducial(sprite, RenderAction.warp(), current_points, forms), cost_model)
    rerender = sprite_cost(sprite, quality_errors(sprite, quality, forms), cost_model)
    return attention_weight(attention, sprite.id) * (warp - rerender)


def refinement_rate(benefit, marginal_cost, sprite_id="?"):
    """Expected perceptual refinement per budget unit, ``benefit / marginal_cost``."""
    if not marginal_cost > 0:
        raise AlwaysRenderError(sprite_id, marginal_cost)
    return benefit / marginal_cost


def expected_frame_cost(sprites, actions, models):
    """Expected perceptual cost of a frame when ``actions`` are applied to ``sprites``."""
    costs = []
    for sprite_id in sorted(sprites):
        sprite = sprites[sprite_id]
        fid = evaluate_fiducial(sprite, actions[sprite_id], forms=models.forms)
        costs.append(attention_weight(models.attention, sprite_id) * sprite_cost(sprite, fid, models.cost_model))
    return frame_cost(costs, models.combiner)


class FrameProblem:
    """A frame priced under fixed re-render qualities.

    Holds, per sprite, the compute and expected perceptual cost of both
    actions. ``forced`` sprites were never rendered; ``always_render`` sprites
    re-render no dearer than they warp. Both are re-rendered in every plan.
    """

    def __init__(self, sprites, models, budget, render_quality=None):
        self.sprites = {s: sprites[s] for s in sorted(sprites)}
        self.models = models
        self.budget = budget
        render_quality = render_quality or {}
        self.render_quality = {s: render_quality.get(s, FINEST) for s in self.sprites}
        self.notes = []
        self._evaluate()

    def _evaluate(self):
        models = self.models
        self.weight = {}
        self.render_compute = {}
        self.warp_compute = {}
        self.render_expected = {}
        self.warp_expected = {}
        self.forced = []
        self.always_render = []
        for sprite_id, sprite in self.sprites.items():
            q = self.render_quality[sprite_id]
            weight = attention_weight(models.attention, sprite_id)
            self.weight[sprite_id] = weight
            self.render_compute[sprite_id] = models.compute_model.render_cost(sprite, q)
            self.render_expected[sprite_id] = weight * sprite_cost(sprite, quality_errors(sprite, q, models.forms), models.cost_model)
            if not sprite.rendered:
                self.forced.append(sprite_id)
                continue
            self.warp_compute[sprite_id] = models.compute_model.warp_cost(sprite)
            fid = evaluate_fiducial(sprite, RenderAction.warp(), forms=models.forms)
            self.warp_expected[sprite_id] = weight * sprite_cost(sprite, fid, models.cost_model)
            if self.render_compute[sprite_id] <= self.warp_compute[sprite_id]:
                self.always_render.append(sprite_id)

    @property
    def committed(self):
        return set(self.forced) | set(self.always_render)

    @property
    def baseline(self):
        """Compute of the cheapest legal plan: warp what can be warped."""
        committed = self.committed
        return math.fsum(self.render_compute[s] if s in committed else self.warp_compute[s] for s in self.sprites)

    def fit_forced(self):
        """Degrade never-rendered sprites, dimension by dimension, until the baseline fits."""
        for sprite_id in self.always_render:
            logger.warning("sprite '%s' re-renders no dearer than it warps; always re-rendered", sprite_id)
        if self.baseline <= self.budget:
            return
        degraded = False
        for dimension in DIMENSIONS:
            while self.baseline > self.budget:
                before = self.baseline
                previous = dict(self.render_quality)
                changed = False
                for sprite_id in self.forced:
                    q = self.models.steps.apply(self.render_quality[sprite_id], dimension, self.sprites[sprite_id])
                    if q is not None:
                        self.render_quality[sprite_id] = q
                        changed = True
                if not changed:
                    break
                self._evaluate()
                if self.baseline >= before:
                    self.render_quality = previous
                    self._evaluate()
                    break
                degraded = True
            if self.baseline <= self.budget:
                break
        if self.baseline > self.budget:
            raise InfeasibleBudgetError(self.baseline, self.budget)
        if degraded:
            logger.info("degraded %d never-rendered sprite(s) to fit the frame budget", len(self.forced))
            self.notes.append("forced renders degraded to fit the budget")

    def candidates(self):
        committed = self.committed
        return [Candidate(s, self.warp_expected[s] - self.render_expected[s], self.render_compute[s] - self.warp_compute[s])
                for s in self.sprites if s not in committed]

    def plan(self, selected, policy, diagnostics=None):
        """Build the :class:`FramePlan` re-rendering ``selected`` plus the committed sprites."""
        rerender = set(selected) | self.committed
        actions = {}
        expected = []
        spend = []
        for sprite_id in self.sprites:
            if sprite_id in rerender:
                actions[sprite_id] = RenderAction.rerender(self.render_quality[sprite_id])
                expected.append(self.render_expected[sprite_id])
                spend.append(self.render_compute[sprite_id])
            else:
                actions[sprite_id] = RenderAction.warp()
                expected.append(self.warp_expected[sprite_id])
                spend.append(self.warp_compute[sprite_id])
        diagnostics = dict(diagnostics or {})
        diagnostics.setdefault("forced", tuple(self.forced))
        diagnostics.setdefault("always_render", tuple(self.always_render))
        if self.notes:
            diagnostics["notes"] = tuple(self.notes) + tuple(diagnostics.get("notes", ()))
        return FramePlan(types.MappingProxyType(actions), frame_cost(expected, self.models.combiner),
                         math.fsum(spend), self.budget, policy, types.MappingProxyType(diagnostics))


def build_candidates(sprites, models, budget):
    """Knapsack candidates of a frame after the never-rendered sprites are paid for.

    Returns:
        tuple: ``(candidates, baseline spend)``
    """
    problem = FrameProblem(sprites, models, budget)
    problem.fit_forced()
    return problem.candidates(), problem.baseline


def _run_knapsack(problem, method, k=None):
    candidates = problem.candidates()
    if method == "greedy":
        result = greedy_knapsack(candidates, problem.budget, problem.baseline)
    elif method == "sahni":
        result = sahni_knapsack(candidates, problem.budget, k, problem.baseline)
    else:
        result = exact_knapsack_oracle(candidates, problem.budget, problem.baseline)
    return candidates, result


def _knapsack_plan(problem, policy):
    name, arg = parse_policy(policy)
    candidates, result = _run_knapsack(problem, name, arg)
    selected = list(result.selected)
    diagnostics = {
        "phi": {c.sprite_id: c.phi for c in candidates},
        "method": result.method,
        "benefit": result.benefit,
        "no_benefit": tuple(c.sprite_id for c in candidates if c.benefit <= 0),
        "notes": result.notes,
    }
    plan = problem.plan(selected, policy, diagnostics)
    # the knapsack checks the residual budget; re-check the rounded frame total
    while plan.spend > problem.budget and selected:
        dropped = selected.pop()
        logger.debug("dropping '%s': rounded spend %.17g exceeds budget %.17g", dropped, plan.spend, problem.budget)
        diagnostics["benefit"] = math.fsum(c.benefit for c in candidates if c.sprite_id in selected)
        plan = problem.plan(selected, policy, diagnostics)
    return plan


def _first_pruned(plan, candidates):
    chosen = set(plan.rerendered)
    for candidate in sorted(candidates, key=lambda c: c.rank):
        if candidate.sprite_id not in chosen and candidate.benefit > 0:
            return candidate
    return None


def multidim_greedy(sprites, models, budget, base_policy="greedy"):
    """Myopic multi-dimension degradation pass on top of a knapsack plan.

    Dimensions are tried in the order texture, geometry, spatial, shading.
    Each step coarsens the re-render quality of every sprite by one
    predefined amount, re-prices the frame and re-runs the knapsack; the step
    is kept only if the expected frame cost strictly drops. A step is pruned
    without re-running the knapsack when the benefit of the first sprite
    left out of the plan is smaller than the expected-cost increase the step
    inflicts on the sprites already being re-rendered. The increase is
    summed over every sprite in the plan, since a step coarsens all of them
    at once.

    Args:
        sprites (dict): sprite id to current-frame :class:`Sprite`
        models (RegulatorModels): pricing models
        budget (float): frame budget
        base_policy (str): knapsack policy of the baseline plan

    Returns:
        FramePlan: never worse in expected frame cost than the baseline
    """
    problem = FrameProblem(sprites, models, budget)
    problem.fit_forced()
    incumbent = _knapsack_plan(problem, base_policy)
    steps = []
    for dimension in DIMENSIONS:
        quality = {}
        for sprite_id, sprite in problem.sprites.items():
            q = models.steps.apply(problem.render_quality[sprite_id], dimension, sprite)
            if q is not None:
                quality[sprite_id] = q
        if not quality:
            steps.append((dimension, "exhausted"))
            continue
        trial = FrameProblem(sprites, models, budget, {**problem.render_quality, **quality})
        increase = math.fsum(trial.render_expected[s] - problem.render_expected[s] for s in incumbent.rerendered)
        pruned = _first_pruned(incumbent, problem.candidates())
        gain = pruned.benefit if pruned is not None else 0.0
        if gain < increase:
            steps.append((dimension, "pruned"))
            logger.debug("multidim: %s step pruned (gain %.6g < increase %.6g)", dimension, gain, increase)
            continue
        candidate_plan = _knapsack_plan(trial, base_policy)
        if candidate_plan.expected_cost < incumbent.expected_cost:
            steps.append((dimension, "accepted"))
            logger.debug("multidim: %s step accepted (%.6g -> %.6g)", dimension, incumbent.expected_cost, candidate_plan.expected_cost)
            problem = trial
            incumbent = candidate_plan
        else:
            steps.append((dimension, "rejected"))
    diagnostics = dict(incumbent.diagnostics)
    diagnostics["degradation_steps"] = tuple(steps)
    diagnostics["degraded_side"] = "rerender"
    return FramePlan(incumbent.actions, incumbent.expected_cost, incumbent.spend, budget,
                     "multidim" if base_policy == "greedy" else "multidim:" + base_policy,
                     types.MappingProxyType(diagnostics))


def _threshold_plan(problem, tau, policy):
    errors = {}
    for sprite_id in problem.sprites:
        if sprite_id in problem.committed:
            continue
        fid = evaluate_fiducial(problem.sprites[sprite_id], RenderAction.warp(), forms=problem.models.forms)
        errors[sprite_id] = fid.geometric_warp_error
    residual = problem.budget - problem.baseline
    spend = 0.0
    selected = []
    for sprite_id in sorted(errors, key=lambda s: (-errors[s], s)):
        extra = problem.render_compute[sprite_id] - problem.warp_compute[sprite_id]
        if errors[sprite_id] > tau and spend + extra <= residual:
            selected.append(sprite_id)
            spend += extra
    plan = problem.plan(selected, policy, {"threshold": tau})
    while plan.spend > problem.budget and selected:
        selected.pop()
        plan = problem.plan(selected, policy, {"threshold": tau})
    return plan


def plan_frame(sprites, models, budget, policy="greedy"):
    """Choose this frame's actions under ``policy``.

    Args:
        sprites (dict): sprite id to current-frame :class:`Sprite`
        models (RegulatorModels): pricing models
        budget (float): frame budget
        policy (str): one of greedy, sahni:k, multidim[:base], render-all, warp-all, oracle, threshold:tau

    Returns:
        FramePlan: a plan whose spend is within ``budget``
    """
    name, arg = parse_policy(policy)
    if name == "multidim":
        plan = multidim_greedy(sprites, models, budget, arg)
    else:
        problem = FrameProblem(sprites, models, budget)
        problem.fit_forced()
        if name == "warp-all":
            plan = problem.plan((), policy)
        elif name == "render-all":
            everything = problem.plan(problem.sprites, policy)
            if everything.spend <= budget:
                plan = everything
            else:
                logger.debug("render-all needs %.6g > budget %.6g; falling back to greedy", everything.spend, budget)
                plan = _knapsack_plan(problem, "greedy")
                diagnostics = dict(plan.diagnostics, notes=tuple(plan.diagnostics.get("notes", ())) + ("render_all_over_budget",))
                plan = FramePlan(plan.actions, plan.expected_cost, plan.spend, budget, policy, types.MappingProxyType(diagnostics))
        elif name == "threshold":
            plan = _threshold_plan(problem, arg, policy)
        else:
            plan = _knapsack_plan(problem, policy)
    logger.debug("policy %s: %d/%d re-rendered, spend %.6g of %.6g, expected cost %.6g",
                 policy, len(plan.rerendered), len(plan.actions), plan.spend, budget, plan.expected_cost)
    return plan
