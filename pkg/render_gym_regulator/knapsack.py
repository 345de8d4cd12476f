#SPDX-License-Identifier: Apache-2.0
#File : knapsack.py

"""0/1 knapsack solvers over re-render candidates.

An item is a sprite that is warped in the baseline plan; taking it re-renders
the sprite, buys ``benefit`` expected-cost reduction and spends ``cost``
extra budget units. Items are ranked by refinement rate ``benefit / cost``;
equal rates go to the larger benefit, then to the smaller sprite id.

Feasibility is checked exactly: an item is only taken if the running spend
plus its cost is ``<= budget``, so every returned spend is ``<= budget``.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Tuple

from render_gym_scene.errors import AlwaysRenderError, InfeasibleBudgetError, OracleSizeError, ValidationError

logger = logging.getLogger(__name__)

MAX_ORACLE_ITEMS = 22
MAX_SEED_SIZE = 3


@dataclass(frozen=True)
class Candidate:
    sprite_id: str
    benefit: float
    cost: float

    @property
    def phi(self):
        return self.benefit / self.cost

    @property
    def rank(self):
        return (-self.phi, -self.benefit, self.sprite_id)


@dataclass(frozen=True)
class KnapsackResult:
    """Chosen items in rank order, their total benefit and spend, and the winning method."""
    selected: Tuple[str, ...]
    benefit: float
    spend: float
    residual_budget: float
    method: str
    notes: Tuple[str, ...] = ()

    @property
    def slack(self):
        return self.residual_budget - self.spend


def _prepare(candidates, budget, baseline):
    """Validate and rank candidates; return ``(items, residual budget)``."""
    residual = budget - baseline
    if residual < 0:
        raise InfeasibleBudgetError(baseline, budget)
    seen = set()
    items = []
    for candidate in candidates:
        if candidate.sprite_id in seen:
            raise ValidationError("duplicate knapsack candidate '%s'" % candidate.sprite_id)
        seen.add(candidate.sprite_id)
        if not candidate.cost > 0:
            raise AlwaysRenderError(candidate.sprite_id, candidate.cost)
        # an item without benefit can never improve a plan
        if candidate.benefit > 0:
            items.append(candidate)
    items.sort(key=lambda c: c.rank)
    return items, residual


def _fill(items, residual, taken=(), spend=0.0):
    """Greedy-with-skip: walk ``items`` in rank order, taking whatever still fits."""
    chosen = list(taken)
    skip = {c.sprite_id for c in taken}
    for item in items:
        if item.sprite_id in skip:
            continue
        if spend + item.cost <= residual:
            chosen.append(item)
            spend += item.cost
    return chosen, spend


def _result(chosen, spend, residual, method, notes=()):
    ordered = sorted(chosen, key=lambda c: c.rank)
    return KnapsackResult(tuple(c.sprite_id for c in ordered), math.fsum(c.benefit for c in ordered),
                          spend, residual, method, tuple(notes))


def greedy_with_skip(candidates, budget, baseline=0.0):
    """Rank-ordered greedy fill, skipping items that do not fit and continuing."""
    items, residual = _prepare(candidates, budget, baseline)
    chosen, spend = _fill(items, residual)
    return _result(chosen, spend, residual, "greedy")


def greedy_knapsack(candidates, budget, baseline=0.0):
    """Greedy-with-skip compared against the best single item.

    The better of the two carries at least half of the optimal benefit.

    Args:
        candidates (list): :class:`Candidate` items with cost > 0
        budget (float): frame budget
        baseline (float): spend already committed by the all-warp plan

    Returns:
        KnapsackResult: the better plan; ``method`` is ``greedy`` or ``best-single``
    """
    items, residual = _prepare(candidates, budget, baseline)
    chosen, spend = _fill(items, residual)
    plan_a = _result(chosen, spend, residual, "greedy")

    single = None
    for item in items:
        if item.cost <= residual and (single is None or item.benefit > single.benefit):
            single = item
    if single is not None and single.benefit > plan_a.benefit:
        logger.debug("best single item '%s' (%.6g) beats greedy fill (%.6g)", single.sprite_id, single.benefit, plan_a.benefit)
        return _result([single], single.cost, residual, "best-single",
                       ("greedy fill benefit %.9g" % plan_a.benefit,))
    return plan_a


def sahni_knapsack(candidates, budget, k, baseline=0.0):
    """Limited subset search: every feasible seed of at most ``k`` items, completed greedily.

    Each seed is completed by walking every remaining item in rank order and
    taking whatever still fits. The best plan is within ``k/(k+1)`` of the
    optimum, and for ``k >= 1`` it is never worse than :func:`greedy_knapsack`.
    ``k = 0`` is the plain greedy-with-skip fill.

    Args:
        candidates (list): :class:`Candidate` items with cost > 0
        budget (float): frame budget
        k (int): largest seed size, 0 to 3
        baseline (float): spend already committed by the all-warp plan

    Returns:
        KnapsackResult: the best completed plan
    """
    if isinstance(k, bool) or not isinstance(k, int) or not 0 <= k <= MAX_SEED_SIZE:
        raise ValidationError("sahni seed size k must be an integer in 0..%d, got %r" % (MAX_SEED_SIZE, k))
    items, residual = _prepare(candidates, budget, baseline)
    best = None
    best_seed = ()
    for size in range(k + 1):
        for seed in itertools.combinations(items, size):
            spend = 0.0
            for item in seed:
                spend += item.cost
            if spend > residual:
                continue
            chosen, spend = _fill(items, residual, seed, spend)
            benefit = math.fsum(c.benefit for c in chosen)
            if best is None or benefit > best[0]:
                best = (benefit, chosen, spend)
                best_seed = tuple(item.sprite_id for item in seed)
    if best is None:
        return _result([], 0.0, residual, "sahni:%d" % k)
    notes = ("seed %s" % ",".join(best_seed),) if best_seed else ()
    return _result(best[1], best[2], residual, "sahni:%d" % k, notes)


def exact_knapsack_oracle(candidates, budget, baseline=0.0):
    """Optimal selection by depth-first branch and bound.

    Nodes are pruned with the fractional (LP) bound over the remaining ranked
    items.

    Args:
        candidates (list): at most 22 :class:`Candidate` items
        budget (float): frame budget
        baseline (float): spend already committed by the all-warp plan

    Returns:
        KnapsackResult: an optimal plan
    """
    candidates = list(candidates)
    if len(candidates) > MAX_ORACLE_ITEMS:
        raise OracleSizeError("the exact oracle handles at most %d candidates, got %d" % (MAX_ORACLE_ITEMS, len(candidates)))
    items, residual = _prepare(candidates, budget, baseline)
    n = len(items)
    best = [0.0, ()]

    def bound(level, spend, value):
        room = residual - spend
        for item in items[level:]:
            if item.cost <= room:
                room -= item.cost
                value += item.benefit
            else:
                return value + room * item.phi
        return value

    def search(level, spend, value, taken):
        if value > best[0]:
            best[0] = value
            best[1] = taken
        if level == n or bound(level, spend, value) <= best[0]:
            return
        item = items[level]
        if spend + item.cost <= residual:
            search(level + 1, spend + item.cost, value + item.benefit, taken + (item,))
        search(level + 1, spend, value, taken)

    search(0, 0.0, 0.0, ())
    spend = 0.0
    for item in best[1]:
        spend += item.cost
    return _result(best[1], spend, residual, "oracle")
