"""Budgeted forward best-first search over the discretised transition system.

A node is a full value list. Children apply one applicable action (or let time
pass) and then run ``plan_delta_t / delta_t`` simulator steps. Nodes are
ordered by ``g + weight * h`` with ties broken by insertion order, so a search
with a fixed config is deterministic.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .ir import BOOL, Atom, Condition, GroundedModel, Plan, PlanStep, SetBool, State, compile_condition
from .simulator import SimConfig, SimulationError, advance


class PlanningFailure(Exception):
    """Search ran out of budget or space; ``partial`` is the most promising prefix found."""

    def __init__(self, message: str, partial: Plan, expanded: int):
        super().__init__(message)
        self.partial = partial
        self.expanded = expanded


@dataclass(frozen=True)
class PlannerConfig:
    node_budget: int = 20000
    time_budget: float = 60.0  # safety net only; determinism comes from node_budget
    plan_delta_t: float = 0.02
    state_quantization: float | Mapping[str, float] | None = 1e-3
    heuristic: str = "goal_count"
    weight: float = 1.0
    horizon: int | None = None  # max decision points from the start state
    allow_wait: bool = True
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self) -> None:
        if self.node_budget < 1 or not self.time_budget > 0:
            raise ValueError("planner budgets must be positive")
        ratio = self.plan_delta_t / self.sim.delta_t
        if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("plan_delta_t must be a positive integer multiple of the simulator delta_t")
        if self.weight < 0:
            raise ValueError("heuristic weight must be nonnegative")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def substeps(self) -> int:
        return int(round(self.plan_delta_t / self.sim.delta_t))


class Guidance:
    """Stage cost of reaching a node plus an estimate of the cost still to come."""

    def cost(self, v: list) -> float:
        return 1.0

    def estimate(self, v: list, depth: int) -> float:
        return 0.0


GuidanceFactory = Callable[[GroundedModel, Condition, PlannerConfig], Guidance]
HEURISTICS: dict[str, GuidanceFactory] = {}


def register_heuristic(name: str):
    def deco(factory: GuidanceFactory) -> GuidanceFactory:
        HEURISTICS[name] = factory
        return factory
    return deco


@register_heuristic("blind")
def _blind(model, goal, cfg) -> Guidance:
    return Guidance()


class GoalCount(Guidance):
    def __init__(self, model: GroundedModel, goal: Condition):
        self.literals = [compile_condition(model, Condition((lit,))) for lit in goal.literals]

    def estimate(self, v, depth):
        return float(sum(1 for lit in self.literals if not lit(v)))


@register_heuristic("goal_count")
def _goal_count(model, goal, cfg) -> Guidance:
    return GoalCount(model, goal)


class BalanceGuidance(Guidance):
    """Pole-angle penalty accumulated over the lookahead window."""

    def __init__(self, model: GroundedModel, horizon: int | None):
        pos = model.table.position
        self.angles = [pos(n) for n in ("theta_x", "theta_y")]
        self.rates = [pos(n) for n in ("theta_x_dot", "theta_y_dot")]
        self.horizon = horizon or 0

    def cost(self, v):
        a, b = self.angles
        c, d = self.rates
        return abs(v[a]) + abs(v[b]) + 0.1 * (abs(v[c]) + abs(v[d]))

    def estimate(self, v, depth):
        return max(self.horizon - depth, 0) * self.cost(v)


@register_heuristic("balance")
def _balance(model, goal, cfg) -> Guidance:
    return BalanceGuidance(model, cfg.horizon)


def _dead_end_test(model: GroundedModel, goal: Condition):
    """Boolean goal literals whose required value no happening can ever write."""
    writable: set[tuple[int, bool]] = set()
    for h in model.happenings:
        for e in h.effects:
            if isinstance(e, SetBool):
                writable.add((model.table.position(e.target.key), e.value))
    stuck = []
    for lit in goal.literals:
        if isinstance(lit, Atom):
            i = model.table.position(lit.key)
            if (i, lit.positive) not in writable:
                stuck.append((i, lit.positive))
    if not stuck:
        return None
    return lambda v: any(bool(v[i]) != want for i, want in stuck)


def _quantizer(model: GroundedModel, q):
    if q is None:
        return None
    grid = []
    for i, fid in enumerate(model.table.ids):
        if fid.kind == BOOL:
            grid.append((i, None))
            continue
        step = q.get(str(fid), q.get(fid.name)) if isinstance(q, Mapping) else q
        if step:
            grid.append((i, float(step)))

    def key(v):
        return tuple(v[i] if s is None else math.floor(v[i] / s + 0.5) for i, s in grid)
    return key


def _extract(node, cfg: PlannerConfig) -> Plan:
    steps = []
    depth = node[1]
    while node[3] is not None:
        if node[4] is not None:
            steps.append(PlanStep((node[1] - 1) * cfg.substeps * cfg.sim.delta_t, node[4]))
        node = node[3]
    steps.reverse()
    return Plan(tuple(steps), depth * cfg.substeps * cfg.sim.delta_t)


def plan(model: GroundedModel, s0: State, goal: Condition, cfg: PlannerConfig = PlannerConfig()) -> Plan:
    """Search for a plan from ``s0`` reaching ``goal``; raises PlanningFailure when budgets run out."""
    goal_fn = compile_condition(model, goal)
    if goal_fn(s0.values):
        return Plan((), 0.0)
    factory = HEURISTICS.get(cfg.heuristic)
    if factory is None:
        raise ValueError(f"unknown heuristic {cfg.heuristic!r}; known: {sorted(HEURISTICS)}")
    guide = factory(model, goal, cfg)
    dead = _dead_end_test(model, goal)
    quant = _quantizer(model, cfg.state_quantization)
    options = ([None] if cfg.allow_wait else []) + list(model.actions)
    dt, k, cascade = cfg.sim.delta_t, cfg.substeps, cfg.sim.max_event_cascade

    root_v = list(s0.values)
    if dead is not None and dead(root_v):
        raise PlanningFailure("goal unreachable from the start state", Plan((), 0.0), 0)
    # node = (values, depth, g, parent, action label)
    root = (root_v, 0, 0.0, None, None)
    counter = itertools.count()
    h0 = guide.estimate(root_v, 0)
    open_list = [(cfg.weight * h0, next(counter), root)]
    seen = {quant(root_v)} if quant else None
    # best partial: lowest estimated total cost among non-root nodes, deeper on ties
    best, best_key = root, (float("inf"), 0)
    expanded = 0
    started = time.monotonic()

    while open_list:
        if expanded >= cfg.node_budget:
            break
        if expanded % 256 == 0 and time.monotonic() - started > cfg.time_budget:
            break
        _, _, node = heapq.heappop(open_list)
        v, depth, g = node[0], node[1], node[2]
        if cfg.horizon is not None and depth >= cfg.horizon:
            continue
        expanded += 1
        for act in options:
            if act is not None and not act.pre(v):
                continue
            child = list(v)
            try:
                advance(model, child, act, dt, cascade)
                for _ in range(k - 1):
                    advance(model, child, None, dt, cascade)
            except SimulationError:
                continue
            if dead is not None and dead(child):
                continue
            label = None if act is None else act.label
            cnode = (child, depth + 1, g + guide.cost(child), node, label)
            if goal_fn(child):
                return _extract(cnode, cfg)
            if seen is not None:
                key = quant(child)
                if key in seen:
                    continue
                seen.add(key)
            h = guide.estimate(child, depth + 1)
            heapq.heappush(open_list, (cnode[2] + cfg.weight * h, next(counter), cnode))
            ckey = (cnode[2] + h, -(depth + 1))
            if ckey < best_key:
                best, best_key = cnode, ckey

    reason = "search space exhausted" if not open_list else "planning budget exhausted"
    raise PlanningFailure(f"{reason} after {expanded} expansions", _extract(best, cfg), expanded)


def replan_from(model: GroundedModel, current: State, goal: Condition, cfg: PlannerConfig = PlannerConfig()) -> Plan:
    """Plan again from a mid-episode state; plan timestamps are relative to ``current``."""
    return plan(model, current, goal, cfg)
