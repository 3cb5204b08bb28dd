"""Perceive-decide-act agent with novelty meta-reasoning.

Each step the agent turns the observation into a model state, keeps or picks a
task, plans for it and executes the plan while checking every observed state
against the one the model predicted. After the episode the monitors score it;
when the determination rule fires, an adaptive agent repairs its model before
the next episode.
"""

from __future__ import annotations

import functools
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .ir import (
    BOOL,
    TRUE,
    Condition,
    GroundedModel,
    ModelError,
    Plan,
    PlanStep,
    State,
    Trajectory,
    as_key,
    compile_condition,
    format_key,
    values_distance,
)
from .monitors import (
    INCONSISTENCY,
    REWARD_DIVERGENCE,
    UNKNOWN_ENTITY,
    DeterminationRule,
    InconsistencyConfig,
    MonitorSignal,
    RewardEstimator,
    determine,
    inconsistency_score,
    inconsistency_signal,
    reward_divergence,
    unknown_entity_check,
)
from .planner import PlannerConfig, PlanningFailure, replan_from
from .repair import RepairSearchConfig, RepairSpace, do_repair, repair_search
from .simulator import SimConfig, SimulationError, simulate_plan

# ---------------------------------------------------------------------------
# Tasks


@dataclass(frozen=True)
class TaskDef:
    name: str
    precondition: Condition = TRUE
    goal: Condition = TRUE
    actions: tuple[str, ...] | None = None  # action schemas the task may use; None = all


def restrict(model: GroundedModel, action_names: Sequence[str] | None) -> GroundedModel:
    """Sub-model whose only actions are instances of ``action_names``."""
    if action_names is None:
        return model
    names = tuple(action_names)
    cache = model.__dict__.setdefault("_restricted", {})
    if names not in cache:
        known = {h.name for h in model.domain.happenings}
        missing = [n for n in names if n not in known]
        if missing:
            raise ModelError(f"task refers to unknown actions: {', '.join(missing)}")
        actions = tuple(a for a in model.actions if a.name in names)
        cache[names] = GroundedModel(model.domain, model.problem, model.table, actions, model.events,
                                     model.processes, model.s0, model.goal, model.static)
    return cache[names]


@functools.lru_cache(maxsize=256)
def _compiled(table, cond: Condition):
    return compile_condition(table, cond)


def relevant_tasks(tasks: Sequence[TaskDef], s: State) -> list[TaskDef]:
    """Tasks whose precondition holds and whose goal is not yet achieved."""
    out = []
    for t in tasks:
        pre = _compiled(s.table, t.precondition)
        goal = _compiled(s.table, t.goal)
        if pre(s.values) and not goal(s.values):
            out.append(t)
    return out


@dataclass(frozen=True)
class TaskRule:
    choose: tuple[str, ...]  # candidate task names in priority order
    after: str | None = None  # only when the last episode ended with this outcome


@dataclass(frozen=True)
class TaskRules:
    """Ordered rules; when none applies the first relevant task is chosen."""

    rules: tuple[TaskRule, ...] = ()


class NoRelevantTask(Exception):
    """Nothing left to do; the agent idles until the episode ends."""


def select_task(relevant: Sequence[TaskDef], rules: TaskRules, last_outcome: str | None) -> TaskDef:
    if not relevant:
        raise NoRelevantTask("no relevant task")
    by_name = {t.name: t for t in relevant}
    for rule in rules.rules:
        if rule.after is not None and rule.after != last_outcome:
            continue
        for name in rule.choose:
            if name in by_name:
                return by_name[name]
    return relevant[0]


# ---------------------------------------------------------------------------
# State inference


@dataclass(frozen=True)
class BackgroundFacts:
    """Assumed fluent values; those listed in ``defaults`` yield to observations."""

    facts: Mapping[str, Any] = field(default_factory=dict)
    defaults: frozenset = frozenset()


class UnknownFluentError(ModelError):
    def __init__(self, names: Sequence[str]):
        super().__init__(f"observation mentions fluents unknown to the model: {', '.join(names)}")
        self.names = tuple(names)


def _declared_defaults(model: GroundedModel) -> list:
    cached = model.__dict__.get("_declared_defaults")
    if cached is None:
        cached = [False if fid.kind == BOOL else None for fid in model.table.ids]
        for key, value in model.problem.init.items():
            i = model.table.index.get(as_key(key))
            if i is not None:
                cached[i] = value
        object.__setattr__(model, "_declared_defaults", cached)
    return cached


def infer_state(observation: Mapping[str, Any], background: BackgroundFacts, model: GroundedModel,
                elaborate: Callable[[dict], None] | None = None, time: float = 0.0) -> State:
    """Observation first, then background facts, then the model's declared initial values."""
    index = model.table.index
    keys = {name: as_key(name) for name in observation}
    unknown = [name for name, k in keys.items() if k not in index]
    if unknown:
        raise UnknownFluentError(sorted(unknown))
    clash = [n for n in background.facts if n in observation and n not in background.defaults]
    if clash:
        raise ModelError(f"background facts overlap the observation: {', '.join(sorted(clash))}")
    merged: dict[tuple, Any] = {as_key(k): v for k, v in background.facts.items()}
    merged.update({keys[n]: v for n, v in observation.items()})
    if elaborate is not None:
        elaborate(merged)
    vals = list(_declared_defaults(model))
    ids = model.table.ids
    for k, v in merged.items():
        i = index.get(k)
        if i is None:
            raise UnknownFluentError([format_key(k)])
        vals[i] = bool(v) if ids[i].kind == BOOL else float(v)
    missing = [str(ids[i]) for i, v in enumerate(vals) if v is None]
    if missing:
        raise ModelError(f"fluents left unassigned: {', '.join(missing)}")
    return State(model.table, tuple(vals), time)


# ---------------------------------------------------------------------------
# Domain bundle


@dataclass
class DomainKit:
    """Everything domain-specific the generic agent needs."""

    name: str
    model: GroundedModel
    tasks: tuple[TaskDef, ...]
    rules: TaskRules
    background: BackgroundFacts
    planner: PlannerConfig
    incons: InconsistencyConfig
    repair_space: RepairSpace
    repair_cfg: RepairSearchConfig
    determination: DeterminationRule
    inventory: frozenset
    threshold_c: float = 0.65
    execute_steps: int | None = None  # receding horizon: replan after this many steps
    planning_goal: Callable[[TaskDef, State], Condition] | None = None
    elaborate: Callable[[dict, "Agent"], None] | None = None
    to_env_action: Callable[[str | None], str | None] = lambda label: label
    success: Callable[[Mapping, Any], bool] = lambda obs, env: False
    normalized: Callable[[float], float] = lambda total: total
    reward_features: Callable[[Mapping, str | None], tuple] | None = None
    normalize_step_reward: Callable[[float], float] = lambda r: r


# ---------------------------------------------------------------------------
# Episodes


@dataclass
class EpisodeRecord:
    episode: int
    trajectory: Trajectory
    rewards: list[float]
    plans: list[str]
    outcome: str  # "success" or "failure"
    idle: bool
    signals: list[MonitorSignal]
    novelty_detected: bool
    repair: str | None = None
    repair_delta: dict[str, float] | None = None
    repair_consistency: float | None = None  # C of the repaired model on this episode
    replans: int = 0
    tasks: list[str] = field(default_factory=list)
    total_reward: float = 0.0
    normalized_reward: float = 0.0
    wall_time: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.rewards)

    def signal(self, monitor: str) -> MonitorSignal | None:
        for s in self.signals:
            if s.monitor == monitor:
                return s
        return None

    def to_json(self) -> dict:
        inc = self.signal(INCONSISTENCY)
        return {
            "episode": self.episode,
            "reward": self.normalized_reward,
            "raw_reward": self.total_reward,
            "steps": self.steps,
            "inconsistency": None if inc is None else inc.score,
            "novelty_detected": self.novelty_detected,
            "repair": self.repair,
            "repair_delta": self.repair_delta,
            "repair_consistency": self.repair_consistency,
            "outcome": self.outcome,
            "idle": self.idle,
            "replans": self.replans,
            "tasks": self.tasks,
            "signals": [s.as_dict() for s in self.signals],
        }


def executed_plan(actions: Sequence[str | None], dt: float) -> Plan:
    """The executed action sequence as a plan relative to the first observed state."""
    return Plan(tuple(PlanStep(i * dt, a) for i, a in enumerate(actions) if a is not None), len(actions) * dt)


class Agent:
    """Plan, act, monitor and repair; ``adaptive=False`` logs monitor output but never repairs."""

    def __init__(self, kit: DomainKit, adaptive: bool = True, estimator: RewardEstimator | None = None):
        self.kit = kit
        self.model = kit.model
        self.adaptive = adaptive
        self.estimator = estimator
        self.novelty_detected = False
        self.last_outcome: str | None = None
        self.history: dict[str, list[MonitorSignal]] = {m: [] for m in self.monitors}
        self.repairs: list[str] = []

    @property
    def monitors(self) -> tuple[str, ...]:
        base = (UNKNOWN_ENTITY, INCONSISTENCY)
        return base + ((REWARD_DIVERGENCE,) if self.estimator is not None else ())

    def infer(self, obs: Mapping, t: float, unknown: set) -> State:
        elaborate = None
        if self.kit.elaborate is not None:
            def elaborate(values: dict) -> None:
                self.kit.elaborate(values, self)
        try:
            return infer_state(obs, self.kit.background, self.model, elaborate, t)
        except UnknownFluentError as exc:
            # routed to the unknown-entity monitor; the rest of the observation is still usable
            unknown.update(exc.names)
            known = {k: v for k, v in obs.items() if k not in exc.names}
            return infer_state(known, self.kit.background, self.model, elaborate, t)

    def _plan(self, state: State, task: TaskDef) -> tuple[Plan, GroundedModel] | None:
        sub = restrict(self.model, task.actions)
        goal = self.kit.planning_goal(task, state) if self.kit.planning_goal else task.goal
        try:
            return replan_from(sub, state, goal, self.kit.planner), sub
        except PlanningFailure as exc:
            if exc.partial.duration:
                return exc.partial, sub
            return None

    def run_episode(self, env, obs: Mapping, episode: int) -> EpisodeRecord:
        """Play one episode from ``obs`` (the environment has just been reset)."""
        started = time.perf_counter()
        kit = self.kit
        sim = kit.planner.sim
        dt = sim.delta_t
        tol = kit.incons.step_tolerance
        pos = kit.incons.positions(self.model)
        unknown: set[str] = set()

        state = self.infer(obs, 0.0, unknown)
        states, actions, rewards, plans, tasks = [state], [], [], [], []
        failed_tasks: set[str] = set()
        task: TaskDef | None = None
        expected: Sequence[State] = ()
        schedule: dict[int, str] = {}
        remaining = 0
        k = 0
        replans = 0
        idle = False

        while not env.terminal:
            if remaining == 0:
                relevant = [t for t in relevant_tasks(kit.tasks, state) if t.name not in failed_tasks]
                if not relevant:
                    idle = True
                    break
                if task is None or task.name not in {t.name for t in relevant}:
                    task = select_task(relevant, kit.rules, self.last_outcome)
                    tasks.append(task.name)
                found = self._plan(state, task)
                if found is None:
                    failed_tasks.add(task.name)
                    task = None
                    continue
                plan, sub = found
                n = sim.steps(plan.duration or 0.0)
                if kit.execute_steps:
                    n = min(n, kit.execute_steps)
                if n == 0:
                    failed_tasks.add(task.name)
                    task = None
                    continue
                prefix = Plan(tuple(s for s in plan.steps if sim.steps(s.time) < n), n * dt)
                try:
                    expected = simulate_plan(sub, state, prefix, SimConfig(dt, sim.max_event_cascade, n * dt)).states
                except SimulationError as exc:
                    expected = exc.trajectory.states if exc.trajectory else (state,)
                schedule = {sim.steps(s.time): s.action for s in prefix.steps}
                plans.append(prefix.to_text())
                remaining, k = n, 0

            label = schedule.get(k)
            obs, reward, _ = env.step(kit.to_env_action(label))
            rewards.append(reward)
            actions.append(label)
            state = self.infer(obs, len(actions) * dt, unknown)
            states.append(state)
            k += 1
            remaining -= 1
            if remaining and (k >= len(expected) or values_distance(state.values, expected[k].values, pos) > tol):
                remaining = 0
                replans += 1

        traj = Trajectory(tuple(states), tuple(actions))
        outcome = "success" if kit.success(obs, env) else "failure"
        total = float(sum(rewards))
        record = EpisodeRecord(episode, traj, rewards, plans, outcome, idle, [], False, replans=replans,
                               tasks=tasks, total_reward=total, normalized_reward=kit.normalized(total))
        self._monitor(env, record, unknown)
        self.last_outcome = outcome
        record.wall_time = time.perf_counter() - started
        return record

    def _monitor(self, env, record: EpisodeRecord, unknown: set) -> None:
        kit = self.kit
        ep = record.episode
        ue = unknown_entity_check(env.entities(), kit.inventory, kit.threshold_c, ep)
        if unknown and not ue.fired:
            ue = MonitorSignal(UNKNOWN_ENTITY, ep, 1.0, True)
        signals = [ue]

        plan = executed_plan(record.trajectory.actions, kit.planner.sim.delta_t)
        score = inconsistency_score(plan, self.model, record.trajectory, kit.incons)
        signals.append(inconsistency_signal(score, kit.incons, ep))

        if self.estimator is not None:
            divs = []
            for (s, a, _), r in zip(record.trajectory.triples, record.rewards):
                sf, af = kit.reward_features(s.as_dict(), a)
                divs.append(reward_divergence(self.estimator, sf, af, kit.normalize_step_reward(r)))
            mean = sum(divs) / len(divs) if divs else 0.0
            signals.append(MonitorSignal(REWARD_DIVERGENCE, ep, mean, False))

        record.signals = signals
        for s in signals:
            self.history[s.monitor].append(s)
        verdict = determine(self.history, kit.determination)
        if verdict.fired:
            self.novelty_detected = True
        record.novelty_detected = verdict.fired

        if self.adaptive and verdict.fired and score >= kit.incons.C_th and record.trajectory.actions:
            result = repair_search(kit.repair_space, self.model, plan, record.trajectory, kit.repair_cfg, kit.incons)
            if result.best.mmos:
                self.model = do_repair(self.model, result.best)
                record.repair = result.log_line(kit.repair_space)
                record.repair_delta = result.best.net_delta()
                record.repair_consistency = result.C_best
                self.repairs.append(record.repair)


def run_episode(env, agent: Agent, obs: Mapping, episode: int) -> EpisodeRecord:
    return agent.run_episode(env, obs, episode)
