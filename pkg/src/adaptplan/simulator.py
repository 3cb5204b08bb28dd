"""Discrete-time executor for grounded PDDL+ models.

One ``step`` of length ``delta_t``:

1. apply the action's instantaneous effects (if any),
2. fire enabled events round by round until none fires,
3. integrate every active process with one explicit Euler update,
4. advance simulated time,
5. fire enabled events once more (a single round).

Events are only checked at step boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable

from .ir import (
    NUM,
    Condition,
    GroundedModel,
    GroundHappening,
    ModelError,
    Plan,
    State,
    Trajectory,
    as_key,
    holds,
)


class SimulationError(ModelError):
    """Base class for step failures; ``trajectory`` holds the states reached so far."""

    trajectory: Trajectory | None = None


class PreconditionError(SimulationError):
    pass


class EventCascadeError(SimulationError):
    pass


class ConflictError(SimulationError):
    pass


class NonFiniteError(SimulationError):
    pass


@dataclass(frozen=True)
class SimConfig:
    delta_t: float = 0.02
    max_event_cascade: int = 16
    horizon: float | None = None  # seconds; None = plan duration, else its last action

    def __post_init__(self) -> None:
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.max_event_cascade < 1:
            raise ValueError("max_event_cascade must be >= 1")
        if self.horizon is not None and self.horizon < 0:
            raise ValueError("horizon must be nonnegative")

    def steps(self, seconds: float) -> int:
        return int(round(seconds / self.delta_t))


def _apply(v: list, writes) -> None:
    if len(writes) == 1:
        i, mode, val = writes[0]
        v[i] = v[i] + val if mode else val
        return
    merged: dict[int, tuple[int, object]] = {}
    for i, mode, val in writes:
        prev = merged.get(i)
        if prev is None:
            merged[i] = (mode, val)
        elif mode == 1 and prev[0] == 1:
            merged[i] = (1, prev[1] + val)
        elif mode == 0 and prev[0] == 0 and prev[1] == val:
            continue
        else:
            raise ConflictError(f"conflicting instantaneous writes to fluent #{i}")
    for i, (mode, val) in merged.items():
        v[i] = v[i] + val if mode else val


def _fire_events(model: GroundedModel, v: list, rounds: int, strict: bool) -> None:
    events = model.events
    if not events:
        return
    for _ in range(rounds):
        writes: list = []
        fired = False
        for e in events:
            if e.pre(v):
                fired = True
                writes.extend(e.apply(v))
        if not fired:
            return
        if writes:
            _apply(v, writes)
    if strict and any(e.pre(v) for e in events):
        raise EventCascadeError(f"event cascade did not settle within {rounds} rounds")


def advance(model: GroundedModel, v: list, action: GroundHappening | None, dt: float, max_cascade: int) -> None:
    """Run one step in place on the value list ``v``."""
    try:
        if action is not None:
            if not action.pre(v):
                raise PreconditionError(f"precondition of {action.label} does not hold")
            writes = action.apply(v)
            if writes:
                _apply(v, writes)
        _fire_events(model, v, max_cascade, strict=True)
        if model.processes:
            acc: dict[int, float] = {}
            for p in model.processes:
                if p.pre(v):
                    for i, r in p.rates(v):
                        acc[i] = acc[i] + r if i in acc else r
            for i, r in acc.items():
                v[i] = v[i] + dt * r
        _fire_events(model, v, 1, strict=False)
    except ZeroDivisionError:
        raise NonFiniteError("division by zero") from None
    except OverflowError:
        raise NonFiniteError("numeric overflow") from None
    if not math.isfinite(sum(v)):
        bad = [str(model.table.ids[i]) for i, x in enumerate(v) if model.table.ids[i].kind == NUM and not math.isfinite(x)]
        raise NonFiniteError(f"non-finite value produced for {', '.join(bad)}")


def _resolve(model: GroundedModel, action) -> GroundHappening | None:
    if action is None or isinstance(action, GroundHappening):
        return action
    return action_table(model).get(" ".join(as_key(action)))


def action_table(model: GroundedModel) -> dict[str, GroundHappening]:
    table = model.__dict__.get("_actions_by_label")
    if table is None:
        table = {a.label: a for a in model.actions}
        object.__setattr__(model, "_actions_by_label", table)
    return table


def step(model: GroundedModel, s: State, action=None, cfg: SimConfig = SimConfig()) -> State:
    """Apply ``action`` (grounded action, its label, or None) and let ``delta_t`` pass."""
    act = _resolve(model, action)
    if action is not None and act is None:
        raise ModelError(f"unknown action {action!r}")
    v = list(s.values)
    advance(model, v, act, cfg.delta_t, cfg.max_event_cascade)
    return State(s.table, tuple(v), s.time + cfg.delta_t)


def _schedule(model: GroundedModel, plan: Plan, cfg: SimConfig) -> dict[int, GroundHappening]:
    out: dict[int, GroundHappening] = {}
    table = action_table(model)
    for ps in plan:
        k = cfg.steps(ps.time)
        if k in out:
            raise ModelError(f"two plan actions scheduled in the same step (t={ps.time})")
        act = table.get(ps.action)
        if act is None:
            raise ModelError(f"plan uses unknown action {ps.action!r}")
        out[k] = act
    return out


def simulate_plan(model: GroundedModel, s0: State, plan: Plan, cfg: SimConfig = SimConfig(),
                  skip_inapplicable: bool = False) -> Trajectory:
    """Expected trajectory S(plan, model) from ``s0``; timestamps are relative to ``s0``.

    A failed precondition halts the simulation with PreconditionError, unless
    ``skip_inapplicable`` is set: then the action is dropped (recorded as no
    action) and time keeps passing, as in the bundled environments.
    """
    schedule = _schedule(model, plan, cfg)
    last = max(schedule) + 1 if schedule else 0
    if cfg.horizon is not None:
        n = cfg.steps(cfg.horizon)
    elif plan.duration is not None:
        n = max(last, cfg.steps(plan.duration))
    else:
        n = last
    if last > n:
        raise ModelError("plan timestamps exceed the simulation horizon")
    states = [s0]
    labels: list[str | None] = []
    v = list(s0.values)
    t = s0.time
    for k in range(n):
        act = schedule.get(k)
        if skip_inapplicable and act is not None and not act.pre(v):
            act = None
        try:
            advance(model, v, act, cfg.delta_t, cfg.max_event_cascade)
        except SimulationError as exc:
            exc.trajectory = Trajectory(tuple(states), tuple(labels))
            raise
        t = t + cfg.delta_t
        states.append(State(s0.table, tuple(v), t))
        labels.append(None if act is None else act.label)
    return Trajectory(tuple(states), tuple(labels))


@dataclass(frozen=True)
class ValidationResult:
    reaches_goal: bool
    trajectory: Trajectory


def validate(model: GroundedModel, s0: State, plan: Plan, goal: Condition, cfg: SimConfig = SimConfig()) -> ValidationResult:
    traj = simulate_plan(model, s0, plan, cfg)
    return ValidationResult(holds(traj.final, goal), traj)


# ---------------------------------------------------------------------------
# Newline-delimited JSON trajectory dumps


def dump_trajectory(traj: Trajectory, fh: IO[str]) -> None:
    for i, s in enumerate(traj.states):
        row = {"time": s.time, "action": traj.actions[i - 1] if i else None, "fluents": s.as_dict()}
        fh.write(json.dumps(row) + "\n")


def load_trajectory(lines: Iterable[str], model: GroundedModel) -> Trajectory:
    """Read a dump; fluents missing from a row fall back to the model's initial values."""
    states: list[State] = []
    actions: list[str | None] = []
    for raw in lines:
        if not raw.strip():
            continue
        row = json.loads(raw)
        s = model.s0.replace(row.get("fluents", {}), time=float(row.get("time", 0.0)))
        if states:
            actions.append(row.get("action"))
        states.append(s)
    if not states:
        raise ModelError("empty trajectory file")
    return Trajectory(tuple(states), tuple(actions))
