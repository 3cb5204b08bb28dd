from __future__ import annotations

import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptplan.agent import executed_plan, infer_state
from adaptplan.domains import cartpole_kit
from adaptplan.envs.cartpole import CartPoleEnv, CartPoleParams, CartPoleState, cartpole_step
from adaptplan.ir import Condition, DistanceSpec, Plan, fluent_distance, ground
from adaptplan.pddl import parse_domain, parse_problem
from adaptplan.simulator import (
    ConflictError,
    EventCascadeError,
    NonFiniteError,
    PreconditionError,
    SimConfig,
    dump_trajectory,
    load_trajectory,
    simulate_plan,
    step,
    validate,
)

from oracles import drift_model

POSE = DistanceSpec.of("cart_x", "cart_y", "theta_x", "theta_y")


def _model(domain_text: str, init: str, goal: str = "(and)"):
    domain = parse_domain(domain_text)
    return ground(domain, parse_problem(f"(define (problem p) (:domain {domain.name}) (:init {init}) (:goal {goal}))",
                                        domain))


def test_quiet_step_only_advances_time():
    model = _model("(define (domain still) (:functions (x)))", "(= (x) 4)")
    nxt = step(model, model.s0)
    assert nxt.values == model.s0.values
    assert nxt.time == pytest.approx(0.02)


def test_movement_process_integrates_pole_angle(cartpole):
    s = cartpole.s0.replace({"theta_x_dot": 0.1})
    nxt = step(cartpole, s)
    assert nxt["theta_x"] - s["theta_x"] == pytest.approx(0.002, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(-8, 8), st.integers(0, 64), st.integers(-100, 100))
def test_constant_rate_is_integrated_exactly(rate_quarters, k, start):
    rate = rate_quarters / 4.0
    model = drift_model(1, [rate], [float(start)])
    traj = simulate_plan(model, model.s0, Plan(), SimConfig(delta_t=0.25, horizon=0.25 * k))
    assert traj.final["f0"] == start + rate * k * 0.25


def test_empty_plan_zero_horizon(cartpole):
    traj = simulate_plan(cartpole, cartpole.s0, Plan(), SimConfig(horizon=0.0))
    assert traj.states == (cartpole.s0,)


def _alternating(n: int) -> Plan:
    return Plan.of(*[(i * 0.02, "push_left" if i % 2 == 0 else "push_right") for i in range(n)])


def _env_states(params: CartPoleParams, start: CartPoleState, actions, steps: int):
    out = [start]
    s = start
    for k in range(steps):
        s = cartpole_step(s, actions.get(k, "none"), params)
        out.append(s)
    return out


def test_model_matches_environment_on_alternating_pushes(cartpole):
    plan = _alternating(10)
    start = CartPoleState(theta_x=0.01, theta_y=-0.02, cart_x_dot=0.1)
    s0 = infer_state(_obs(start), cartpole_kit().background, cartpole)
    traj = simulate_plan(cartpole, s0, plan, SimConfig(horizon=0.4))
    env = _env_states(CartPoleParams(), start, {i: a.action for i, a in enumerate(plan)}, 20)
    assert len(traj) == len(env) == 21
    for model_state, env_state in zip(traj.states, env):
        for name in ("cart_x", "cart_x_dot", "theta_x", "theta_x_dot", "cart_y", "theta_y"):
            assert abs(model_state[name] - getattr(env_state, name)) < 1e-9


def test_stale_model_diverges_from_heavy_cart(cartpole):
    plan = _alternating(10)
    start = CartPoleState(theta_x=0.01)
    s0 = infer_state(_obs(start), cartpole_kit().background, cartpole)
    traj = simulate_plan(cartpole, s0, plan, SimConfig(horizon=1.0))
    env = _env_states(CartPoleParams(m_cart=10.0), start, {i: a.action for i, a in enumerate(plan)}, 50)
    gaps = [fluent_distance(m, infer_state(_obs(e), cartpole_kit().background, cartpole), POSE)
            for m, e in zip(traj.states, env)]
    assert max(gaps) > 0.009


def _obs(s: CartPoleState) -> dict:
    env = CartPoleEnv()
    env.state = s
    return env.observe()


def test_empty_goal_is_reached_by_any_executable_plan(cartpole):
    assert validate(cartpole, cartpole.s0, _alternating(4), Condition()).reaches_goal


def test_agent_plan_validates_for_two_hundred_steps():
    from adaptplan.agent import Agent

    kit = cartpole_kit()
    env = CartPoleEnv()
    record = Agent(kit, adaptive=False).run_episode(env, env.reset(3), 1)
    assert record.steps == 200
    plan = executed_plan(record.trajectory.actions, 0.02)
    result = validate(kit.model, record.trajectory.states[0], plan, kit.model.goal)
    assert result.reaches_goal
    assert max(abs(s["theta_x"]) for s in result.trajectory.states) < 0.165


TOGGLE = """(define (domain toggle) (:predicates (p)) (:functions (x))
  (:action a :parameters () :precondition (and (not (p))) :effect (and (p))))"""


def test_failed_precondition_reports_the_prefix():
    model = _model(TOGGLE, "(= (x) 0)")
    with pytest.raises(PreconditionError) as info:
        simulate_plan(model, model.s0, Plan.of((0.0, "a"), (0.02, "a")))
    assert len(info.value.trajectory) == 2


def test_runaway_events_raise_cascade_error():
    model = _model("""(define (domain flip) (:predicates (p))
      (:event on :parameters () :precondition (and (not (p))) :effect (and (p)))
      (:event off :parameters () :precondition (and (p)) :effect (and (not (p)))))""", "")
    with pytest.raises(EventCascadeError):
        step(model, model.s0)


def test_conflicting_event_writes_raise():
    model = _model("""(define (domain clash) (:functions (x) (y))
      (:event e1 :parameters () :precondition (and (< (y) 1)) :effect (and (assign (x) 1) (assign (y) 1)))
      (:event e2 :parameters () :precondition (and (< (y) 1)) :effect (and (assign (x) 2))))""",
                   "(= (x) 0) (= (y) 0)")
    with pytest.raises(ConflictError):
        step(model, model.s0)


def test_increases_from_two_events_add_up():
    model = _model("""(define (domain sum) (:functions (x) (y))
      (:event e1 :parameters () :precondition (and (< (y) 1)) :effect (and (increase (x) 1) (assign (y) 1)))
      (:event e2 :parameters () :precondition (and (< (y) 1)) :effect (and (increase (x) 2))))""",
                   "(= (x) 0) (= (y) 0)")
    assert step(model, model.s0)["x"] == 3.0


def test_division_by_zero_in_dynamics_is_non_finite(cartpole):
    broken = cartpole.with_initial_values({"l_pole": 0.0})
    with pytest.raises(NonFiniteError):
        step(broken, broken.s0, "push_left")


def test_unknown_plan_action(cartpole):
    from adaptplan.ir import ModelError

    with pytest.raises(ModelError):
        simulate_plan(cartpole, cartpole.s0, Plan.of((0.0, "jump")))


def test_simulation_is_deterministic(cartpole):
    s0 = cartpole.s0.replace({"theta_x": 0.03, "theta_y_dot": -0.2})
    a = simulate_plan(cartpole, s0, _alternating(12), SimConfig(horizon=0.5))
    b = simulate_plan(cartpole, s0, _alternating(12), SimConfig(horizon=0.5))
    assert a == b


def test_trajectory_dump_round_trip(cartpole):
    s0 = cartpole.s0.replace({"theta_x": 0.03})
    traj = simulate_plan(cartpole, s0, _alternating(5), SimConfig(horizon=0.2))
    buf = io.StringIO()
    dump_trajectory(traj, buf)
    again = load_trajectory(buf.getvalue().splitlines(), cartpole)
    assert again.actions == traj.actions
    for a, b in zip(again.states, traj.states):
        assert a.values == b.values
        assert math.isclose(a.time, b.time)
