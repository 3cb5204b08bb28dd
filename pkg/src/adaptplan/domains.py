"""Bundled agent configurations for the cart-pole and crafting environments."""

from __future__ import annotations

from importlib import resources
from typing import Any, Mapping

from .agent import BackgroundFacts, DomainKit, TaskDef, TaskRule, TaskRules
from .envs import crafting as craft_env
from .envs.cartpole import MAX_STEPS as CARTPOLE_STEPS
from .ir import Atom, Comparison, Condition, Const, DistanceSpec, FluentRef, GroundedModel, ground
from .monitors import INCONSISTENCY, UNKNOWN_ENTITY, DeterminationRule, InconsistencyConfig, MonitorRule
from .pddl import parse_domain, parse_problem
from .planner import PlannerConfig
from .repair import RepairSearchConfig, RepairSpace

# Pose distance is measured in millimetres and milliradians (weight 1000^2 per
# coordinate); see the decisions ledger for why the unit matters.
POSE = ("cart_x", "cart_y", "theta_x", "theta_y")
POSE_WEIGHT = 1e6

CARTPOLE_REPAIR_SPACE = RepairSpace((
    ("l_pole", 0.5, 0.1),
    ("m_pole", 0.1, 0.1),
    ("m_cart", 1.0, 1.0),
    ("force_mag", 10.0, 1.0),
    ("gravity", 9.81, 1.0),
    ("angle_limit", 0.165, 0.01),
    ("push_force_l", 10.0, 1.0),
    ("push_force_r", 10.0, 1.0),
    ("push_force_f", 10.0, 1.0),
    ("push_force_b", 10.0, 1.0),
    ("pole_vel_x", 1.0, 1.0),
    ("pole_vel_y", 1.0, 1.0),
    ("cart_vel_x", 1.0, 1.0),
    ("cart_vel_y", 1.0, 1.0),
))

CRAFTING_REPAIR_SPACE = RepairSpace((
    ("break_log", 2.0, 1.0),
    ("break_platinum", 1.0, 1.0),
    ("break_diamond", 9.0, 1.0),
    ("collect_saplings", 1.0, 1.0),
))


def data_text(name: str) -> str:
    return resources.files("adaptplan").joinpath("data").joinpath(name).read_text(encoding="utf-8")


def load_bundled(domain_file: str, problem_file: str) -> GroundedModel:
    domain = parse_domain(data_text(domain_file), domain_file)
    problem = parse_problem(data_text(problem_file), domain, problem_file)
    return ground(domain, problem)


def cartpole_model() -> GroundedModel:
    return load_bundled("cartpole_domain.pddl", "cartpole_problem.pddl")


def crafting_model() -> GroundedModel:
    return load_bundled("crafting_domain.pddl", "crafting_problem.pddl")


def _ge(fluent: str, value: float) -> Comparison:
    return Comparison(">=", FluentRef(fluent, ()), Const(float(value)))


def _merge(base: dict, overrides: Mapping[str, Any] | None) -> dict:
    out = dict(base)
    out.update(overrides or {})
    return out


def _incons(monitor_cfg: Mapping[str, Any], distance: DistanceSpec, gamma: float, c_th: float) -> InconsistencyConfig:
    return InconsistencyConfig(gamma=float(monitor_cfg.get("gamma", gamma)), C_th=float(monitor_cfg.get("C_th", c_th)),
                               distance=distance)


def _determination(monitor_cfg: Mapping[str, Any], c_th: float) -> DeterminationRule:
    raw = monitor_cfg.get("determination")
    if raw is None:
        return DeterminationRule((MonitorRule(UNKNOWN_ENTITY, 1.0), MonitorRule(INCONSISTENCY, c_th)), "any", True)
    rules = tuple(MonitorRule(r["monitor"], float(r["threshold"]), int(r.get("window", 1))) for r in raw.get("rules", ()))
    return DeterminationRule(rules, raw.get("combine", "any"), bool(raw.get("short_circuit", True)))


def _repair_cfg(raw: Mapping[str, Any], c_th: float, focused: bool) -> RepairSearchConfig:
    return RepairSearchConfig(C_th=c_th, lam=raw.get("lam"), node_budget=int(raw.get("node_budget", 10000)),
                              max_repair_length=int(raw.get("max_repair_length", 20)),
                              focused=bool(raw.get("focused", focused)))


def _space(raw: Mapping[str, Any], default: RepairSpace) -> RepairSpace:
    return RepairSpace.from_config(raw["space"]) if "space" in raw else default


def cartpole_kit(monitors: Mapping[str, Any] | None = None, repair: Mapping[str, Any] | None = None,
                 planner: Mapping[str, Any] | None = None) -> DomainKit:
    monitors, repair = monitors or {}, repair or {}
    p = _merge({"node_budget": 200, "horizon": 40, "weight": 2.0, "execute_steps": 20}, planner)
    horizon = int(p["horizon"])
    cfg = PlannerConfig(node_budget=int(p["node_budget"]), heuristic="balance", horizon=horizon,
                        state_quantization=None, weight=float(p["weight"]), allow_wait=True)
    incons = _incons(monitors, DistanceSpec.of(*POSE, weights=[POSE_WEIGHT] * 4), 0.9, 0.009)

    balance = TaskDef("balance", goal=Condition((_ge("elapsed_steps", CARTPOLE_STEPS), Atom("total_failure", (), False))))

    def window_goal(task: TaskDef, state) -> Condition:
        target = min(state["elapsed_steps"] + horizon, CARTPOLE_STEPS)
        return Condition((_ge("elapsed_steps", target), Atom("total_failure", (), False)))

    def elaborate(values: dict, agent) -> None:
        values[("step_time",)] = values.get(("elapsed_time",), 0.0)

    return DomainKit(
        name="cartpole",
        model=cartpole_model(),
        tasks=(balance,),
        rules=TaskRules(),
        background=BackgroundFacts({"ready": True, "accel_time": -1.0, "cart_x_ddot": 0.0, "theta_x_ddot": 0.0,
                                    "cart_y_ddot": 0.0, "theta_y_ddot": 0.0}),
        planner=cfg,
        incons=incons,
        repair_space=_space(repair, CARTPOLE_REPAIR_SPACE),
        repair_cfg=_repair_cfg(repair, incons.C_th, True),
        determination=_determination(monitors, incons.C_th),
        inventory=frozenset({"cart", "pole"}),
        execute_steps=int(p["execute_steps"]),
        planning_goal=window_goal,
        elaborate=elaborate,
        to_env_action=lambda label: label or "none",
        success=lambda obs, env: not obs["total_failure"] and obs["elapsed_steps"] >= env.max_steps,
        normalized=lambda total: total / CARTPOLE_STEPS,
    )


def crafting_kit(monitors: Mapping[str, Any] | None = None, repair: Mapping[str, Any] | None = None,
                 planner: Mapping[str, Any] | None = None) -> DomainKit:
    monitors, repair = monitors or {}, repair or {}
    p = _merge({"node_budget": 20000, "weight": 1.0}, planner)
    cfg = PlannerConfig(node_budget=int(p["node_budget"]), heuristic="crafting", state_quantization=1e-3,
                        weight=float(p["weight"]), allow_wait=False)
    incons = _incons(monitors, DistanceSpec.of(*craft_env.INVENTORY), 0.9, 2.0)
    novel = Condition((Atom("novelty_detected", ()),))
    moves = tuple(craft_env.MOVES)
    tasks = (
        TaskDef("craft_pogo", goal=Condition((_ge("pogosticks", 1),))),
        TaskDef("interact_traders", goal=Condition((Atom("traded", ()),)), actions=moves + ("trade",)),
        TaskDef("explore", novel, Condition((Atom("explored", ()),)), ("scan_area",)),
        TaskDef("open_safe", novel, Condition((Atom("safe_open", ()),)), moves + ("open_safe",)),
        TaskDef("mine_novel", novel, Condition((Atom("novel_mined", ()),)), moves + ("mine_unknown",)),
    )
    rules = TaskRules((
        TaskRule(("explore", "open_safe", "mine_novel"), after="failure"),
        TaskRule(("craft_pogo", "interact_traders")),
    ))

    def elaborate(values: dict, agent) -> None:
        values[("novelty_detected",)] = agent.novelty_detected

    nominal = craft_env.CraftParams()
    return DomainKit(
        name="crafting",
        model=crafting_model(),
        tasks=tasks,
        rules=rules,
        background=BackgroundFacts(),
        planner=cfg,
        incons=incons,
        repair_space=_space(repair, CRAFTING_REPAIR_SPACE),
        repair_cfg=_repair_cfg(repair, incons.C_th, True),
        determination=_determination(monitors, incons.C_th),
        inventory=frozenset(craft_env.CraftingEnv.base_entities),
        elaborate=elaborate,
        success=lambda obs, env: obs["pogosticks"] >= 1,
        normalized=lambda total: total / nominal.goal_reward,
        reward_features=craft_env.reward_features,
        normalize_step_reward=lambda r: craft_env.normalize_reward(r, nominal),
    )


KITS = {"cartpole": cartpole_kit, "crafting": crafting_kit}


def make_kit(name: str, **kwargs) -> DomainKit:
    try:
        return KITS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; known: {sorted(KITS)}") from None
