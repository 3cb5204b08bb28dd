from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptplan.agent import Agent, executed_plan
from adaptplan.domains import CARTPOLE_REPAIR_SPACE, CRAFTING_REPAIR_SPACE, cartpole_kit, crafting_kit
from adaptplan.envs import CartPoleEnv, CraftingEnv
from adaptplan.ir import ModelError
from adaptplan.repair import (
    MMO,
    Repair,
    RepairSearchConfig,
    RepairSpace,
    do_repair,
    focused_repair_search,
    repair_log_line,
    repair_search,
    undo_repair,
)

from oracles import drift_model


def stale_episode(kit, env, seed):
    """Play one episode with the nominal model; returns (executed plan, observed trajectory)."""
    record = Agent(kit, adaptive=False).run_episode(env, env.reset(seed), 1)
    return executed_plan(record.trajectory.actions, kit.planner.sim.delta_t), record.trajectory


def test_empty_repair_leaves_model_alone(cartpole):
    assert do_repair(cartpole, Repair()) is cartpole
    assert undo_repair(cartpole, Repair()) is cartpole


def test_repeated_mmo_accumulates():
    model = drift_model(3, [0.0] * 3, [1.0, 1.0, 1.0])
    phi3 = MMO("f2", 0.2)
    repaired = do_repair(model, Repair((phi3, phi3, phi3)))
    assert repaired.s0["f2"] == pytest.approx(1.6, abs=1e-12)
    assert repaired.s0["f0"] == 1.0


mmo_lists = st.lists(st.tuples(st.sampled_from(["f0", "f1", "f2"]), st.sampled_from([0.1, 0.5, 1.0, 2.0]),
                               st.booleans()), min_size=5, max_size=5)


@settings(max_examples=60, deadline=None)
@given(mmo_lists)
def test_do_then_undo_is_bit_identical(spec):
    model = drift_model(3, [0.0] * 3, [0.3, -1.7, 12.5])
    repair = Repair(tuple(MMO(f, d if up else -d) for f, d, up in spec))
    restored = undo_repair(do_repair(model, repair), repair)
    assert restored.s0.values == model.s0.values
    assert restored.problem.init == model.problem.init


@settings(max_examples=60, deadline=None)
@given(mmo_lists, st.randoms())
def test_repair_identity_ignores_order(spec, rnd):
    mmos = [MMO(f, d if up else -d) for f, d, up in spec]
    shuffled = list(mmos)
    rnd.shuffle(shuffled)
    assert Repair(tuple(mmos)).key() == Repair(tuple(shuffled)).key()


def test_cancelling_mmos_form_the_empty_repair():
    repair = Repair((MMO("m_cart", 1.0), MMO("m_cart", -1.0)))
    assert repair.key() == Repair().key()
    assert repair.net_delta() == {}


def test_mmo_and_space_validation(crafting):
    with pytest.raises(ValueError):
        MMO("m_cart", 0.0)
    with pytest.raises(ValueError):
        RepairSpace((("m_cart", 1.0, -1.0),))
    with pytest.raises(ValueError):
        RepairSpace((("m_cart", 1.0, 1.0), ("m_cart", 1.0, 2.0)))
    with pytest.raises(ModelError):
        RepairSpace((("broken t1", 0.0, 1.0),)).check(crafting)
    assert len(CARTPOLE_REPAIR_SPACE.mmos()) == 28


def test_space_from_config_rows():
    space = RepairSpace.from_config([{"fluent": "break_log", "nominal": 2, "delta": 1}, ["collect_saplings", 1, 1]])
    assert space.fluents == ("break_log", "collect_saplings")


def test_log_line_lists_every_repairable_fluent():
    line = repair_log_line(Repair((MMO("m_cart", 1.0),) * 9), 0.0067561, CARTPOLE_REPAIR_SPACE)
    assert line.startswith("repair:[l_pole: 0, m_pole: 0, m_cart: 9.0, force_mag: 0")
    assert line.endswith("; resulting consistency: 0.0067561")


def test_consistent_model_needs_no_repair(crafting):
    kit = crafting_kit()
    plan, tau = stale_episode(kit, CraftingEnv(), 0)
    result = repair_search(kit.repair_space, crafting, plan, tau, RepairSearchConfig(C_th=2.0), kit.incons)
    assert result.best == Repair() and result.nodes_expanded == 0 and result.halted == "consistent"


@pytest.fixture(scope="module")
def heavy_cart_episode():
    kit = cartpole_kit()
    env = CartPoleEnv()
    env.set_params({"m_cart": 10.0})
    return kit, stale_episode(kit, env, 0)


def test_heavy_cart_is_repaired_by_nine(heavy_cart_episode):
    kit, (plan, tau) = heavy_cart_episode
    result = focused_repair_search(kit.repair_space, kit.model, plan, tau, kit.repair_cfg, kit.incons)
    assert result.C_initial > 0.009
    assert result.best.net_delta() == {"m_cart": 9.0}
    assert result.C_best < 0.009


def test_focused_search_expands_fewer_nodes(heavy_cart_episode):
    kit, (plan, tau) = heavy_cart_episode
    cfg = RepairSearchConfig(C_th=0.009)
    general = repair_search(kit.repair_space, kit.model, plan, tau, cfg, kit.incons)
    focused = focused_repair_search(kit.repair_space, kit.model, plan, tau, cfg, kit.incons)
    assert focused.nodes_expanded <= general.nodes_expanded
    assert focused.nodes_generated < general.nodes_generated
    assert abs(focused.C_best - general.C_best) <= 1e-6


def test_node_budget_stops_the_search(heavy_cart_episode):
    kit, (plan, tau) = heavy_cart_episode
    result = repair_search(kit.repair_space, kit.model, plan, tau, RepairSearchConfig(node_budget=2), kit.incons)
    assert result.halted == "budget" and result.nodes_expanded == 2
    assert result.C_best <= result.C_initial


def test_richer_trees_raise_break_log(crafting):
    kit = crafting_kit()
    env = CraftingEnv()
    env.set_params({"break_log": 10})
    plan, tau = stale_episode(kit, env, 0)
    result = focused_repair_search(kit.repair_space, crafting, plan, tau, kit.repair_cfg, kit.incons)
    assert result.C_initial > 2.0
    assert result.best.net_delta().get("break_log", 0) >= 1
    assert result.C_best < 2.0


def two_fluent_episode():
    kit = crafting_kit()
    env = CraftingEnv()
    env.set_params({"break_log": 4, "collect_saplings": 3})
    return kit, stale_episode(kit, env, 0)


def test_focused_search_cannot_fix_two_fluents():
    kit, (plan, tau) = two_fluent_episode()
    cfg = RepairSearchConfig(C_th=kit.incons.C_th, node_budget=2000)
    general = repair_search(CRAFTING_REPAIR_SPACE, kit.model, plan, tau, cfg, kit.incons)
    focused = focused_repair_search(CRAFTING_REPAIR_SPACE, kit.model, plan, tau, cfg, kit.incons)
    assert general.C_best <= focused.C_best
    assert len(focused.best.net_delta()) <= 1
