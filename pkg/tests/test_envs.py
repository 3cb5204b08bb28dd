from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptplan.agent import infer_state
from adaptplan.domains import cartpole_kit
from adaptplan.envs import CartPoleEnv, CraftingEnv, NoveltySpec, inject_novelty, make_env
from adaptplan.envs.cartpole import ACTIONS, CartPoleParams, CartPoleState, cartpole_step
from adaptplan.envs.crafting import normalize_reward
from adaptplan.simulator import step

from oracles import rk4


def test_upright_pole_stays_upright():
    env = CartPoleEnv(init_range=0.0)
    env.reset(0)
    total = 0.0
    while not env.terminal:
        obs, reward, _ = env.step("none")
        total += reward
        assert obs["theta_x"] == 0.0 and obs["theta_y"] == 0.0
    assert obs["elapsed_steps"] == 200
    assert total == 200.0 and env.normalized(total) == 1.0


def test_tilted_pole_falls_monotonically():
    s = CartPoleState(theta_x=0.05)
    p = CartPoleParams()
    angles = [s.theta_x]
    while not s.failed:
        s = cartpole_step(s, "none", p)
        angles.append(s.theta_x)
    assert all(b >= a for a, b in zip(angles, angles[1:]))
    assert angles[-1] >= 0.165


def test_euler_tracks_reference_integration():
    reference = rk4((0.0, 0.0, 0.05, 0.0), 0.5)
    s = CartPoleState(theta_x=0.05)
    for _ in range(25):
        s = cartpole_step(s, "none", CartPoleParams())
    assert abs(s.theta_x - reference[2]) < 0.1 * abs(reference[2] - 0.05)


def test_failing_step_pays_nothing():
    env = CartPoleEnv(init_range=0.0)
    env.reset(0)
    env.state.theta_x = 0.16
    env.state.theta_x_dot = 1.0
    _, reward, terminal = env.step("none")
    assert terminal and reward == 0.0


def test_unknown_cartpole_action():
    env = CartPoleEnv()
    env.reset(0)
    with pytest.raises(ValueError):
        env.step("jump")


def test_reset_is_seeded():
    a, b = CartPoleEnv(), CartPoleEnv()
    assert a.reset(11) == b.reset(11)
    assert a.reset(11) != a.reset(12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(ACTIONS), min_size=1, max_size=60), st.integers(0, 10_000))
def test_model_and_environment_agree(actions, seed):
    kit = cartpole_kit()
    env = CartPoleEnv()
    obs = env.reset(seed)
    state = infer_state(obs, kit.background, kit.model)
    for a in actions:
        if env.terminal:
            break
        obs, _, _ = env.step(a)
        state = step(kit.model, state, None if a == "none" else a)
        for name in ("cart_x", "cart_x_dot", "theta_x", "theta_x_dot", "cart_y", "cart_y_dot", "theta_y",
                     "theta_y_dot", "elapsed_steps"):
            assert abs(state[name] - obs[name]) < 1e-9
        assert state["total_failure"] == obs["total_failure"]


def _walk(env, moves):
    for m in moves:
        env.step(m)


def test_break_tree_yields_logs_for_a_cost():
    env = CraftingEnv()
    env.reset(0)
    _walk(env, ["move_north", "move_east"])
    obs, reward, _ = env.step("break_tree t1")
    assert obs["logs"] == 2 and reward == -4000.0


def test_richer_trees_yield_ten_logs():
    env = CraftingEnv()
    inject_novelty(env, NoveltySpec("logs", 1, multipliers={"break_log": 5}), 1)
    env.reset(0)
    _walk(env, ["move_north", "move_east"])
    obs, _, _ = env.step("break_tree t1")
    assert obs["logs"] == 10


def test_crafting_pays_the_goal_reward():
    env = CraftingEnv()
    env.reset(0)
    env.pos = [5, 5]
    env.inv.update(logs=6, saplings=1)
    obs, reward, terminal = env.step("craft_pogostick")
    assert terminal and reward == 128000.0 - 4000.0
    assert obs["pogosticks"] == 1 and obs["logs"] == 0


def test_inapplicable_action_is_a_logged_no_op():
    env = CraftingEnv()
    before = env.reset(0)
    obs, reward, terminal = env.step("craft_pogostick")
    assert obs == before and reward == -4000.0 and not terminal
    assert env.invalid_actions == ["craft_pogostick"]
    obs, _, _ = env.step("move_south")
    assert obs["pos_y"] == 0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(["move_north", "move_south", "move_east", "move_west", "break_tree t1",
                                 "break_tree t2", "collect_sapling t1", "collect_sapling t2",
                                 "craft_pogostick", "trade"]), min_size=1, max_size=60))
def test_crafting_score_accounting(actions):
    env = CraftingEnv()
    env.reset(0)
    total, count, crafted = 0.0, 0, False
    for a in actions:
        if env.terminal:
            break
        obs, reward, _ = env.step(a)
        total += reward
        count += 1
        crafted = crafted or obs["pogosticks"] >= 1
    assert total == 128000.0 * crafted - 4000.0 * count


def test_reward_normalisation():
    assert normalize_reward(-4000.0) == 0.0
    assert normalize_reward(124000.0) == 1.0


def test_novelty_boundary_and_values():
    env = CartPoleEnv()
    spec = NoveltySpec("mass", 8, multipliers={"mass_cart": 10.0})
    inject_novelty(env, spec, 7)
    assert env.params.m_cart == 1.0
    for episode in (8, 9, 30):
        inject_novelty(env, spec, episode)
        assert env.params.m_cart == 10.0
    inject_novelty(env, NoveltySpec("gravity", 1, overrides={"gravity": -40.0}), 1)
    assert env.params.gravity == -40.0 and env.params.m_cart == 1.0


def test_novelty_validation():
    with pytest.raises(ValueError):
        NoveltySpec("early", 0)
    with pytest.raises(KeyError):
        inject_novelty(CartPoleEnv(), NoveltySpec("x", 1, overrides={"friction": 1.0}), 1)
    with pytest.raises(ValueError):
        inject_novelty(CraftingEnv(), NoveltySpec("x", 1, overrides={"break_log": 2.5}), 1)


def test_new_entity_types_appear_in_observation():
    env = CraftingEnv()
    inject_novelty(env, NoveltySpec("block", 3, new_entities=("novel_block",)), 3)
    assert ("novel_block", 1.0) in env.entities()
    inject_novelty(env, NoveltySpec("block", 3, new_entities=("novel_block",)), 2)
    assert ("novel_block", 1.0) not in env.entities()


def test_make_env():
    assert isinstance(make_env("crafting"), CraftingEnv)
    with pytest.raises(ValueError):
        make_env("pinball")
