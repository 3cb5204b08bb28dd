"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

from __future__ import annotations

import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from adaptplan.agent import infer_state
from adaptplan.domains import cartpole_kit, crafting_kit, data_text
from adaptplan.envs import CartPoleEnv, CraftingEnv
from adaptplan.envs.cartpole import CartPoleParams, CartPoleState, cartpole_step
from adaptplan.harness import config_from_dict, fit_nominal_estimator, load_config, reward_dataset, run_experiment
from adaptplan.ir import DistanceSpec, Plan, State, Trajectory, fluent_distance
from adaptplan.monitors import (
    REWARD_DIVERGENCE,
    InconsistencyConfig,
    auc,
    discounted_mean,
    inconsistency_score,
)
from adaptplan.pddl import ParseError, parse_domain, parse_problem, print_domain, print_problem
from adaptplan.repair import RepairSearchConfig, focused_repair_search, repair_search
from adaptplan.simulator import step

from oracles import brute_force_inconsistency, drift_expected, drift_model, rk4
from test_pddl import MALFORMED_DOMAINS, MALFORMED_PROBLEMS, SMALL_DOMAIN
from test_repair import stale_episode

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def verdict(capsys):
    def report(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        assert ok, detail
    return report


# 1 ------------------------------------------------------------------------


def test_inconsistency_matches_brute_force(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for case in range(100):
        n_fluents = int(rng.integers(1, 7))
        length = 1 if case == 0 else int(rng.integers(1, 21))
        gamma = 0.999999 if case % 10 == 1 else float(rng.uniform(0.05, 0.99))
        rates = rng.uniform(-2, 2, n_fluents).tolist()
        weights = rng.uniform(0.1, 3.0, n_fluents).tolist()
        bumps = {int(i) for i in rng.integers(0, max(length - 1, 1), 3)} if length > 1 else set()
        init = rng.uniform(-1, 1, n_fluents).tolist()
        model = drift_model(n_fluents, rates, init)
        expected = drift_expected(init, rates, bumps, length - 1, 0.02)
        observed = [init] + [(np.asarray(e) + rng.normal(0, 0.5, n_fluents)).tolist() for e in expected[1:]]
        tau = Trajectory(tuple(State(model.table, tuple(row), 0.02 * i) for i, row in enumerate(observed)),
                         (None,) * (length - 1))
        plan = Plan.of(*[(b * 0.02, "bump") for b in sorted(bumps)])
        cfg = InconsistencyConfig(gamma=gamma, distance=DistanceSpec.of(*(f"f{i}" for i in range(n_fluents)),
                                                                         weights=weights))
        got = inconsistency_score(plan, model, tau, cfg)
        worst = max(worst, abs(got - brute_force_inconsistency(observed, expected, weights, gamma)))
    dists = rng.uniform(0, 4, 15).tolist()
    limit_gap = abs(discounted_mean(dists, 1.0) - brute_force_inconsistency([[d] for d in dists],
                                                                            [[0.0]] * 15, [1.0], 1.0))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and limit_gap <= 1e-12 and elapsed < 1.0
    verdict(1, "inconsistency oracle", ok, f"max |diff| {worst:.2e}, gamma=1 gap {limit_gap:.2e}, {elapsed:.2f}s")


# 2, 3, 10 ------------------------------------------------------------------


@pytest.fixture(scope="module")
def mass_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("mass")
    start = time.perf_counter()
    first = run_experiment(load_config(CONFIGS / "cartpole_mass.json", out=str(root / "first")))
    elapsed = time.perf_counter() - start
    second = run_experiment(load_config(CONFIGS / "cartpole_mass.json", out=str(root / "second")))
    static = run_experiment(load_config(CONFIGS / "cartpole_mass.json", agent="planning-static"))
    return root, first, second, static, elapsed


def test_heavy_cart_repair_is_recovered(verdict, mass_runs):
    _, first, _, _, elapsed = mass_runs
    deltas, finals = [], []
    for trial in first.trials:
        installed = [e for e in trial.episodes if e.repair]
        deltas.append(sum(e.repair_delta.get("m_cart", 0.0) for e in installed))
        finals.append(installed[-1].repair_consistency if installed else math.inf)
    exact = sum(1 for d in deltas if d == 9.0)
    ok = (not first.incomplete and all(abs(d - 9.0) <= 1.0 for d in deltas) and exact >= 8
          and all(c < 0.009 for c in finals) and elapsed < 600)
    verdict(2, "heavy cart repair", ok,
            f"m_cart deltas {deltas}, exact {exact}/10, max final C {max(finals):.3g}, {elapsed:.0f}s")


def test_adaptation_curve(verdict, mass_runs):
    _, first, _, static, _ = mass_runs
    k = 8
    mean = first.mean_reward
    pre = min(mean[:k - 1])
    dip = min(mean[k - 1:k + 2])
    detected = min(d for d in first.detection_episode if d is not None)
    recovered = max(mean[detected:detected + 10])
    static_tail = statistics.fmean(static.mean_reward[k + 4:])
    ok = pre >= 0.95 and dip <= 0.6 and recovered >= 0.9 and static_tail <= 0.6
    verdict(3, "adaptation curve", ok, f"pre-novelty min {pre:.3f}, dip {dip:.3f}, detected at {detected}, "
                                       f"recovered {recovered:.3f}, static tail mean {static_tail:.3f}")


def test_repeat_runs_are_byte_identical(verdict, mass_runs):
    root = mass_runs[0]
    a = (root / "first" / "episodes.ndjson").read_bytes()
    b = (root / "second" / "episodes.ndjson").read_bytes()
    verdict(10, "determinism", a == b, f"{len(a)} bytes, identical={a == b}")


# 4 ------------------------------------------------------------------------


def test_focused_against_general_search(verdict):
    start = time.perf_counter()
    kit = cartpole_kit()
    env = CartPoleEnv()
    env.set_params({"m_cart": 10.0})
    plan, tau = stale_episode(kit, env, 0)
    cfg = RepairSearchConfig(C_th=kit.incons.C_th)
    general = repair_search(kit.repair_space, kit.model, plan, tau, cfg, kit.incons)
    focused = focused_repair_search(kit.repair_space, kit.model, plan, tau, cfg, kit.incons)
    single_ok = (focused.nodes_expanded <= general.nodes_expanded
                 and abs(focused.C_best - general.C_best) <= 1e-6)

    craft = crafting_kit()
    craft_env = CraftingEnv()
    craft_env.set_params({"break_log": 4, "collect_saplings": 3})
    plan2, tau2 = stale_episode(craft, craft_env, 0)
    cfg2 = RepairSearchConfig(C_th=craft.incons.C_th, node_budget=2000)
    general2 = repair_search(craft.repair_space, craft.model, plan2, tau2, cfg2, craft.incons)
    focused2 = focused_repair_search(craft.repair_space, craft.model, plan2, tau2, cfg2, craft.incons)
    elapsed = time.perf_counter() - start
    ok = single_ok and general2.C_best <= focused2.C_best and elapsed < 120
    verdict(4, "focused vs general", ok,
            f"single fluent: expanded {focused.nodes_expanded} vs {general.nodes_expanded}, "
            f"C {focused.C_best:.3g} vs {general.C_best:.3g}; two fluents: general C {general2.C_best:.3g} "
            f"<= focused C {focused2.C_best:.3g}; {elapsed:.1f}s")


# 5 ------------------------------------------------------------------------


def test_richer_trees_are_exploited(verdict):
    start = time.perf_counter()
    base = {"environment": "crafting", "episodes": 5, "novelty_episode": 1, "trials": 3,
            "monitors": {"C_th": 2.0}}
    nominal = run_experiment(config_from_dict({**base, "novelty": "none"}))
    novel = run_experiment(config_from_dict({**base, "novelty": "log_yield_x5"}))
    nominal_mean = statistics.fmean(e.total_reward for t in nominal.trials for e in t.episodes)
    after, raised = [], []
    for t in novel.trials:
        repaired = [e.episode for e in t.episodes if e.repair]
        raised.append(bool(repaired) and t.episodes[repaired[0] - 1].repair_delta.get("break_log", 0) > 0)
        if repaired:
            after += [e.total_reward for e in t.episodes if e.episode > repaired[0]]
    post_mean = statistics.fmean(after) if after else -math.inf
    gain = post_mean / nominal_mean - 1.0
    elapsed = time.perf_counter() - start
    ok = gain >= 0.20 and all(raised) and elapsed < 120
    verdict(5, "crafting opportunity", ok, f"nominal mean {nominal_mean:.0f}, post-repair mean {post_mean:.0f} "
                                           f"({gain:+.1%}), break_log raised in {sum(raised)}/3, {elapsed:.1f}s")


# 6 ------------------------------------------------------------------------


def test_reward_divergence_separates_episodes(verdict):
    cfg = config_from_dict({"environment": "crafting", "novelty": "reward_scale_x1.5", "episodes": 40,
                            "novelty_episode": 21, "trials": 1, "reward_estimator": {"fit_episodes": 30}})
    kit = crafting_kit()
    estimator = fit_nominal_estimator(cfg, kit, cfg.seed)
    held_out_cfg = config_from_dict({"environment": "crafting", "novelty": "none", "episodes": 5,
                                     "novelty_episode": 1, "trials": 1, "seed": 99})
    held_out = reward_dataset(kit, run_experiment(held_out_cfg).trials[0].episodes)
    rmse = estimator.rmse(held_out)
    trial = run_experiment(cfg).trials[0]
    scores = [e.signal(REWARD_DIVERGENCE).score for e in trial.episodes]
    area = auc(scores[:20], scores[20:])
    ok = estimator.n_samples >= 500 and rmse < 0.05 and area >= 0.75
    verdict(6, "reward divergence", ok, f"{estimator.n_samples} training tuples, held-out RMSE {rmse:.2e}, "
                                        f"AUC {area:.3f}")


# 7 ------------------------------------------------------------------------


def test_unknown_entity_determination(verdict):
    base = {"environment": "crafting", "novelty": "unknown_entity", "episodes": 7, "novelty_episode": 3,
            "trials": 1}
    short = run_experiment(config_from_dict(base)).detection_episode[0]
    window = {"determination": {"rules": [{"monitor": "unknown_entity", "threshold": 1.0, "window": 3}],
                                "short_circuit": False}}
    windowed = run_experiment(config_from_dict({**base, "monitors": window})).detection_episode[0]
    ok = short == 3 and windowed == 5
    verdict(7, "unknown entity", ok, f"short-circuit fired at {short} (k=3), three-in-a-row fired at {windowed}")


# 8 ------------------------------------------------------------------------


def _theta_after_one_second(dt: float) -> float:
    s = CartPoleState(theta_x=0.05)
    for _ in range(int(round(1.0 / dt))):
        s = cartpole_step(s, "none", CartPoleParams(), dt)
    return s.theta_x


def test_simulator_fidelity(verdict):
    reference = abs(rk4((0.0, 0.0, 0.05, 0.0), 1.0)[2])
    coarse = abs(abs(_theta_after_one_second(0.02)) - reference)
    fine = abs(abs(_theta_after_one_second(0.01)) - reference)
    kit = cartpole_kit()
    env = CartPoleEnv()
    obs = env.reset(3)
    state = infer_state(obs, kit.background, kit.model)
    full = DistanceSpec.of("cart_x", "cart_x_dot", "theta_x", "theta_x_dot", "cart_y", "cart_y_dot", "theta_y",
                           "theta_y_dot")
    worst = 0.0
    pushes = ["push_right", "push_left", "none", "push_fwd", "push_back"]
    for i in range(200):
        if env.terminal:
            break
        action = pushes[i % len(pushes)]
        obs, _, _ = env.step(action)
        state = step(kit.model, state, None if action == "none" else action)
        worst = max(worst, fluent_distance(state, infer_state(obs, kit.background, kit.model), full))
    ratio = fine / coarse
    ok = ratio <= 0.55 and worst < 1e-9
    verdict(8, "simulator fidelity", ok, f"error {coarse:.4f} at dt=0.02, {fine:.4f} at dt=0.01 "
                                         f"(ratio {ratio:.3f}), model vs env max distance {worst:.1e}")


# 9 ------------------------------------------------------------------------


def test_parser_round_trip_and_errors(verdict):
    trips = 0
    for dom_file, prob_file in (("cartpole_domain.pddl", "cartpole_problem.pddl"),
                                ("crafting_domain.pddl", "crafting_problem.pddl")):
        domain = parse_domain(data_text(dom_file))
        problem = parse_problem(data_text(prob_file), domain)
        trips += parse_domain(print_domain(domain)) == domain
        trips += parse_problem(print_problem(problem), domain) == problem
    movement = any(h.name == "movement" for h in parse_domain(data_text("cartpole_domain.pddl")).happenings)
    small = parse_domain(SMALL_DOMAIN)
    spans = 0
    cases = [(text, lambda t: parse_domain(t, "broken.pddl")) for text in MALFORMED_DOMAINS.values()]
    cases += [(text, lambda t: parse_problem(t, small, "broken.pddl")) for text in MALFORMED_PROBLEMS.values()]
    for text, parse in cases:
        try:
            parse(text)
        except ParseError as exc:
            lines = text.splitlines() or [""]
            span = exc.span
            spans += (span.file == "broken.pddl" and 1 <= span.line <= len(lines)
                      and 1 <= span.column <= max(len(lines[span.line - 1]), 1))
    ok = trips == 4 and movement and len(cases) >= 20 and spans == len(cases)
    verdict(9, "parser round trip", ok, f"{trips}/4 fixtures round-trip, movement process present={movement}, "
                                        f"{spans}/{len(cases)} malformed inputs with valid spans")
