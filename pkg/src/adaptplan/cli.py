"""Command line entry point: ``adaptplan run | validate | repair``.

Exit codes: 0 success, 1 configuration or input error, 2 aborted trials
(``run``) or an invalid plan (``validate``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import AGENTS, ConfigError, load_config, run_experiment
from .ir import DistanceSpec, ModelError, Plan, ground
from .monitors import InconsistencyConfig
from .pddl import ParseError, load_domain, load_problem
from .repair import RepairSearchConfig, RepairSpace, repair_search
from .simulator import SimConfig, SimulationError, load_trajectory, validate

OK, CONFIG_ERROR, FAILED = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adaptplan", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--env", dest="environment")
    run.add_argument("--novelty")
    run.add_argument("--episodes", type=int)
    run.add_argument("--novelty-episode", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--agent", choices=AGENTS)
    run.add_argument("--seed", type=int)
    run.add_argument("--jobs", type=int)
    run.add_argument("--out")

    val = sub.add_parser("validate", help="simulate a plan and check that it reaches the goal")
    val.add_argument("--domain", required=True)
    val.add_argument("--problem", required=True)
    val.add_argument("--plan", required=True)
    val.add_argument("--delta-t", type=float, default=0.02)

    rep = sub.add_parser("repair", help="search for a model repair from a logged plan and trajectory")
    rep.add_argument("--domain", required=True)
    rep.add_argument("--problem", required=True)
    rep.add_argument("--plan", required=True)
    rep.add_argument("--trajectory", required=True)
    rep.add_argument("--space", required=True, help="JSON file with the repair space and search settings")
    return ap


def _load_model(domain: str, problem: str):
    d = load_domain(domain)
    return ground(d, load_problem(problem, d))


def cmd_run(args) -> int:
    cfg = load_config(args.config, environment=args.environment, novelty=args.novelty, episodes=args.episodes,
                      novelty_episode=args.novelty_episode, trials=args.trials, agent=args.agent, seed=args.seed,
                      jobs=args.jobs, out=args.out)
    summary = run_experiment(cfg)
    print("episode  mean_reward  ci95     detections  repairs")
    for row in summary.rows():
        print(f"{row['episode']:>7}  {row['mean_reward']:>11.4f}  {row['ci95']:<7.4f}  {row['detections']:>10}  "
              f"{row['repairs']:>7}")
    for t in summary.trials:
        for ep, line in t.repairs:
            print(f"trial {t.trial} episode {ep}: {line}")
    if cfg.out:
        print(f"wrote {cfg.out}")
    if summary.incomplete:
        for i in summary.incomplete:
            print(f"trial {i} aborted: {summary.trials[i].aborted}", file=sys.stderr)
        return FAILED
    return OK


def cmd_validate(args) -> int:
    model = _load_model(args.domain, args.problem)
    plan = Plan.from_text(Path(args.plan).read_text(encoding="utf-8"))
    try:
        result = validate(model, model.s0, plan, model.goal, SimConfig(delta_t=args.delta_t))
    except SimulationError as exc:
        print(f"plan invalid: {exc}")
        return FAILED
    if result.reaches_goal:
        print(f"plan valid: goal reached at t={result.trajectory.final.time:.6g}")
        return OK
    print("plan executes but does not reach the goal")
    return FAILED


def repair_settings(raw: dict) -> tuple[RepairSpace, RepairSearchConfig, InconsistencyConfig]:
    if "space" not in raw:
        raise ConfigError("repair config needs a 'space' list")
    space = RepairSpace.from_config(raw["space"])
    c_th = float(raw.get("C_th", 0.009))
    search = RepairSearchConfig(C_th=c_th, lam=raw.get("lam"), node_budget=int(raw.get("node_budget", 10000)),
                                max_repair_length=int(raw.get("max_repair_length", 20)),
                                focused=bool(raw.get("focused", False)))
    dist = raw.get("distance")
    distance = None if dist is None else DistanceSpec.of(*dist["fluents"], weights=dist.get("weights"))
    incons = InconsistencyConfig(gamma=float(raw.get("gamma", 0.9)), C_th=c_th, distance=distance,
                                 sim=SimConfig(delta_t=float(raw.get("delta_t", 0.02))))
    return space, search, incons


def cmd_repair(args) -> int:
    model = _load_model(args.domain, args.problem)
    plan = Plan.from_text(Path(args.plan).read_text(encoding="utf-8"))
    try:
        raw = json.loads(Path(args.space).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot read {args.space}: {exc}") from None
    space, search, incons = repair_settings(raw)
    with open(args.trajectory, encoding="utf-8") as fh:
        tau = load_trajectory(fh, model)
    result = repair_search(space, model, plan, tau, search, incons)
    print(f"initial consistency: {result.C_initial:.8g}")
    print(result.log_line(space))
    print(f"expanded {result.nodes_expanded}, generated {result.nodes_generated}, stopped: {result.halted}")
    return OK


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "repair": cmd_repair}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParseError, ModelError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
