"""Trials of N episodes with a novelty injected at episode k, and their aggregation.

Outputs of ``run_experiment`` (when an output directory is set):

* ``episodes.ndjson``: one JSON object per episode, trials in order
* ``summary.csv``: episode, mean_reward, ci95, detections, repairs
* ``config.json``: the resolved configuration
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .agent import Agent, DomainKit, EpisodeRecord
from .domains import KITS, make_kit
from .envs import make_env
from .envs.novelty import NoveltySpec, inject_novelty
from .monitors import RewardEstimator, fit_estimator

AGENTS = ("planning-static", "planning-adaptive")

# Named novelties per environment; "none" keeps the nominal world throughout.
NOVELTIES: dict[str, dict[str, dict]] = {
    "cartpole": {
        "none": {},
        "mass_cart_x10": {"multipliers": {"m_cart": 10.0}},
        "gravity_neg40": {"overrides": {"gravity": -40.0}},
        "pole_length_x2": {"multipliers": {"l_pole": 2.0}},
        "push_force_r_half": {"multipliers": {"push_force_r": 0.5}},
    },
    "crafting": {
        "none": {},
        "log_yield_x5": {"multipliers": {"break_log": 5}},
        "reward_scale_x1.5": {"overrides": {"reward_scale": 1.5}},
        "unknown_entity": {"new_entities": ["novel_block"]},
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    environment: str = "cartpole"
    novelty: NoveltySpec | None = None
    episodes: int = 50
    novelty_episode: int = 8
    trials: int = 10
    agent: str = "planning-adaptive"
    seed: int = 0
    jobs: int = 1
    monitors: Mapping[str, Any] = field(default_factory=dict)
    repair: Mapping[str, Any] = field(default_factory=dict)
    planner: Mapping[str, Any] = field(default_factory=dict)
    env: Mapping[str, Any] = field(default_factory=dict)
    reward_estimator: Mapping[str, Any] | None = None  # {"fit_episodes": n, "ridge": r}
    out: str | None = None

    def __post_init__(self) -> None:
        if self.environment not in KITS:
            raise ConfigError(f"unknown environment {self.environment!r}; known: {sorted(KITS)}")
        if self.agent not in AGENTS:
            raise ConfigError(f"unknown agent variant {self.agent!r}; known: {list(AGENTS)}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 1 <= self.novelty_episode <= self.episodes:
            raise ConfigError("novelty episode must satisfy 1 <= k <= N")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.novelty is not None and self.novelty.episode != self.novelty_episode:
            object.__setattr__(self, "novelty", replace(self.novelty, episode=self.novelty_episode))

    @property
    def adaptive(self) -> bool:
        return self.agent == "planning-adaptive"

    def trial_seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.trials)]

    def as_dict(self) -> dict:
        return {
            "environment": self.environment,
            "novelty": None if self.novelty is None else self.novelty.as_dict(),
            "episodes": self.episodes,
            "novelty_episode": self.novelty_episode,
            "trials": self.trials,
            "agent": self.agent,
            "seed": self.seed,
            "jobs": self.jobs,
            "monitors": dict(self.monitors),
            "repair": dict(self.repair),
            "planner": dict(self.planner),
            "env": dict(self.env),
            "reward_estimator": None if self.reward_estimator is None else dict(self.reward_estimator),
            "out": self.out,
        }


def resolve_novelty(environment: str, novelty: Any, episode: int) -> NoveltySpec | None:
    """Accept a registered novelty name, an inline mapping, or None."""
    if novelty is None:
        return None
    if isinstance(novelty, str):
        table = NOVELTIES.get(environment, {})
        if novelty not in table:
            raise ConfigError(f"unknown novelty {novelty!r} for {environment}; known: {sorted(table)}")
        if novelty == "none":
            return None
        return NoveltySpec.from_config({"name": novelty, **table[novelty]}, episode)
    if isinstance(novelty, Mapping):
        return NoveltySpec.from_config(novelty, episode)
    raise ConfigError(f"novelty must be a name or a mapping, not {type(novelty).__name__}")


def config_from_dict(raw: Mapping[str, Any], **overrides) -> ExperimentConfig:
    """Build a config from parsed JSON, with non-None keyword overrides taking precedence."""
    merged = dict(raw)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    known = set(ExperimentConfig.__dataclass_fields__)
    extra = sorted(set(merged) - known)
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(extra)}")
    env_name = merged.get("environment", "cartpole")
    k = int(merged.get("novelty_episode", 8))
    novelty = merged.get("novelty")
    if not isinstance(novelty, NoveltySpec):
        try:
            novelty = resolve_novelty(env_name, novelty, k)
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"bad novelty: {exc}") from None
    merged["novelty"] = novelty
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    return config_from_dict(raw, **overrides)


# ---------------------------------------------------------------------------
# Trials


def episode_seed(trial_seed: int, episode: int) -> int:
    return trial_seed * 100_003 + episode


def reward_dataset(kit: DomainKit, records) -> list[tuple[list[float], list[float], float]]:
    """(state features, action features, normalised reward) for every executed step."""
    data = []
    for rec in records:
        for (s, a, _), r in zip(rec.trajectory.triples, rec.rewards):
            sf, af = kit.reward_features(s.as_dict(), a)
            data.append((sf, af, kit.normalize_step_reward(r)))
    return data


def fit_nominal_estimator(cfg: ExperimentConfig, kit: DomainKit, trial_seed: int) -> RewardEstimator:
    """Fit the reward estimator on episodes played in the nominal world."""
    if kit.reward_features is None:
        raise ConfigError(f"{cfg.environment} has no reward features for a reward estimator")
    opts = cfg.reward_estimator or {}
    env = make_env(cfg.environment, **cfg.env)
    agent = Agent(kit, adaptive=False)
    records = []
    for i in range(int(opts.get("fit_episodes", 30))):
        obs = env.reset(episode_seed(trial_seed, -1 - i))
        records.append(agent.run_episode(env, obs, i + 1))
    return fit_estimator(reward_dataset(kit, records), float(opts.get("ridge", 1e-8)))


@dataclass
class TrialRecord:
    trial: int
    seed: int
    episodes: list[EpisodeRecord]
    aborted: str | None = None

    @property
    def detection_episode(self) -> int | None:
        return next((e.episode for e in self.episodes if e.novelty_detected), None)

    @property
    def repairs(self) -> list[tuple[int, str]]:
        return [(e.episode, e.repair) for e in self.episodes if e.repair]

    @property
    def rewards(self) -> list[float]:
        return [e.normalized_reward for e in self.episodes]


def run_trial(cfg: ExperimentConfig, trial_seed: int, trial: int = 0) -> TrialRecord:
    """Fresh environment and nominal agent model, then N episodes with the novelty from episode k."""
    kit = make_kit(cfg.environment, monitors=cfg.monitors, repair=cfg.repair, planner=cfg.planner)
    env = make_env(cfg.environment, **cfg.env)
    record = TrialRecord(trial, trial_seed, [])
    try:
        estimator = fit_nominal_estimator(cfg, kit, trial_seed) if cfg.reward_estimator is not None else None
        agent = Agent(kit, adaptive=cfg.adaptive, estimator=estimator)
        for ep in range(1, cfg.episodes + 1):
            inject_novelty(env, cfg.novelty, ep)
            obs = env.reset(episode_seed(trial_seed, ep))
            record.episodes.append(agent.run_episode(env, obs, ep))
    except Exception as exc:  # abort this trial, keep what was recorded
        record.aborted = f"{type(exc).__name__}: {exc}"
    return record


def _trial_job(args) -> TrialRecord:
    cfg, seed, index = args
    return run_trial(cfg, seed, index)


# ---------------------------------------------------------------------------
# Aggregation


@dataclass
class ExperimentSummary:
    episodes: list[int]
    mean_reward: list[float]
    ci95: list[float]
    detections: list[int]  # trials whose first detection is at this episode
    repairs: list[int]  # repairs installed at this episode, over all trials
    detection_episode: list[int | None]  # per trial
    incomplete: list[int]  # indices of aborted trials
    trials: list[TrialRecord] = field(repr=False, default_factory=list)

    def rows(self) -> list[dict]:
        return [{"episode": e, "mean_reward": m, "ci95": c, "detections": d, "repairs": r}
                for e, m, c, d, r in zip(self.episodes, self.mean_reward, self.ci95, self.detections, self.repairs)]


def ci_halfwidth(values: list[float]) -> float:
    """1.96 standard errors (normal approximation); zero for a single value."""
    if len(values) < 2:
        return 0.0
    return 1.96 * statistics.stdev(values) / math.sqrt(len(values))


def summarize(trials: list[TrialRecord], n_episodes: int) -> ExperimentSummary:
    means, cis, dets, reps = [], [], [], []
    firsts = [t.detection_episode for t in trials]
    for ep in range(1, n_episodes + 1):
        vals = [t.episodes[ep - 1].normalized_reward for t in trials if len(t.episodes) >= ep]
        means.append(statistics.fmean(vals) if vals else math.nan)
        cis.append(ci_halfwidth(vals) if vals else math.nan)
        dets.append(sum(1 for f in firsts if f == ep))
        reps.append(sum(1 for t in trials if len(t.episodes) >= ep and t.episodes[ep - 1].repair))
    incomplete = [i for i, t in enumerate(trials) if t.aborted is not None]
    return ExperimentSummary(list(range(1, n_episodes + 1)), means, cis, dets, reps, firsts, incomplete, trials)


def episode_lines(trials: list[TrialRecord]) -> list[str]:
    lines = []
    for t in trials:
        for e in t.episodes:
            lines.append(json.dumps({"trial": t.trial, "seed": t.seed, **e.to_json()}))
        if t.aborted is not None:
            lines.append(json.dumps({"trial": t.trial, "seed": t.seed, "aborted": t.aborted}))
    return lines


def write_outputs(summary: ExperimentSummary, cfg: ExperimentConfig, out: str | Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "episodes.ndjson").write_text("".join(line + "\n" for line in episode_lines(summary.trials)),
                                         encoding="utf-8")
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["episode", "mean_reward", "ci95", "detections", "repairs"])
        writer.writeheader()
        writer.writerows({k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
                         for row in summary.rows())
    (out / "config.json").write_text(json.dumps(cfg.as_dict(), indent=2) + "\n", encoding="utf-8")
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """Run all trials (in parallel when ``jobs`` > 1), aggregate, and write outputs if ``out`` is set."""
    jobs = [(cfg, seed, i) for i, seed in enumerate(cfg.trial_seeds())]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(jobs))) as pool:
            trials = list(pool.map(_trial_job, jobs))
    else:
        trials = [_trial_job(j) for j in jobs]
    summary = summarize(trials, cfg.episodes)
    if cfg.out:
        write_outputs(summary, cfg, cfg.out)
    return summary
