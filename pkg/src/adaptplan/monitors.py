"""Novelty monitors and the determination rule that aggregates them."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .ir import DistanceSpec, GroundedModel, ModelError, Plan, State, Trajectory, values_distance
from .simulator import PreconditionError, SimConfig, SimulationError, simulate_plan

UNKNOWN_ENTITY = "unknown_entity"
INCONSISTENCY = "inconsistency"
REWARD_DIVERGENCE = "reward_divergence"


@dataclass(frozen=True)
class MonitorSignal:
    monitor: str
    episode: int
    score: float
    fired: bool

    def as_dict(self) -> dict:
        return {"monitor": self.monitor, "episode": self.episode, "score": self.score, "fired": self.fired}


# ---------------------------------------------------------------------------
# Unknown entities


def unknown_entity_check(observed: Sequence[tuple[str, float]], inventory, threshold_c: float = 0.65,
                         episode: int = 0) -> MonitorSignal:
    """Fires on a label outside ``inventory`` or a recognition confidence below ``threshold_c``."""
    known = set(inventory)
    fired = False
    for label, confidence in observed:
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"confidence {confidence} outside [0, 1]")
        if label not in known or confidence < threshold_c:
            fired = True
    return MonitorSignal(UNKNOWN_ENTITY, episode, 1.0 if fired else 0.0, fired)


# ---------------------------------------------------------------------------
# Plan/trajectory inconsistency


@dataclass(frozen=True)
class InconsistencyConfig:
    gamma: float = 0.9
    C_th: float = 0.009
    distance: DistanceSpec | None = None  # None: every numeric fluent, unit weights
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.C_th < 0:
            raise ValueError("C_th must be nonnegative")

    def positions(self, model: GroundedModel) -> list[tuple[int, float]]:
        if self.distance is None:
            return [(i, 1.0) for i, fid in enumerate(model.table.ids) if fid.kind == "num"]
        return self.distance.positions(model.table)

    @property
    def step_tolerance(self) -> float:
        """Per-step deviation allowed before execution counts as failed."""
        return self.C_th * (1.0 - self.gamma)


def discounted_mean(distances: Sequence[float], gamma: float, length: int | None = None) -> float:
    """(1/length) * sum_i gamma^i * d_i, with ``length`` defaulting to len(distances)."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    n = len(distances) if length is None else length
    if n < 1:
        raise ValueError("need at least one state")
    total = 0.0
    weight = 1.0
    for d in distances:
        total += weight * d
        weight *= gamma
    return total / n


def start_state(model: GroundedModel, observed: State) -> State:
    """Observed first state with the model's own values for fluents no happening writes."""
    if observed.table is model.table or observed.table == model.table:
        vals = list(observed.values)
    else:
        vals = list(model.s0.values)
        for fid, x in zip(observed.table.ids, observed.values):
            i = model.table.index.get(fid.key)
            if i is not None:
                vals[i] = x
    s0 = model.s0.values
    for i in model.static:
        vals[i] = s0[i]
    return State(model.table, tuple(vals), observed.time)


def expected_states(plan: Plan, model: GroundedModel, tau: Trajectory, sim: SimConfig,
                    strict: bool = False, skip_inapplicable: bool = False) -> tuple[State, ...]:
    """S(plan, model) over the span of ``tau``.

    A failed precondition yields the partial prefix (the plan halts there)
    unless ``skip_inapplicable`` turns such actions into no-ops. Other
    simulation errors also yield the prefix unless ``strict`` is set.
    """
    s0 = start_state(model, tau.states[0])
    cfg = SimConfig(sim.delta_t, sim.max_event_cascade, (len(tau) - 1) * sim.delta_t)
    try:
        return simulate_plan(model, s0, plan, cfg, skip_inapplicable).states
    except SimulationError as exc:
        lenient = isinstance(exc, PreconditionError) or not strict
        if not lenient or exc.trajectory is None or not exc.trajectory.states:
            raise
        return exc.trajectory.states


def inconsistency_score(plan: Plan, model: GroundedModel, tau: Trajectory, cfg: InconsistencyConfig = InconsistencyConfig(),
                        strict: bool = False, skip_inapplicable: bool = False) -> float:
    """Discounted mean distance between observed states and the model's simulation of ``plan``.

    Comparison runs over the shorter of the two sequences while the mean is
    always taken over ``len(tau)``. With ``strict`` simulation errors other
    than a failed precondition propagate instead of falling back to the
    partial prefix; ``skip_inapplicable`` is passed on to the simulation.
    """
    if len(tau) == 0:
        raise ModelError("empty trajectory")
    expected = expected_states(plan, model, tau, cfg.sim, strict, skip_inapplicable)
    pos_m = cfg.positions(model)
    obs_table = tau.states[0].table
    pos_o = pos_m if obs_table == model.table else [(obs_table.position(model.table.ids[i].key), w) for i, w in pos_m]
    n = min(len(expected), len(tau))
    dists = [values_distance(tau.states[i].values, expected[i].values, pos_o, pos_m) for i in range(n)]
    return discounted_mean(dists, cfg.gamma, len(tau))


def inconsistency_signal(score: float, cfg: InconsistencyConfig, episode: int) -> MonitorSignal:
    return MonitorSignal(INCONSISTENCY, episode, score, score >= cfg.C_th)


# ---------------------------------------------------------------------------
# Reward divergence


FEATURE_MAPS: dict[str, Callable[[Sequence[float], Sequence[float]], np.ndarray]] = {
    "concat": lambda s, a: np.concatenate([np.asarray(s, dtype=float), np.asarray(a, dtype=float)]),
}


@dataclass(frozen=True)
class RewardEstimator:
    """Linear reward model g(s, a) = w . phi(s, a) + b fitted by ridge least squares."""

    weights: tuple[float, ...]
    bias: float
    feature_map: str
    fingerprint: str
    train_rmse: float
    n_samples: int = 0

    def predict(self, state_features: Sequence[float], action_features: Sequence[float]) -> float:
        phi = FEATURE_MAPS[self.feature_map](state_features, action_features)
        if phi.shape[0] != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} features, got {phi.shape[0]}")
        return float(np.dot(self.weights, phi) + self.bias)

    def rmse(self, data) -> float:
        errs = [self.predict(s, a) - r for s, a, r in data]
        return math.sqrt(sum(e * e for e in errs) / len(errs))


def fit_estimator(data: Sequence[tuple[Sequence[float], Sequence[float], float]], ridge: float = 1e-8,
                  feature_map: str = "concat") -> RewardEstimator:
    """Fit on (state features, action features, normalised reward) tuples."""
    if not data:
        raise ValueError("cannot fit a reward estimator on no data")
    if feature_map not in FEATURE_MAPS:
        raise ValueError(f"unknown feature map {feature_map!r}")
    phi = FEATURE_MAPS[feature_map]
    X = np.array([phi(s, a) for s, a, _ in data], dtype=float)
    y = np.array([r for _, _, r in data], dtype=float)
    if X.ndim != 2 or X.shape[1] == 0 or np.linalg.matrix_rank(X) == 0:
        raise ValueError("degenerate features: rank 0")
    # centre so the intercept is not penalised
    mx, my = X.mean(axis=0), y.mean()
    Xc = X - mx
    A = Xc.T @ Xc + ridge * np.eye(X.shape[1])
    w = np.linalg.solve(A, Xc.T @ (y - my))
    b = my - mx @ w
    resid = X @ w + b - y
    rmse = float(np.sqrt(np.mean(resid * resid)))
    digest = hashlib.sha256(X.tobytes() + y.tobytes()).hexdigest()[:16]
    return RewardEstimator(tuple(float(x) for x in w), float(b), feature_map, digest, rmse, len(data))


def reward_divergence(est: RewardEstimator, s: Sequence[float], a: Sequence[float], r: float) -> float:
    return abs(est.predict(s, a) - r)


# ---------------------------------------------------------------------------
# Determination


@dataclass(frozen=True)
class MonitorRule:
    monitor: str
    threshold: float
    window: int = 1  # consecutive exceeding episodes required

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class DeterminationRule:
    rules: tuple[MonitorRule, ...] = ()
    combine: str = "any"
    short_circuit: bool = True

    def __post_init__(self) -> None:
        if self.combine not in ("any", "all"):
            raise ValueError("combine must be 'any' or 'all'")


@dataclass(frozen=True)
class NoveltyVerdict:
    fired: bool
    episode: int
    reasons: tuple[str, ...] = ()


def _streak(series: Sequence[MonitorSignal], threshold: float) -> int:
    n = 0
    for sig in reversed(series):
        if sig.score >= threshold:
            n += 1
        else:
            break
    return n


def determine(history: Mapping[str, Sequence[MonitorSignal]], rule: DeterminationRule) -> NoveltyVerdict:
    """Verdict for the latest episode in ``history`` (per-monitor series aligned by episode)."""
    latest = max((s[-1].episode for s in history.values() if s), default=-1)
    if rule.short_circuit:
        series = history.get(UNKNOWN_ENTITY, ())
        if series and series[-1].fired and series[-1].episode == latest:
            return NoveltyVerdict(True, latest, (UNKNOWN_ENTITY,))
    hits = []
    for r in rule.rules:
        series = [s for s in history.get(r.monitor, ()) if s.episode <= latest]
        if series and series[-1].episode == latest and _streak(series, r.threshold) >= r.window:
            hits.append(r.monitor)
    if not rule.rules:
        return NoveltyVerdict(False, latest)
    fired = bool(hits) if rule.combine == "any" else len(hits) == len(rule.rules)
    return NoveltyVerdict(fired, latest, tuple(hits) if fired else ())


def first_detection(history: Mapping[str, Sequence[MonitorSignal]], rule: DeterminationRule) -> int | None:
    """Earliest episode at which ``determine`` fires when replaying ``history``."""
    episodes = sorted({s.episode for series in history.values() for s in series})
    for ep in episodes:
        prefix = {m: [s for s in series if s.episode <= ep] for m, series in history.items()}
        if determine(prefix, rule).fired:
            return ep
    return None


def auc(negatives: Sequence[float], positives: Sequence[float]) -> float:
    """Area under the ROC curve: P(positive score > negative score), ties count half."""
    if not negatives or not positives:
        raise ValueError("need at least one score per class")
    wins = 0.0
    for p in positives:
        for q in negatives:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(negatives) * len(positives))
