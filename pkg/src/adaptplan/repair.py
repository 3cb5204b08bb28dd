"""Model repair by best-first search over sequences of numeric model edits.

An MMO adds a fixed signed amount to one repairable fluent's initial value. A
repair is a sequence of MMOs; permutations with the same net change are the
same search node. Candidates are scored by re-simulating the executed plan
under the edited model and comparing against the observed trajectory.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .ir import NUM, GroundedModel, ModelError, Plan, Trajectory, as_key, format_key
from .monitors import InconsistencyConfig, inconsistency_score
from .simulator import SimulationError


@dataclass(frozen=True)
class MMO:
    target: str
    delta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "target", format_key(as_key(self.target)))
        if self.delta == 0 or not math.isfinite(self.delta):
            raise ValueError("MMO delta must be finite and nonzero")

    def __str__(self) -> str:
        return f"{self.target}{'+' if self.delta > 0 else '-'}{abs(self.delta)!r}"


@dataclass(frozen=True)
class RepairSpace:
    """Repairable fluents with nominal value and step size; yields {+step, -step} per fluent."""

    entries: tuple[tuple[str, float, float], ...]

    def __post_init__(self) -> None:
        cleaned = []
        for fluent, nominal, delta in self.entries:
            if not delta > 0:
                raise ValueError(f"repair step for {fluent} must be positive")
            cleaned.append((format_key(as_key(fluent)), float(nominal), float(delta)))
        if len({f for f, _, _ in cleaned}) != len(cleaned):
            raise ValueError("repairable fluent listed twice")
        object.__setattr__(self, "entries", tuple(cleaned))

    @classmethod
    def from_config(cls, rows: Iterable) -> "RepairSpace":
        out = []
        for row in rows:
            if isinstance(row, Mapping):
                out.append((row["fluent"], row.get("nominal", 0.0), row["delta"]))
            else:
                out.append(tuple(row))
        return cls(tuple(out))

    @property
    def fluents(self) -> tuple[str, ...]:
        return tuple(f for f, _, _ in self.entries)

    def mmos(self) -> list[MMO]:
        out = []
        for fluent, _, delta in self.entries:
            out += [MMO(fluent, delta), MMO(fluent, -delta)]
        return out

    def check(self, model: GroundedModel) -> None:
        if not self.entries:
            raise ValueError("empty repair space")
        for fluent, _, _ in self.entries:
            i = model.table.position(fluent)
            if model.table.ids[i].kind != NUM:
                raise ModelError(f"repairable fluent {fluent} is not numeric")


@dataclass(frozen=True)
class Repair:
    mmos: tuple[MMO, ...] = ()

    def __len__(self) -> int:
        return len(self.mmos)

    def then(self, mmo: MMO) -> "Repair":
        return Repair(self.mmos + (mmo,))

    def counts(self) -> dict[tuple[str, float], int]:
        """Signed number of steps per (fluent, step size); cancelled pairs drop out."""
        out: dict[tuple[str, float], int] = {}
        for m in self.mmos:
            k = (m.target, abs(m.delta))
            out[k] = out.get(k, 0) + (1 if m.delta > 0 else -1)
        return {k: c for k, c in out.items() if c}

    def key(self) -> tuple:
        return tuple(sorted(self.counts().items()))

    def net_delta(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for (fluent, step), count in sorted(self.counts().items()):
            out[fluent] = out.get(fluent, 0.0) + count * step
        return out


def do_repair(model: GroundedModel, repair: Repair) -> GroundedModel:
    """Model whose initial values are shifted by the repair's net delta."""
    net = repair.net_delta()
    if not net:
        return model
    updates = {f: model.s0[f] + d for f, d in net.items()}
    return model.with_initial_values(updates, origin=(model, repair.key()))


def undo_repair(model: GroundedModel, repair: Repair) -> GroundedModel:
    """Inverse of do_repair; exact when ``model`` came from do_repair with this repair."""
    net = repair.net_delta()
    if not net:
        return model
    origin = model.origin
    if origin is not None and origin[1] == repair.key():
        return origin[0]
    return model.with_initial_values({f: model.s0[f] - d for f, d in net.items()})


def format_number(x: float) -> str:
    return "0" if x == 0 else repr(float(x))


def repair_log_line(repair: Repair, consistency: float, space: RepairSpace | None = None) -> str:
    net = repair.net_delta()
    names = list(space.fluents) if space else []
    names += [f for f in net if f not in names]
    body = ", ".join(f"{f}: {format_number(net.get(f, 0.0))}" for f in names)
    return f"repair:[{body}]; resulting consistency: {consistency:.8g}"


@dataclass(frozen=True)
class RepairSearchConfig:
    C_th: float = 0.009
    lam: float | None = None  # None: 0.001 * C_th
    node_budget: int = 10000
    max_repair_length: int = 20
    focused: bool = False

    def __post_init__(self) -> None:
        if self.C_th < 0:
            raise ValueError("C_th must be nonnegative")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.node_budget < 1 or self.max_repair_length < 1:
            raise ValueError("repair budgets must be positive")

    @property
    def size_weight(self) -> float:
        return 0.001 * self.C_th if self.lam is None else self.lam


@dataclass(frozen=True)
class RepairResult:
    best: Repair
    C_best: float
    C_initial: float
    nodes_expanded: int
    nodes_generated: int
    halted: str  # "consistent", "budget" or "exhausted"

    def log_line(self, space: RepairSpace | None = None) -> str:
        return repair_log_line(self.best, self.C_best, space)


def score_repair(model: GroundedModel, repair: Repair, plan: Plan, tau: Trajectory, incons: InconsistencyConfig) -> float:
    """Inconsistency of the repaired model; a model whose simulation breaks scores infinity.

    Actions the candidate model deems inapplicable are skipped rather than
    halting the simulation, so a model cannot look consistent merely by
    cutting the comparison short.
    """
    try:
        return inconsistency_score(plan, do_repair(model, repair), tau, incons, strict=True, skip_inapplicable=True)
    except SimulationError:
        return math.inf


def repair_search(space: RepairSpace, model: GroundedModel, plan: Plan, tau: Trajectory,
                  cfg: RepairSearchConfig = RepairSearchConfig(),
                  incons_cfg: InconsistencyConfig = InconsistencyConfig()) -> RepairResult:
    """Best-first search for the repair minimising C + lam * |repair|.

    Stops once the best repair found is consistent (C < C_th), or when the
    node budget or the space runs out; the best repair is returned either way.
    """
    if len(tau) == 0:
        raise ModelError("empty trajectory")
    space.check(model)
    mmos = space.mmos()
    lam = cfg.size_weight

    root = Repair()
    c0 = score_repair(model, root, plan, tau, incons_cfg)
    best, c_best = root, c0
    tie = itertools.count()
    open_list: list = [(c0, next(tie), root)]
    seen = {root.key()}
    expanded = generated = 0
    halted = "consistent"

    while c_best >= cfg.C_th:
        if not open_list:
            halted = "exhausted"
            break
        if expanded >= cfg.node_budget:
            halted = "budget"
            break
        _, _, node = heapq.heappop(open_list)
        expanded += 1
        if len(node) >= cfg.max_repair_length:
            continue
        children = mmos if (not cfg.focused or not node.mmos) else [node.mmos[0]]
        for mmo in children:
            child = node.then(mmo)
            key = child.key()
            if key in seen:
                continue
            seen.add(key)
            c = score_repair(model, child, plan, tau, incons_cfg)
            generated += 1
            if c < c_best:
                best, c_best = child, c
            if math.isfinite(c):
                heapq.heappush(open_list, (c + lam * len(child), next(tie), child))

    return RepairResult(best, c_best, c0, expanded, generated, halted)


def focused_repair_search(space: RepairSpace, model: GroundedModel, plan: Plan, tau: Trajectory,
                          cfg: RepairSearchConfig = RepairSearchConfig(),
                          incons_cfg: InconsistencyConfig = InconsistencyConfig()) -> RepairResult:
    """repair_search restricted to repairs that repeat a single MMO."""
    return repair_search(space, model, plan, tau, RepairSearchConfig(cfg.C_th, cfg.lam, cfg.node_budget,
                                                                     cfg.max_repair_length, True), incons_cfg)

