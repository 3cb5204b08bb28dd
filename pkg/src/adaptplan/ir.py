"""Typed intermediate representation for the PDDL+ subset.

Lifted structures (``DomainModel``, ``ProblemSpec``) are plain frozen
dataclasses.  ``ground`` turns a domain/problem pair into a
``GroundedModel`` whose happenings carry compiled closures over a dense value
vector; the interpretive ``holds``/``eval_expr`` functions and the compiled
closures perform the same floating point operations in the same order, so
both paths agree bit for bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence, Union

BOOL = "bool"
NUM = "num"

ACTION = "action"
EVENT = "event"
PROCESS = "process"

UNARY_FUNCS = {"sin": math.sin, "cos": math.cos}
ARITH_OPS = ("+", "-", "*", "/")
COMPARE_OPS = ("<", "<=", "=", ">=", ">")


class ModelError(ValueError):
    """Raised for ill-formed models, unknown fluents and failed evaluation."""


# ---------------------------------------------------------------------------
# Fluents and expressions


@dataclass(frozen=True)
class FluentId:
    name: str
    args: tuple[str, ...] = ()
    kind: str = NUM

    @property
    def key(self) -> tuple[str, ...]:
        return (self.name, *self.args)

    def __str__(self) -> str:
        return " ".join(self.key)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class FluentRef:
    name: str
    args: tuple[str, ...] = ()

    @property
    def key(self) -> tuple[str, ...]:
        return (self.name, *self.args)


@dataclass(frozen=True)
class Neg:
    operand: "NumericExpr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "NumericExpr"
    right: "NumericExpr"

    def __post_init__(self) -> None:
        if self.op not in ARITH_OPS:
            raise ModelError(f"unknown arithmetic operator {self.op!r}")


@dataclass(frozen=True)
class Call:
    """Unary math function (``sin``/``cos``) used by the cart-pole dynamics."""

    func: str
    operand: "NumericExpr"

    def __post_init__(self) -> None:
        if self.func not in UNARY_FUNCS:
            raise ModelError(f"unknown function {self.func!r}")


@dataclass(frozen=True)
class TimeDelta:
    """The ``#t`` marker; only legal inside process rate effects."""


NumericExpr = Union[Const, FluentRef, Neg, BinOp, Call, TimeDelta]


# ---------------------------------------------------------------------------
# Conditions and effects


@dataclass(frozen=True)
class Atom:
    """Boolean fluent test, possibly negated."""

    name: str
    args: tuple[str, ...] = ()
    positive: bool = True

    @property
    def key(self) -> tuple[str, ...]:
        return (self.name, *self.args)


@dataclass(frozen=True)
class Comparison:
    op: str
    left: NumericExpr
    right: NumericExpr

    def __post_init__(self) -> None:
        if self.op not in COMPARE_OPS:
            raise ModelError(f"unknown comparison {self.op!r}")


Literal = Union[Atom, Comparison]


@dataclass(frozen=True)
class Condition:
    literals: tuple[Literal, ...] = ()

    def __and__(self, other: "Condition") -> "Condition":
        return Condition(self.literals + other.literals)


TRUE = Condition()


@dataclass(frozen=True)
class SetBool:
    target: FluentRef
    value: bool


@dataclass(frozen=True)
class Assign:
    target: FluentRef
    expr: NumericExpr


@dataclass(frozen=True)
class Increase:
    target: FluentRef
    expr: NumericExpr


@dataclass(frozen=True)
class Decrease:
    target: FluentRef
    expr: NumericExpr


@dataclass(frozen=True)
class ContinuousRate:
    """``(increase f (* #t rate))``; ``negative`` marks the ``decrease`` form."""

    target: FluentRef
    rate: NumericExpr
    negative: bool = False


Effect = Union[SetBool, Assign, Increase, Decrease, ContinuousRate]
INSTANT_EFFECTS = (SetBool, Assign, Increase, Decrease)


@dataclass(frozen=True)
class Happening:
    name: str
    kind: str
    parameters: tuple[tuple[str, str], ...] = ()
    precondition: Condition = TRUE
    effects: tuple[Effect, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (ACTION, EVENT, PROCESS):
            raise ModelError(f"unknown happening kind {self.kind!r}")
        for eff in self.effects:
            is_rate = isinstance(eff, ContinuousRate)
            if self.kind == PROCESS and not is_rate:
                raise ModelError(f"process {self.name} has an instantaneous effect")
            if self.kind != PROCESS and is_rate:
                raise ModelError(f"{self.kind} {self.name} has a continuous-rate effect")
            if not is_rate and _contains_time(_effect_expr(eff)):
                raise ModelError(f"#t outside a rate effect in {self.name}")
        for lit in self.precondition.literals:
            if isinstance(lit, Comparison) and (_contains_time(lit.left) or _contains_time(lit.right)):
                raise ModelError(f"#t inside the precondition of {self.name}")


@dataclass(frozen=True)
class DomainModel:
    name: str
    types: tuple[str, ...] = ()
    predicates: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    functions: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    happenings: tuple[Happening, ...] = ()

    def happening(self, name: str) -> Happening:
        for h in self.happenings:
            if h.name == name:
                return h
        raise KeyError(name)


InitValue = Union[bool, float]


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: str
    objects: Mapping[str, str] = field(default_factory=dict)
    init: Mapping[tuple[str, ...], InitValue] = field(default_factory=dict)
    goal: Condition = TRUE


def _effect_expr(eff: Effect) -> NumericExpr | None:
    if isinstance(eff, (Assign, Increase, Decrease)):
        return eff.expr
    if isinstance(eff, ContinuousRate):
        return eff.rate
    return None


def _contains_time(expr: NumericExpr | None) -> bool:
    if expr is None:
        return False
    if isinstance(expr, TimeDelta):
        return True
    if isinstance(expr, (Neg, Call)):
        return _contains_time(expr.operand)
    if isinstance(expr, BinOp):
        return _contains_time(expr.left) or _contains_time(expr.right)
    return False


# ---------------------------------------------------------------------------
# States


class FluentTable:
    """Ordered fluent table shared by every state of one grounded model."""

    __slots__ = ("ids", "index")

    def __init__(self, ids: Sequence[FluentId]):
        self.ids = tuple(ids)
        self.index = {fid.key: i for i, fid in enumerate(self.ids)}
        if len(self.index) != len(self.ids):
            raise ModelError("duplicate fluent in table")

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FluentTable) and self.ids == other.ids

    def __hash__(self) -> int:
        return hash(self.ids)

    def position(self, key: Any) -> int:
        try:
            return self.index[as_key(key)]
        except KeyError:
            raise ModelError(f"unknown fluent {format_key(as_key(key))!r}") from None


def as_key(key: Any) -> tuple[str, ...]:
    """Normalise ``"theta_x"``, ``"broken t1"``, tuples and FluentIds."""
    if isinstance(key, (FluentId, FluentRef)):
        return key.key
    if isinstance(key, str):
        return tuple(key.strip("()").split())
    return tuple(key)


def format_key(key: Sequence[str]) -> str:
    return " ".join(key)


@dataclass(frozen=True)
class State:
    """Dense assignment over a fluent table plus simulated time in seconds."""

    table: FluentTable = field(repr=False)
    values: tuple
    time: float = 0.0

    def __getitem__(self, key: Any) -> InitValue:
        return self.values[self.table.position(key)]

    def get(self, key: Any, default: Any = None) -> Any:
        idx = self.table.index.get(as_key(key))
        return default if idx is None else self.values[idx]

    def replace(self, updates: Mapping[Any, InitValue] | None = None, time: float | None = None) -> "State":
        vals = list(self.values)
        for k, value in (updates or {}).items():
            i = self.table.position(k)
            vals[i] = _coerce(self.table.ids[i], value)
        return State(self.table, tuple(vals), self.time if time is None else time)

    def as_dict(self) -> dict[str, InitValue]:
        return {str(fid): v for fid, v in zip(self.table.ids, self.values)}

    def check_finite(self) -> None:
        for fid, v in zip(self.table.ids, self.values):
            if fid.kind == NUM and not math.isfinite(v):
                raise ModelError(f"non-finite value for {fid}: {v}")


def _coerce(fid: FluentId, value: InitValue) -> InitValue:
    if fid.kind == BOOL:
        if not isinstance(value, (bool, int)) or value not in (0, 1):
            raise ModelError(f"boolean fluent {fid} given {value!r}")
        return bool(value)
    if isinstance(value, bool):
        raise ModelError(f"numeric fluent {fid} given a boolean")
    return float(value)


# ---------------------------------------------------------------------------
# Interpretive evaluation


def eval_expr(state: State, expr: NumericExpr) -> float:
    """Evaluate a grounded numeric expression against ``state``."""
    value = _eval(state, expr)
    if not math.isfinite(value):
        raise ModelError(f"non-finite result {value}")
    return value


def _eval(state: State, expr: NumericExpr) -> float:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, FluentRef):
        i = state.table.position(expr.key)
        if state.table.ids[i].kind != NUM:
            raise ModelError(f"boolean fluent {format_key(expr.key)} used as a number")
        return state.values[i]
    if isinstance(expr, Neg):
        return -_eval(state, expr.operand)
    if isinstance(expr, Call):
        return UNARY_FUNCS[expr.func](_eval(state, expr.operand))
    if isinstance(expr, BinOp):
        a = _eval(state, expr.left)
        b = _eval(state, expr.right)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if b == 0.0:
            raise ModelError("division by zero")
        return a / b
    if isinstance(expr, TimeDelta):
        raise ModelError("#t can only be used inside process rate effects")
    raise ModelError(f"not an expression: {expr!r}")


_COMPARE = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def holds(state: State, cond: Condition) -> bool:
    """Conjunction semantics with exact real comparisons."""
    for lit in cond.literals:
        if isinstance(lit, Atom):
            i = state.table.position(lit.key)
            if state.table.ids[i].kind != BOOL:
                raise ModelError(f"numeric fluent {format_key(lit.key)} used as a predicate")
            if bool(state.values[i]) != lit.positive:
                return False
        elif not _COMPARE[lit.op](eval_expr(state, lit.left), eval_expr(state, lit.right)):
            return False
    return True


# ---------------------------------------------------------------------------
# Distance


@dataclass(frozen=True)
class DistanceSpec:
    """Fluents (and optional weights) entering the weighted Euclidean distance."""

    fluents: tuple[tuple[str, ...], ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "fluents", tuple(as_key(f) for f in self.fluents))
        if self.weights is not None:
            if len(self.weights) != len(self.fluents):
                raise ModelError("one weight per fluent required")
            if any(w < 0 for w in self.weights):
                raise ModelError("weights must be nonnegative")

    @classmethod
    def of(cls, *names: str, weights: Sequence[float] | None = None) -> "DistanceSpec":
        return cls(tuple(as_key(n) for n in names), None if weights is None else tuple(weights))

    def positions(self, table: FluentTable) -> list[tuple[int, float]]:
        weights = self.weights or (1.0,) * len(self.fluents)
        return [(table.position(f), float(w)) for f, w in zip(self.fluents, weights)]


def fluent_distance(a: State, b: State, spec: DistanceSpec) -> float:
    """Weighted Euclidean distance over the fluents named in ``spec``."""
    pos_a = spec.positions(a.table)
    pos_b = pos_a if b.table is a.table else spec.positions(b.table)
    return values_distance(a.values, b.values, pos_a, pos_b)


def values_distance(va: Sequence, vb: Sequence, pos_a, pos_b=None) -> float:
    pos_b = pos_a if pos_b is None else pos_b
    total = 0.0
    for (ia, w), (ib, _) in zip(pos_a, pos_b):
        d = float(va[ia]) - float(vb[ib])
        total += w * d * d
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# Grounding and compilation


@dataclass(frozen=True)
class GroundHappening:
    name: str
    args: tuple[str, ...]
    kind: str
    precondition: Condition
    effects: tuple[Effect, ...]
    pre: Any = field(repr=False, compare=False)
    apply: Any = field(repr=False, compare=False)
    rates: Any = field(repr=False, compare=False)
    writes: frozenset = field(repr=False, compare=False, default=frozenset())

    @property
    def label(self) -> str:
        return " ".join((self.name, *self.args))


@dataclass(frozen=True, eq=False)
class GroundedModel:
    domain: DomainModel
    problem: ProblemSpec
    table: FluentTable
    actions: tuple[GroundHappening, ...]
    events: tuple[GroundHappening, ...]
    processes: tuple[GroundHappening, ...]
    s0: State
    goal: Condition
    static: frozenset  # indices never written by any happening
    origin: Any = field(default=None, repr=False)  # (parent model, net-delta) for undo

    @property
    def happenings(self) -> tuple[GroundHappening, ...]:
        return self.actions + self.events + self.processes

    def action(self, label: str) -> GroundHappening:
        for a in self.actions:
            if a.label == label:
                return a
        raise ModelError(f"unknown grounded action {label!r}")

    def same_structure(self, other: "GroundedModel") -> bool:
        return self.domain == other.domain and self.table == other.table

    def with_initial_values(self, updates: Mapping[Any, float], origin: Any = None) -> "GroundedModel":
        s0 = self.s0.replace(updates)
        problem_init = dict(self.problem.init)
        for k in updates:
            problem_init[as_key(k)] = s0[k]
        problem = ProblemSpec(self.problem.name, self.problem.domain, self.problem.objects, problem_init, self.problem.goal)
        return GroundedModel(self.domain, problem, self.table, self.actions, self.events,
                             self.processes, s0, self.goal, self.static, origin)


def _subst(args: tuple[str, ...], binding: Mapping[str, str]) -> tuple[str, ...]:
    return tuple(binding.get(a, a) for a in args)


def _ground_expr(expr: NumericExpr, binding: Mapping[str, str]) -> NumericExpr:
    if isinstance(expr, FluentRef):
        return FluentRef(expr.name, _subst(expr.args, binding))
    if isinstance(expr, Neg):
        return Neg(_ground_expr(expr.operand, binding))
    if isinstance(expr, Call):
        return Call(expr.func, _ground_expr(expr.operand, binding))
    if isinstance(expr, BinOp):
        return BinOp(expr.op, _ground_expr(expr.left, binding), _ground_expr(expr.right, binding))
    return expr


def _ground_condition(cond: Condition, binding: Mapping[str, str]) -> Condition:
    lits: list[Literal] = []
    for lit in cond.literals:
        if isinstance(lit, Atom):
            lits.append(Atom(lit.name, _subst(lit.args, binding), lit.positive))
        else:
            lits.append(Comparison(lit.op, _ground_expr(lit.left, binding), _ground_expr(lit.right, binding)))
    return Condition(tuple(lits))


def _ground_effect(eff: Effect, binding: Mapping[str, str]) -> Effect:
    target = FluentRef(eff.target.name, _subst(eff.target.args, binding))
    if isinstance(eff, SetBool):
        return SetBool(target, eff.value)
    if isinstance(eff, ContinuousRate):
        return ContinuousRate(target, _ground_expr(eff.rate, binding), eff.negative)
    return type(eff)(target, _ground_expr(eff.expr, binding))


class _Compiler:
    """Translate grounded IR into Python lambdas over the value list ``v``."""

    def __init__(self, table: FluentTable):
        self.table = table

    def idx(self, key: tuple[str, ...], kind: str) -> int:
        i = self.table.index.get(key)
        if i is None:
            raise ModelError(f"reference to unknown fluent {format_key(key)!r}")
        if self.table.ids[i].kind != kind:
            raise ModelError(f"fluent {format_key(key)} used as {kind}")
        return i

    def expr(self, e: NumericExpr) -> str:
        if isinstance(e, Const):
            return repr(float(e.value))
        if isinstance(e, FluentRef):
            return f"v[{self.idx(e.key, NUM)}]"
        if isinstance(e, Neg):
            return f"(-{self.expr(e.operand)})"
        if isinstance(e, Call):
            return f"_{e.func}({self.expr(e.operand)})"
        if isinstance(e, BinOp):
            return f"({self.expr(e.left)} {e.op} {self.expr(e.right)})"
        raise ModelError("#t can only be used inside process rate effects")

    def cond(self, c: Condition) -> str:
        parts = []
        for lit in c.literals:
            if isinstance(lit, Atom):
                i = self.idx(lit.key, BOOL)
                parts.append(f"v[{i}]" if lit.positive else f"(not v[{i}])")
            else:
                op = "==" if lit.op == "=" else lit.op
                parts.append(f"({self.expr(lit.left)} {op} {self.expr(lit.right)})")
        return " and ".join(parts) if parts else "True"

    def build(self, src: str):
        env = {"_sin": math.sin, "_cos": math.cos}
        return eval(compile(f"lambda v: {src}", "<pddl>", "eval"), env)

    def happening(self, h: Happening, binding: Mapping[str, str], args: tuple[str, ...]) -> GroundHappening:
        pre = _ground_condition(h.precondition, binding)
        effects = tuple(_ground_effect(e, binding) for e in h.effects)
        writes: list[str] = []
        rates: list[str] = []
        targets = set()
        for e in effects:
            if isinstance(e, SetBool):
                i = self.idx(e.target.key, BOOL)
                writes.append(f"({i}, 0, {e.value!r})")
            elif isinstance(e, Assign):
                i = self.idx(e.target.key, NUM)
                writes.append(f"({i}, 0, {self.expr(e.expr)})")
            elif isinstance(e, Increase):
                i = self.idx(e.target.key, NUM)
                writes.append(f"({i}, 1, {self.expr(e.expr)})")
            elif isinstance(e, Decrease):
                i = self.idx(e.target.key, NUM)
                writes.append(f"({i}, 1, (-{self.expr(e.expr)}))")
            else:
                i = self.idx(e.target.key, NUM)
                r = self.expr(e.rate)
                rates.append(f"({i}, {'(-' + r + ')' if e.negative else r})")
            targets.add(i)
        return GroundHappening(
            name=h.name, args=args, kind=h.kind, precondition=pre, effects=effects,
            pre=self.build(self.cond(pre)),
            apply=self.build("(" + "".join(w + ", " for w in writes) + ")"),
            rates=self.build("(" + "".join(r + ", " for r in rates) + ")"),
            writes=frozenset(targets),
        )


def compile_condition(model_or_table: GroundedModel | FluentTable, cond: Condition):
    table = model_or_table.table if isinstance(model_or_table, GroundedModel) else model_or_table
    c = _Compiler(table)
    return c.build(c.cond(cond))


def _objects_by_type(domain: DomainModel, problem: ProblemSpec) -> dict[str, list[str]]:
    by_type: dict[str, list[str]] = {t: [] for t in domain.types}
    by_type.setdefault("object", [])
    for obj, typ in problem.objects.items():
        if typ not in by_type:
            raise ModelError(f"object {obj} has undeclared type {typ!r}")
        by_type[typ].append(obj)
        if typ != "object":
            by_type["object"].append(obj)
    return by_type


def _instances(param_types: Iterable[str], by_type: Mapping[str, list[str]]) -> Iterable[tuple[str, ...]]:
    pools = []
    for t in param_types:
        if t not in by_type:
            raise ModelError(f"undeclared type {t!r}")
        pools.append(by_type[t])
    return itertools.product(*pools)


def ground(domain: DomainModel, problem: ProblemSpec) -> GroundedModel:
    """Instantiate every lifted happening and build the dense fluent table."""
    if problem.domain != domain.name:
        raise ModelError(f"problem is for domain {problem.domain!r}, not {domain.name!r}")
    by_type = _objects_by_type(domain, problem)

    ids: list[FluentId] = []
    for name, ptypes in domain.predicates.items():
        ids.extend(FluentId(name, args, BOOL) for args in _instances(ptypes, by_type))
    for name, ptypes in domain.functions.items():
        ids.extend(FluentId(name, args, NUM) for args in _instances(ptypes, by_type))
    table = FluentTable(ids)

    values: list[Any] = [False if fid.kind == BOOL else None for fid in ids]
    for key, value in problem.init.items():
        key = as_key(key)
        i = table.index.get(key)
        if i is None:
            name = key[0]
            if name in domain.predicates or name in domain.functions:
                declared = domain.predicates.get(name, domain.functions.get(name))
                if len(declared) != len(key) - 1:
                    raise ModelError(f"arity mismatch in init for {format_key(key)}")
                raise ModelError(f"init references undeclared object in {format_key(key)}")
            raise ModelError(f"init assigns undeclared fluent {format_key(key)}")
        values[i] = _coerce(ids[i], value)
    missing = [str(fid) for fid, v in zip(ids, values) if v is None]
    if missing:
        raise ModelError(f"numeric fluents without initial value: {', '.join(missing)}")

    compiler = _Compiler(table)
    grounded: dict[str, list[GroundHappening]] = {ACTION: [], EVENT: [], PROCESS: []}
    for h in domain.happenings:
        names = [p for p, _ in h.parameters]
        for args in _instances([t for _, t in h.parameters], by_type):
            binding = dict(zip(names, args))
            grounded[h.kind].append(compiler.happening(h, binding, tuple(args)))

    written = set()
    for gh in itertools.chain(*grounded.values()):
        written |= gh.writes
    static = frozenset(range(len(ids))) - written

    goal = problem.goal
    compiler.cond(goal)  # validates goal references
    s0 = State(table, tuple(values), 0.0)
    s0.check_finite()
    return GroundedModel(domain, problem, table, tuple(grounded[ACTION]), tuple(grounded[EVENT]),
                         tuple(grounded[PROCESS]), s0, goal, static)


# ---------------------------------------------------------------------------
# Plans and trajectories


@dataclass(frozen=True)
class PlanStep:
    time: float
    action: str  # grounded label, e.g. "push_right" or "break_tree t1"


@dataclass(frozen=True)
class Plan:
    """Timestamped actions; ``duration`` optionally extends the plan past its last action."""

    steps: tuple[PlanStep, ...] = ()
    duration: float | None = None

    def __post_init__(self) -> None:
        times = [s.time for s in self.steps]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ModelError("plan timestamps must be nondecreasing")
        if self.duration is not None and times and self.duration < times[-1]:
            raise ModelError("plan duration ends before its last action")

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    @classmethod
    def of(cls, *pairs: tuple[float, str], duration: float | None = None) -> "Plan":
        return cls(tuple(PlanStep(float(t), a) for t, a in pairs), duration)

    def to_text(self) -> str:
        text = "".join(f"t={s.time!r} {s.action}\n" for s in self.steps)
        if self.duration is not None:
            text += f"; duration={self.duration!r}\n"
        return text

    @classmethod
    def from_text(cls, text: str) -> "Plan":
        steps = []
        duration = None
        for lineno, line in enumerate(text.splitlines(), 1):
            body, _, comment = line.partition(";")
            comment = comment.strip()
            if comment.startswith("duration="):
                duration = float(comment[len("duration="):])
            line = body.strip()
            if not line:
                continue
            head, _, rest = line.partition(" ")
            if not head.startswith("t=") or not rest.strip():
                raise ModelError(f"plan line {lineno}: expected 't=<seconds> <action> <args>'")
            try:
                t = float(head[2:])
            except ValueError:
                raise ModelError(f"plan line {lineno}: bad timestamp {head[2:]!r}") from None
            steps.append(PlanStep(t, " ".join(rest.split())))
        return cls(tuple(steps), duration)


TIME_PASS = None  # marker for a step with no agent action


@dataclass(frozen=True)
class Trajectory:
    """States s_0..s_n and the n actions (label or ``None``) between them."""

    states: tuple[State, ...]
    actions: tuple[str | None, ...] = ()

    def __post_init__(self) -> None:
        if len(self.states) != len(self.actions) + 1:
            raise ModelError("trajectory needs exactly one more state than actions")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def triples(self) -> list[tuple[State, str | None, State]]:
        return [(self.states[i], a, self.states[i + 1]) for i, a in enumerate(self.actions)]

    @property
    def final(self) -> State:
        return self.states[-1]
