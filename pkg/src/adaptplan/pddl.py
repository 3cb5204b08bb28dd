"""Parser and pretty-printer for the PDDL+ subset.

Supported domain sections: ``:requirements`` (ignored), ``:types``,
``:predicates``, ``:functions``, ``:action``, ``:event``, ``:process``.
Problems accept ``:domain``, ``:objects``, ``:init`` and ``:goal``.  Keywords
are case-insensitive, identifiers keep their case, and ``;`` starts a comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .ir import (
    ACTION,
    COMPARE_OPS,
    EVENT,
    PROCESS,
    UNARY_FUNCS,
    Assign,
    Atom,
    BinOp,
    Call,
    Comparison,
    Condition,
    Const,
    ContinuousRate,
    Decrease,
    DomainModel,
    Effect,
    FluentRef,
    Happening,
    Increase,
    ModelError,
    Neg,
    NumericExpr,
    ProblemSpec,
    SetBool,
    TimeDelta,
    _contains_time,
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(Exception):
    def __init__(self, span: SourceSpan, message: str, expected: str | None = None):
        self.span = span
        self.message = message or "parse error"
        self.expected = expected
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{span}: {self.message}{hint}")


# ---------------------------------------------------------------------------
# S-expressions


@dataclass
class SAtom:
    text: str
    span: SourceSpan

    @property
    def low(self) -> str:
        return self.text.lower()


@dataclass
class SList:
    items: list
    span: SourceSpan

    def __len__(self) -> int:
        return len(self.items)


SExpr = "SAtom | SList"


def _tokens(text: str, file: str) -> Iterator[tuple[str, SourceSpan]]:
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col, i = line + 1, 1, i + 1
        elif c.isspace():
            col, i = col + 1, i + 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c, SourceSpan(file, line, col, 1)
            col, i = col + 1, i + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield text[i:j], SourceSpan(file, line, col, j - i)
            col, i = col + (j - i), j


def read_sexpr(text: str, file: str = "<input>") -> SList:
    """Read exactly one top-level list from ``text``."""
    stack: list[SList] = []
    result: SList | None = None
    last = SourceSpan(file, 1, 1, 1)
    for tok, span in _tokens(text, file):
        last = span
        if result is not None:
            raise ParseError(span, "unexpected text after the top-level form", "end of input")
        if tok == "(":
            stack.append(SList([], span))
        elif tok == ")":
            if not stack:
                raise ParseError(span, "unbalanced ')'")
            done = stack.pop()
            if stack:
                stack[-1].items.append(done)
            else:
                result = done
        else:
            if not stack:
                raise ParseError(span, f"unexpected atom {tok!r} at top level", "'('")
            stack[-1].items.append(SAtom(tok, span))
    if stack:
        raise ParseError(stack[-1].span, "unbalanced '(' (missing ')')", "')'")
    if result is None:
        raise ParseError(last, "empty input", "'(define ...)'")
    return result


# ---------------------------------------------------------------------------
# Helpers


def _atom(node, what: str) -> SAtom:
    if not isinstance(node, SAtom):
        raise ParseError(node.span, f"expected {what}, found a list", what)
    return node


def _list(node, what: str) -> SList:
    if not isinstance(node, SList):
        raise ParseError(node.span, f"expected {what}, found {node.text!r}", what)
    return node


def _head(node: SList) -> str | None:
    if node.items and isinstance(node.items[0], SAtom):
        return node.items[0].low
    return None


def _typed_list(items: Sequence, what: str) -> list[tuple[str, str]]:
    """Parse ``a b - t c`` into [(a, t), (b, t), (c, object)]."""
    out: list[tuple[str, str]] = []
    pending: list[SAtom] = []
    k = 0
    while k < len(items):
        node = _atom(items[k], what)
        if node.text == "-":
            if k + 1 >= len(items) or not pending:
                raise ParseError(node.span, "dangling '-' in typed list", "a type name")
            typ = _atom(items[k + 1], "a type name").text
            out.extend((p.text, typ) for p in pending)
            pending = []
            k += 2
            continue
        pending.append(node)
        k += 1
    out.extend((p.text, "object") for p in pending)
    return out


def _number(node: SAtom) -> float | None:
    try:
        value = float(node.text)
    except ValueError:
        return None
    return value if math.isfinite(value) and "_" not in node.text else None


class _Reader:
    def __init__(self, predicates: Mapping[str, tuple[str, ...]], functions: Mapping[str, tuple[str, ...]],
                 params: Mapping[str, str] | None = None, check: bool = True):
        self.predicates = predicates
        self.functions = functions
        self.params = params or {}
        self.check = check

    def _args(self, items: Sequence, name_span: SourceSpan, arity: int | None) -> tuple[str, ...]:
        args = []
        for it in items:
            a = _atom(it, "an argument")
            if a.text.startswith("?") and self.check and a.text not in self.params:
                raise ParseError(a.span, f"unbound variable {a.text}")
            args.append(a.text)
        if arity is not None and len(args) != arity:
            raise ParseError(name_span, f"arity mismatch: expected {arity} argument(s), got {len(args)}")
        return tuple(args)

    def fluent(self, node, kind: str) -> FluentRef:
        lst = _list(node, "a fluent reference")
        if not lst.items:
            raise ParseError(lst.span, "empty fluent reference", "a fluent name")
        name = _atom(lst.items[0], "a fluent name")
        table = self.functions if kind == "num" else self.predicates
        declared = table.get(name.text)
        if self.check and declared is None:
            what = "function" if kind == "num" else "predicate"
            raise ParseError(name.span, f"undeclared {what} {name.text!r}")
        arity = None if declared is None else len(declared)
        return FluentRef(name.text, self._args(lst.items[1:], name.span, arity))

    def expr(self, node) -> NumericExpr:
        if isinstance(node, SAtom):
            if node.text == "#t":
                return TimeDelta()
            num = _number(node)
            if num is None:
                raise ParseError(node.span, f"expected a number or expression, found {node.text!r}", "a number")
            return Const(num)
        if not node.items:
            raise ParseError(node.span, "empty expression", "an expression")
        head = _head(node)
        args = node.items[1:]
        if head in ("+", "-", "*", "/"):
            if head == "-" and len(args) == 1:
                return Neg(self.expr(args[0]))
            if len(args) < 2 or (head in ("-", "/") and len(args) != 2):
                raise ParseError(node.span, f"wrong number of operands for {head!r}")
            out = self.expr(args[0])
            for a in args[1:]:
                out = BinOp(head, out, self.expr(a))
            return out
        if head in UNARY_FUNCS:
            if len(args) != 1:
                raise ParseError(node.span, f"{head} takes one argument")
            return Call(head, self.expr(args[0]))
        return self.fluent(node, "num")

    def literal(self, node) -> Atom | Comparison:
        lst = _list(node, "a literal")
        head = _head(lst)
        if head == "not":
            if len(lst.items) != 2:
                raise ParseError(lst.span, "'not' takes one argument")
            ref = self.fluent(lst.items[1], "bool")
            return Atom(ref.name, ref.args, False)
        if head in COMPARE_OPS:
            if len(lst.items) != 3:
                raise ParseError(lst.span, f"comparison {head!r} takes two operands")
            return Comparison(head, self.expr(lst.items[1]), self.expr(lst.items[2]))
        if head in ("or", "imply", "forall", "exists", "when"):
            raise ParseError(lst.items[0].span, f"unsupported connective {head!r}", "a conjunction of literals")
        ref = self.fluent(lst, "bool")
        return Atom(ref.name, ref.args, True)

    def condition(self, node) -> Condition:
        lst = _list(node, "a condition")
        if not lst.items:
            return Condition()
        if _head(lst) == "and":
            return Condition(tuple(self.literal(x) for x in lst.items[1:]))
        return Condition((self.literal(lst),))

    def effects(self, node, kind: str) -> tuple[Effect, ...]:
        lst = _list(node, "an effect")
        if not lst.items:
            return ()
        items = lst.items[1:] if _head(lst) == "and" else [lst]
        return tuple(self.effect(x, kind) for x in items)

    def effect(self, node, kind: str) -> Effect:
        lst = _list(node, "an effect")
        head = _head(lst)
        if head == "not":
            if len(lst.items) != 2:
                raise ParseError(lst.span, "'not' takes one argument")
            eff: Effect = SetBool(self.fluent(lst.items[1], "bool"), False)
        elif head in ("assign", "increase", "decrease", "scale-up", "scale-down"):
            if head.startswith("scale"):
                raise ParseError(lst.items[0].span, f"unsupported effect {head!r}")
            if len(lst.items) != 3:
                raise ParseError(lst.span, f"{head} takes a fluent and an expression")
            target = self.fluent(lst.items[1], "num")
            value = self.expr(lst.items[2])
            if _contains_time(value):
                if head == "assign" or kind != PROCESS:
                    raise ParseError(lst.span, "rate effect (#t) outside a process", "an instantaneous effect")
                rate = _strip_time(value)
                if rate is None:
                    raise ParseError(lst.items[2].span, "rate must have the form (* #t expr)", "(* #t expr)")
                return ContinuousRate(target, rate, head == "decrease")
            eff = {"assign": Assign, "increase": Increase, "decrease": Decrease}[head](target, value)
        elif head in ("when", "forall"):
            raise ParseError(lst.items[0].span, f"unsupported effect {head!r}")
        else:
            eff = SetBool(self.fluent(lst, "bool"), True)
        if kind == PROCESS:
            raise ParseError(lst.span, "instantaneous effect inside a process", "(increase f (* #t expr))")
        return eff


def _strip_time(expr: NumericExpr) -> NumericExpr | None:
    if isinstance(expr, BinOp) and expr.op == "*":
        if isinstance(expr.left, TimeDelta) and not _contains_time(expr.right):
            return expr.right
        if isinstance(expr.right, TimeDelta) and not _contains_time(expr.left):
            return expr.left
    return None


def _define(root: SList, what: str) -> tuple[str, list]:
    if _head(root) != "define" or len(root.items) < 2:
        raise ParseError(root.span, f"expected (define ({what} <name>) ...)", "'define'")
    sig = _list(root.items[1], f"({what} <name>)")
    if _head(sig) != what or len(sig.items) != 2:
        raise ParseError(sig.span, f"expected ({what} <name>)", f"'{what}'")
    return _atom(sig.items[1], f"a {what} name").text, root.items[2:]


# ---------------------------------------------------------------------------
# Domains


def parse_domain(text: str, file: str = "<domain>") -> DomainModel:
    root = read_sexpr(text, file)
    name, sections = _define(root, "domain")
    types: list[str] = []
    predicates: dict[str, tuple[str, ...]] = {}
    functions: dict[str, tuple[str, ...]] = {}
    raw_happenings: list[tuple[str, SList]] = []
    for sec in sections:
        sec = _list(sec, "a domain section")
        head = _head(sec)
        if head == ":requirements":
            continue
        if head == ":types":
            for t, parent in _typed_list(sec.items[1:], "a type name"):
                if parent != "object":
                    raise ParseError(sec.span, "type hierarchies are not supported", "flat type names")
                if t not in types:
                    types.append(t)
        elif head in (":predicates", ":functions"):
            table = predicates if head == ":predicates" else functions
            items = sec.items[1:]
            k = 0
            while k < len(items):
                decl = _list(items[k], "a fluent declaration")
                if not decl.items:
                    raise ParseError(decl.span, "empty declaration", "a fluent name")
                fname = _atom(decl.items[0], "a fluent name")
                if fname.text in predicates or fname.text in functions:
                    raise ParseError(fname.span, f"duplicate fluent declaration {fname.text!r}")
                table[fname.text] = tuple(t for _, t in _typed_list(decl.items[1:], "a parameter"))
                k += 1
                # optional "- number" after a function declaration
                if head == ":functions" and k + 1 < len(items) and isinstance(items[k], SAtom) and items[k].text == "-":
                    k += 2
        elif head in (":action", ":event", ":process"):
            raw_happenings.append((head[1:], sec))
        else:
            where = sec.items[0].span if sec.items else sec.span
            raise ParseError(where, f"unknown domain section {head!r}", "a known section keyword")

    declared = set(types) | {"object"}
    for table in (predicates, functions):
        for fname, ptypes in table.items():
            for t in ptypes:
                if t not in declared:
                    raise ParseError(root.span, f"fluent {fname} uses undeclared type {t!r}")

    happenings = []
    seen = set()
    for kind, sec in raw_happenings:
        h = _parse_happening(kind, sec, predicates, functions, declared)
        if h.name in seen:
            raise ParseError(sec.span, f"duplicate happening {h.name!r}")
        seen.add(h.name)
        happenings.append(h)
    return DomainModel(name, tuple(types), predicates, functions, tuple(happenings))


def _parse_happening(kind, sec: SList, predicates, functions, declared) -> Happening:
    if len(sec.items) < 2:
        raise ParseError(sec.span, f"{kind} needs a name", "a name")
    hname = _atom(sec.items[1], f"a {kind} name").text
    fields: dict[str, object] = {}
    items = sec.items[2:]
    if len(items) % 2:
        raise ParseError(sec.span, f"{kind} {hname}: keyword without value")
    for k in range(0, len(items), 2):
        key = _atom(items[k], "a keyword")
        if key.low not in (":parameters", ":precondition", ":effect"):
            raise ParseError(key.span, f"unknown {kind} field {key.text!r}", ":parameters/:precondition/:effect")
        if key.low in fields:
            raise ParseError(key.span, f"duplicate field {key.text!r}")
        fields[key.low] = items[k + 1]
    params: list[tuple[str, str]] = []
    if ":parameters" in fields:
        plist = _list(fields[":parameters"], "a parameter list")
        params = _typed_list(plist.items, "a parameter")
        for p, t in params:
            if not p.startswith("?"):
                raise ParseError(plist.span, f"parameter {p!r} must start with '?'")
            if t not in declared:
                raise ParseError(plist.span, f"parameter {p} has undeclared type {t!r}")
    reader = _Reader(predicates, functions, dict(params))
    pre = reader.condition(fields[":precondition"]) if ":precondition" in fields else Condition()
    effects = reader.effects(fields[":effect"], kind) if ":effect" in fields else ()
    try:
        return Happening(hname, kind, tuple(params), pre, effects)
    except ModelError as exc:
        raise ParseError(sec.span, str(exc)) from None


# ---------------------------------------------------------------------------
# Problems


def parse_problem(text: str, domain: DomainModel | None = None, file: str = "<problem>") -> ProblemSpec:
    """Parse a problem; with ``domain`` given, fluent references are checked."""
    root = read_sexpr(text, file)
    name, sections = _define(root, "problem")
    dom_name = None
    objects: dict[str, str] = {}
    init: dict[tuple[str, ...], bool | float] = {}
    goal: Condition | None = None
    check = domain is not None
    preds = domain.predicates if domain else {}
    funcs = domain.functions if domain else {}
    reader = _Reader(preds, funcs, check=check)
    for sec in sections:
        sec = _list(sec, "a problem section")
        head = _head(sec)
        if head == ":domain":
            if len(sec.items) != 2:
                raise ParseError(sec.span, "expected (:domain <name>)")
            dom_name = _atom(sec.items[1], "a domain name").text
        elif head == ":objects":
            for obj, typ in _typed_list(sec.items[1:], "an object name"):
                if obj in objects:
                    raise ParseError(sec.span, f"duplicate object {obj!r}")
                objects[obj] = typ
        elif head == ":init":
            for fact in sec.items[1:]:
                fact = _list(fact, "an init fact")
                fh = _head(fact)
                if fh == "=":
                    if len(fact.items) != 3:
                        raise ParseError(fact.span, "expected (= (f args) value)")
                    ref = reader.fluent(fact.items[1], "num")
                    val = _number(_atom(fact.items[2], "a number"))
                    if val is None:
                        raise ParseError(fact.items[2].span, "init value must be a number", "a number")
                    key, value = ref.key, val
                elif fh == "not":
                    if len(fact.items) != 2:
                        raise ParseError(fact.span, "'not' takes one argument")
                    key, value = reader.fluent(fact.items[1], "bool").key, False
                else:
                    key, value = reader.fluent(fact, "bool").key, True
                if key in init:
                    raise ParseError(fact.span, f"duplicate init assignment for {' '.join(key)}")
                init[key] = value
        elif head == ":goal":
            if len(sec.items) != 2 or (isinstance(sec.items[1], SList) and not sec.items[1].items):
                raise ParseError(sec.span, "goal is required", "(:goal <condition>)")
            goal = reader.condition(sec.items[1])
        else:
            where = sec.items[0].span if sec.items else sec.span
            raise ParseError(where, f"unknown problem section {head!r}", ":domain/:objects/:init/:goal")
    if dom_name is None:
        raise ParseError(root.span, "missing (:domain <name>)", "(:domain <name>)")
    if goal is None:
        raise ParseError(root.span, "missing goal", "(:goal <condition>)")
    if domain is not None:
        declared = set(domain.types) | {"object"}
        for obj, typ in objects.items():
            if typ not in declared:
                raise ParseError(root.span, f"object {obj} has undeclared type {typ!r}")
    return ProblemSpec(name, dom_name, objects, init, goal)


# ---------------------------------------------------------------------------
# Printing


def format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e15 and not (x == 0 and str(x).startswith("-")):
        return str(int(x))
    return repr(float(x))


def _fmt_ref(ref: FluentRef) -> str:
    return "(" + " ".join((ref.name, *ref.args)) + ")"


def format_expr(e: NumericExpr) -> str:
    if isinstance(e, Const):
        return format_number(e.value)
    if isinstance(e, FluentRef):
        return _fmt_ref(e)
    if isinstance(e, Neg):
        return f"(- {format_expr(e.operand)})"
    if isinstance(e, Call):
        return f"({e.func} {format_expr(e.operand)})"
    if isinstance(e, BinOp):
        return f"({e.op} {format_expr(e.left)} {format_expr(e.right)})"
    if isinstance(e, TimeDelta):
        return "#t"
    raise TypeError(e)


def format_literal(lit: Atom | Comparison) -> str:
    if isinstance(lit, Atom):
        atom = _fmt_ref(FluentRef(lit.name, lit.args))
        return atom if lit.positive else f"(not {atom})"
    return f"({lit.op} {format_expr(lit.left)} {format_expr(lit.right)})"


def format_condition(c: Condition) -> str:
    return "(and" + "".join(" " + format_literal(l) for l in c.literals) + ")"


def format_effect(e: Effect) -> str:
    if isinstance(e, SetBool):
        atom = _fmt_ref(e.target)
        return atom if e.value else f"(not {atom})"
    if isinstance(e, ContinuousRate):
        op = "decrease" if e.negative else "increase"
        return f"({op} {_fmt_ref(e.target)} (* #t {format_expr(e.rate)}))"
    op = {Assign: "assign", Increase: "increase", Decrease: "decrease"}[type(e)]
    return f"({op} {_fmt_ref(e.target)} {format_expr(e.expr)})"


def _fmt_typed(pairs) -> str:
    return " ".join(f"{a} - {t}" for a, t in pairs)


def print_domain(domain: DomainModel) -> str:
    out = [f"(define (domain {domain.name})"]
    out.append("  (:types" + "".join(" " + t for t in domain.types) + ")")
    out.append("  (:predicates")
    for p, ts in domain.predicates.items():
        out.append(f"    ({p}{' ' + _fmt_typed((f'?a{i}', t) for i, t in enumerate(ts)) if ts else ''})")
    out.append("  )")
    out.append("  (:functions")
    for f, ts in domain.functions.items():
        out.append(f"    ({f}{' ' + _fmt_typed((f'?a{i}', t) for i, t in enumerate(ts)) if ts else ''})")
    out.append("  )")
    for h in domain.happenings:
        out.append(f"  (:{h.kind} {h.name}")
        out.append(f"    :parameters ({_fmt_typed(h.parameters)})")
        out.append(f"    :precondition {format_condition(h.precondition)}")
        out.append("    :effect (and")
        for e in h.effects:
            out.append(f"      {format_effect(e)}")
        out.append("    ))")
    out.append(")")
    return "\n".join(out) + "\n"


def print_problem(problem: ProblemSpec) -> str:
    out = [f"(define (problem {problem.name})", f"  (:domain {problem.domain})"]
    out.append("  (:objects" + "".join(f" {o} - {t}" for o, t in problem.objects.items()) + ")")
    out.append("  (:init")
    for key, value in problem.init.items():
        ref = _fmt_ref(FluentRef(key[0], tuple(key[1:])))
        if isinstance(value, bool):
            out.append(f"    {ref if value else '(not ' + ref + ')'}")
        else:
            out.append(f"    (= {ref} {format_number(value)})")
    out.append("  )")
    out.append(f"  (:goal {format_condition(problem.goal)})")
    out.append(")")
    return "\n".join(out) + "\n"


def load_domain(path) -> DomainModel:
    with open(path, encoding="utf-8") as fh:
        return parse_domain(fh.read(), str(path))


def load_problem(path, domain: DomainModel | None = None) -> ProblemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read(), domain, str(path))


__all__ = [
    "ParseError", "SourceSpan", "parse_domain", "parse_problem", "print_domain", "print_problem",
    "load_domain", "load_problem", "format_condition", "format_expr", "format_number",
    "ACTION", "EVENT", "PROCESS",
]
