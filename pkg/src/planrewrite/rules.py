"""Plan-rewriting rules and the interpreted-predicate registry.

A rule has an antecedent (node specs, link specs, constraints), a replaced
subplan (node variables and link specs) and a replacement subplan (new node
specs and link specs). Interpreted predicates are host functions with
declared binding modes: each mode is a string over ``b`` (argument must be
bound before the call) and ``f`` (argument may be free; the function
generates it).
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Iterable, Sequence

from .model import is_var
from .plan import PSEUDO, PartialPlan, chain_depths
from .sexpr import SExpr, dumps, keyword_args, read_all


class RuleError(ValueError):
    """A rule is malformed or unsafe."""


# -- rule structures ------------------------------------------------------------


@dataclass(frozen=True)
class NodeSpec:
    var: str
    atom: tuple | None = None
    resource: bool = False

    def variables(self) -> set[str]:
        return {t for t in (self.atom or ())[1:] if is_var(t)}


@dataclass(frozen=True)
class LinkSpec:
    kind: str  # "ordering" | "causal" | "threat"
    src: str
    dst: str
    condition: tuple | None = None

    def variables(self) -> set[str]:
        return {t for t in (self.condition or ())[1:] if is_var(t)}


@dataclass(frozen=True)
class ConstraintCall:
    name: str
    args: tuple

    def variables(self) -> set[str]:
        return {a for a in self.args if is_var(a)}


@dataclass(frozen=True)
class RewritingRule:
    name: str
    nodes: tuple = ()
    links: tuple = ()
    constraints: tuple = ()
    replace_nodes: tuple = ()
    replace_links: tuple = ()
    with_nodes: tuple = ()
    with_links: tuple = ()
    fully_specified: bool = False

    def node_vars(self) -> set[str]:
        out = {n.var for n in self.nodes}
        for l in self.links:
            out |= {l.src, l.dst}
        return out

    def antecedent_vars(self) -> set[str]:
        out = self.node_vars()
        for n in self.nodes:
            out |= n.variables()
        for l in self.links:
            out |= l.variables()
        for c in self.constraints:
            out |= c.variables()
        return out

    def replaced_vars(self) -> set[str]:
        out = set(self.replace_nodes)
        for l in self.replace_links:
            out |= {l.src, l.dst} | l.variables()
        return out

    def new_node_vars(self) -> list[str]:
        return [n.var for n in self.with_nodes]


# -- registry -------------------------------------------------------------------


class MatchContext:
    """The plan snapshot handed to interpreted predicates, with lazily
    cached analyses."""

    def __init__(self, plan: PartialPlan):
        self.plan = plan

    @cached_property
    def chains(self) -> tuple[int, dict[int, int], dict[int, int]]:
        return chain_depths(self.plan)

    @cached_property
    def direct_edges(self) -> set[tuple[int, int]]:
        return self.plan.edges()


Evaluator = Callable[[MatchContext, tuple], Iterable[tuple]]


@dataclass(frozen=True)
class InterpretedPredicate:
    name: str
    arity: int
    modes: tuple
    fn: Evaluator
    doc: str = ""

    def schedulable(self, bound: Sequence[bool]) -> bool:
        return any(all(b or m == "f" for b, m in zip(bound, mode)) for mode in self.modes)


def test_predicate(name: str, arity: int, check: Callable[..., bool], doc: str = "") -> InterpretedPredicate:
    """Wrap a boolean ``check(ctx, *args)`` as an all-bound filter."""

    def fn(ctx: MatchContext, args: tuple) -> Iterable[tuple]:
        return [args] if check(ctx, *args) else []

    return InterpretedPredicate(name, arity, ("b" * arity,), fn, doc)


class Registry:
    def __init__(self, entries: Iterable[InterpretedPredicate] = ()):
        self._entries: dict[str, InterpretedPredicate] = {}
        for e in entries:
            self.register(e)

    def register(self, entry: InterpretedPredicate) -> "Registry":
        if entry.name in self._entries:
            raise RuleError(f"interpreted predicate {entry.name} is already registered")
        if any(len(m) != entry.arity or set(m) - {"b", "f"} for m in entry.modes):
            raise RuleError(f"bad modes for {entry.name}")
        self._entries[entry.name] = entry
        return self

    def extended(self, *entries: InterpretedPredicate) -> "Registry":
        new = Registry(self._entries.values())
        for e in entries:
            new.register(e)
        return new

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __getitem__(self, name: str) -> InterpretedPredicate:
        try:
            return self._entries[name]
        except KeyError:
            raise RuleError(f"unknown interpreted predicate {name}") from None

    def names(self) -> list[str]:
        return sorted(self._entries)


def register_interpreted(registry: Registry, entry: InterpretedPredicate) -> Registry:
    return registry.extended(entry)


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _compare(name: str, op: Callable[[Any, Any], bool]) -> InterpretedPredicate:
    def check(ctx, a, b):
        return _is_number(a) and _is_number(b) and op(a, b)
    return test_predicate(name, 2, check)


def _arith(name: str, fwd: Callable, inv_left: Callable | None, inv_right: Callable | None) -> InterpretedPredicate:
    """``(op a b c)`` holds when ``c = a op b``; any one argument may be free."""

    def fn(ctx, args):
        a, b, c = args
        try:
            if a is not None and b is not None:
                if not (_is_number(a) and _is_number(b)):
                    return []
                val = fwd(Fraction(a), Fraction(b))
                val = int(val) if val.denominator == 1 else val
                return [(a, b, val)] if c is None or c == val else []
            if c is None or not _is_number(c):
                return []
            if a is None and inv_left is not None and _is_number(b):
                val = inv_left(Fraction(c), Fraction(b))
                return [(int(val) if val.denominator == 1 else val, b, c)]
            if b is None and inv_right is not None and _is_number(a):
                val = inv_right(Fraction(c), Fraction(a))
                return [(a, int(val) if val.denominator == 1 else val, c)]
        except ZeroDivisionError:
            return []
        return []

    modes = ["bbf", "bbb"]
    if inv_left is not None:
        modes.append("fbb")
    if inv_right is not None:
        modes.append("bfb")
    return InterpretedPredicate(name, 3, tuple(modes), fn)


REGULAR_SHAPES = ("cylindrical", "rectangular")


def _regular_shapes(ctx, args):
    (s,) = args
    if s is None:
        return [(x,) for x in REGULAR_SHAPES]
    return [(s,)] if s in REGULAR_SHAPES else []


def _in_cp(ctx: MatchContext, n) -> bool:
    if n in PSEUDO or n not in ctx.plan.steps:
        return False
    length, head, tail = ctx.chains
    return head[n] + tail[n] - 1 == length


def _adj_cp(ctx: MatchContext, a, b) -> bool:
    if a in PSEUDO or b in PSEUDO or a not in ctx.plan.steps or b not in ctx.plan.steps:
        return False
    length, head, tail = ctx.chains
    return (a, b) in ctx.direct_edges and head[a] + tail[b] == length


def _steps_ok(ctx: MatchContext, *xs) -> bool:
    return all(isinstance(x, int) and x in ctx.plan.steps for x in xs)


def builtin_library() -> Registry:
    from .queryterms import join_swappable

    entries = [
        test_predicate(":neq", 2, lambda ctx, a, b: a != b),
        test_predicate(":eq", 2, lambda ctx, a, b: a == b),
        _compare("<", operator.lt),
        _compare("<=", operator.le),
        _compare(">", operator.gt),
        _compare(">=", operator.ge),
        _arith("+", operator.add, operator.sub, operator.sub),
        _arith("-", operator.sub, operator.add, lambda c, a: a - c),
        _arith("*", operator.mul, lambda c, b: c / b, lambda c, a: c / a),
        _arith("/", operator.truediv, operator.mul, lambda c, a: a / c),
        test_predicate("possibly-adjacent", 2,
                       lambda ctx, a, b: _steps_ok(ctx, a, b) and ctx.plan.possibly_adjacent(a, b)),
        test_predicate("before", 2, lambda ctx, a, b: _steps_ok(ctx, a, b) and ctx.plan.precedes(a, b)),
        test_predicate("directly-before", 2,
                       lambda ctx, a, b: _steps_ok(ctx, a, b) and (a, b) in ctx.direct_edges),
        test_predicate("in-critical-path", 1, _in_cp),
        test_predicate("adjacent-in-critical-path", 2, _adj_cp),
        InterpretedPredicate("regular-shapes", 1, ("f",), _regular_shapes),
        InterpretedPredicate("join-swappable", 16, ("b" * 8 + "f" * 8,), join_swappable),
    ]
    return Registry(entries)


# -- parsing --------------------------------------------------------------------


def _is_single(x: SExpr) -> bool:
    """A list whose head is a symbol is one spec rather than a list of specs."""
    return isinstance(x, list) and bool(x) and isinstance(x[0], str)


def _spec_list(x: SExpr) -> list:
    if x in ("nil", []):
        return []
    if not isinstance(x, list):
        raise RuleError(f"expected a list, got {dumps(x)}")
    return [x] if _is_single(x) else list(x)


def _node(x: SExpr) -> NodeSpec:
    if isinstance(x, str) and is_var(x):
        return NodeSpec(x)
    if not (isinstance(x, list) and x and is_var(x[0])):
        raise RuleError(f"bad node spec {dumps(x)}")
    var, rest = x[0], x[1:]
    resource = False
    if rest and rest[-1] == ":resource":
        resource, rest = True, rest[:-1]
    if len(rest) > 1:
        raise RuleError(f"bad node spec {dumps(x)}")
    atom = None
    if rest:
        if not (isinstance(rest[0], list) and rest[0] and isinstance(rest[0][0], str)):
            raise RuleError(f"bad node predicate in {dumps(x)}")
        atom = tuple(rest[0])
    return NodeSpec(var, atom, resource)


def _nodes(x: SExpr) -> list[NodeSpec]:
    if x in ("nil", []):
        return []
    if isinstance(x, list) and x and is_var(x[0]):
        # either one spec (?n (pred ...)) or a flat list of variables (?n1 ?n2)
        if all(isinstance(e, str) and is_var(e) for e in x):
            return [NodeSpec(v) for v in x]
        return [_node(x)]
    return [_node(e[0] if isinstance(e, list) and len(e) == 1 else e) for e in x]


def _link(x: SExpr) -> LinkSpec:
    if not (isinstance(x, list) and len(x) in (2, 3) and is_var(x[0]) and is_var(x[-1])):
        raise RuleError(f"bad link spec {dumps(x)}")
    if len(x) == 2:
        return LinkSpec("ordering", x[0], x[1])
    if x[1] == ":threat":
        return LinkSpec("threat", x[0], x[2])
    if not (isinstance(x[1], list) and x[1] and isinstance(x[1][0], str)):
        raise RuleError(f"bad link condition in {dumps(x)}")
    return LinkSpec("causal", x[0], x[2], tuple(x[1]))


def _links(x: SExpr) -> list[LinkSpec]:
    if x in ("nil", []):
        return []
    if isinstance(x, list) and x and is_var(x[0]):
        return [_link(x)]
    return [_link(e) for e in x]


def _constraints(x: SExpr) -> list[ConstraintCall]:
    out = []
    for c in _spec_list(x):
        if not (isinstance(c, list) and c and isinstance(c[0], str)):
            raise RuleError(f"bad constraint {dumps(c)}")
        for a in c[1:]:
            if isinstance(a, list):
                raise RuleError(f"nested term in constraint {dumps(c)}")
        out.append(ConstraintCall(c[0], tuple(c[1:])))
    return out


def _graph(x: SExpr, allowed: set[str]) -> dict[str, SExpr]:
    if x in ("nil", []):
        return {}
    if not isinstance(x, list):
        raise RuleError(f"expected a graph spec, got {dumps(x)}")
    try:
        kw = keyword_args(x)
    except ValueError as exc:
        raise RuleError(str(exc)) from None
    extra = set(kw) - allowed
    if extra:
        raise RuleError(f"unexpected fields {sorted(extra)}")
    return kw


def _parse_form(form: list, registry: Registry) -> RewritingRule:
    try:
        kw = keyword_args(form, 1)
    except ValueError as exc:
        raise RuleError(str(exc)) from None
    name = kw.get(":name")
    if not isinstance(name, str):
        raise RuleError("rule without :name")
    unknown = set(kw) - {":name", ":if", ":replace", ":with", ":links", ":constraints", ":fully-specified"}
    if unknown:
        raise RuleError(f"rule {name}: unexpected fields {sorted(unknown)}")
    ante = _graph(kw.get(":if", []), {":operators", ":links", ":constraints"})
    # accept antecedent fields written after a prematurely closed :if
    for key in (":links", ":constraints"):
        if key in kw:
            if key in ante:
                raise RuleError(f"rule {name}: {key} given twice")
            ante[key] = kw[key]
    rep = _graph(kw.get(":replace", []), {":operators", ":links"})
    wth = _graph(kw.get(":with", []), {":operators", ":links"})
    rule = RewritingRule(
        name=name,
        nodes=tuple(_nodes(ante.get(":operators", []))),
        links=tuple(_links(ante.get(":links", []))),
        constraints=tuple(_constraints(ante.get(":constraints", []))),
        replace_nodes=tuple(n.var for n in _nodes(rep.get(":operators", []))),
        replace_links=tuple(_links(rep.get(":links", []))),
        with_nodes=tuple(_nodes(wth.get(":operators", []))),
        with_links=tuple(_links(wth.get(":links", []))),
        fully_specified=kw.get(":fully-specified", "nil") not in ("nil", []),
    )
    check_rule(rule, registry)
    return rule


def check_rule(rule: RewritingRule, registry: Registry) -> None:
    """Static well-formedness and safety checks."""
    name = rule.name
    node_vars = rule.node_vars()
    term_vars = set()
    for n in rule.nodes:
        term_vars |= n.variables()
        if n.atom is None:
            raise RuleError(f"rule {name}: antecedent node {n.var} has no predicate")
    for l in rule.links:
        term_vars |= l.variables()
    clash = node_vars & term_vars
    if clash:
        raise RuleError(f"rule {name}: {sorted(clash)} used both as node and term variable")
    bound = set(node_vars | term_vars)
    pending = list(rule.constraints)
    while pending:
        progress = False
        for c in list(pending):
            entry = registry[c.name]
            if len(c.args) != entry.arity:
                raise RuleError(f"rule {name}: {c.name} expects {entry.arity} arguments, got {len(c.args)}")
            mask = [not is_var(a) or a in bound for a in c.args]
            if entry.schedulable(mask):
                bound |= c.variables()
                pending.remove(c)
                progress = True
        if not progress:
            c = pending[0]
            free = [a for a in c.args if is_var(a) and a not in bound]
            raise RuleError(f"rule {name}: constraint {c.name} cannot bind {free[0] if free else '?'}")
    ante = rule.antecedent_vars()
    for v in rule.replaced_vars():
        if v not in ante:
            raise RuleError(f"rule {name}: replaced variable {v} does not occur in the antecedent")
    new = set()
    for n in rule.with_nodes:
        if n.atom is None:
            raise RuleError(f"rule {name}: replacement node {n.var} has no predicate")
        if n.var in ante:
            raise RuleError(f"rule {name}: replacement node {n.var} reuses an antecedent variable")
        for v in n.variables():
            if v not in bound:
                raise RuleError(f"rule {name}: variable {v} of replacement node {n.var} is unbound")
        new.add(n.var)
    for l in rule.with_links:
        if l.kind == "threat":
            raise RuleError(f"rule {name}: :threat links cannot be added")
        for v in (l.src, l.dst):
            if v not in node_vars and v not in new:
                raise RuleError(f"rule {name}: replacement link endpoint {v} is unbound")
        for v in l.variables():
            if v not in bound:
                raise RuleError(f"rule {name}: variable {v} in replacement link is unbound")


def parse_rules(text: str, registry: Registry | None = None) -> list[RewritingRule]:
    registry = registry or builtin_library()
    rules = []
    for form in read_all(text):
        if not (isinstance(form, list) and form and form[0] == "define-rule"):
            raise RuleError(f"expected define-rule, got {dumps(form)[:40]}")
        rules.append(_parse_form(form, registry))
    names = [r.name for r in rules]
    if len(names) != len(set(names)):
        raise RuleError("duplicate rule names")
    return rules


def parse_rule(text: str, registry: Registry | None = None) -> RewritingRule:
    rules = parse_rules(text, registry)
    if len(rules) != 1:
        raise RuleError(f"expected one rule, found {len(rules)}")
    return rules[0]


# -- printing -------------------------------------------------------------------


def _node_sexpr(n: NodeSpec) -> list:
    out: list = [n.var]
    if n.atom is not None:
        out.append(list(n.atom))
    if n.resource:
        out.append(":resource")
    return out


def _link_sexpr(l: LinkSpec) -> list:
    if l.kind == "ordering":
        return [l.src, l.dst]
    if l.kind == "threat":
        return [l.src, ":threat", l.dst]
    return [l.src, list(l.condition), l.dst]


def rule_sexpr(rule: RewritingRule) -> list:
    ante: list = [":operators", [_node_sexpr(n) for n in rule.nodes]]
    if rule.links:
        ante += [":links", [_link_sexpr(l) for l in rule.links]]
    if rule.constraints:
        ante += [":constraints", [[c.name, *c.args] for c in rule.constraints]]
    rep: list = []
    if rule.replace_nodes:
        rep += [":operators", list(rule.replace_nodes)]
    if rule.replace_links:
        rep += [":links", [_link_sexpr(l) for l in rule.replace_links]]
    wth: list = []
    if rule.with_nodes:
        wth += [":operators", [_node_sexpr(n) for n in rule.with_nodes]]
    if rule.with_links:
        wth += [":links", [_link_sexpr(l) for l in rule.with_links]]
    form = ["define-rule", ":name", rule.name, ":if", ante, ":replace", rep or "nil", ":with", wth or "nil"]
    if rule.fully_specified:
        form += [":fully-specified", "t"]
    return form


def print_rule(rule: RewritingRule) -> str:
    return dumps(rule_sexpr(rule)) + "\n"


def print_rules(rules: Iterable[RewritingRule]) -> str:
    return "\n".join(print_rule(r) for r in rules)
