"""Domain and problem representation: atoms, operator schemas with
conditional / universally quantified effects and unit resources, grounding,
and closed-world state evaluation.

Atoms are plain tuples ``(predicate, arg1, ...)``. A term is a variable when
it is a string starting with ``?``; anything else is a constant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence, Union

from .sexpr import SExpr, dumps, keyword_args, read_all

Atom = tuple
State = frozenset

STATIC_BUILTINS = (":neq", ":eq")


class DomainError(ValueError):
    """A domain or problem description is malformed or inconsistent."""


class GroundingError(ValueError):
    """An operator could not be instantiated with the given binding."""


class ConstraintViolation(GroundingError):
    """A static precondition constraint (e.g. ``:neq``) is false for the binding."""


class PreconditionError(ValueError):
    """An action was applied in a state that does not satisfy it."""


def is_var(term: Any) -> bool:
    return isinstance(term, str) and term.startswith("?")


def is_ground(atom: Atom) -> bool:
    return not any(is_var(t) for t in atom[1:])


def atom_str(atom: Atom) -> str:
    return dumps(list(atom))


def substitute(atom: Atom, binding: Mapping[str, Any]) -> Atom:
    return (atom[0],) + tuple(binding.get(t, t) if is_var(t) else t for t in atom[1:])


# -- formulas -----------------------------------------------------------------


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Not:
    part: Any


Formula = Union[Atom, And, Not]


def _default_static(name: str, args: Sequence[Any]) -> bool:
    if name == ":neq":
        return args[0] != args[1]
    if name == ":eq":
        return args[0] == args[1]
    raise DomainError(f"no evaluator for interpreted predicate {name}")


def holds(state: Iterable[Atom], formula: Any,
          evaluators: Mapping[str, Callable[..., bool]] | None = None) -> bool:
    """Evaluate a ground formula under the closed world assumption.

    ``formula`` may be an atom, ``And``, ``Not`` or a set of atoms read as a
    conjunction. Interpreted atoms (``:neq`` and any name in ``evaluators``)
    are computed rather than looked up.
    """
    if not isinstance(state, (set, frozenset)):
        state = frozenset(state)
    if isinstance(formula, And):
        return all(holds(state, p, evaluators) for p in formula.parts)
    if isinstance(formula, Not):
        return not holds(state, formula.part, evaluators)
    if isinstance(formula, (set, frozenset, list)):
        return all(holds(state, p, evaluators) for p in formula)
    if not is_ground(formula):
        raise ValueError(f"formula is not ground: {atom_str(formula)}")
    name = formula[0]
    if evaluators and name in evaluators:
        return bool(evaluators[name](*formula[1:]))
    if name in STATIC_BUILTINS:
        return _default_static(name, formula[1:])
    return formula in state


# -- schemas ------------------------------------------------------------------


@dataclass(frozen=True)
class EffectForm:
    positive: bool
    atom: Atom
    quantified_vars: tuple = ()
    condition: tuple = ()  # conjunction of interpreted atoms


@dataclass(frozen=True)
class OperatorSchema:
    name: str
    parameters: tuple
    preconditions: tuple = ()       # positive literals
    neg_preconditions: tuple = ()   # negated literals
    constraints: tuple = ()         # interpreted atoms checked at grounding
    effects: tuple = ()
    resources: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class DomainSpec:
    name: str
    operators: tuple
    sorts: tuple = ()            # ((sort, (values...)), ...)
    interpreted: tuple = ()      # names of host-evaluated static predicates
    evaluators: Mapping[str, Callable[..., bool]] = field(default_factory=dict, compare=False, repr=False)

    def operator(self, name: str) -> OperatorSchema:
        for op in self.operators:
            if op.name == name:
                return op
        raise KeyError(f"unknown operator {name}")

    @property
    def universes(self) -> dict[str, tuple]:
        return dict(self.sorts)

    def bind(self, evaluators: Mapping[str, Callable[..., bool]]) -> "DomainSpec":
        """Return a copy whose interpreted predicates use ``evaluators``."""
        merged = dict(self.evaluators)
        merged.update(evaluators)
        return DomainSpec(self.name, self.operators, self.sorts, self.interpreted, merged)

    def ground(self, name: str, args: Sequence[Any]) -> "GroundAction":
        schema = self.operator(name)
        if len(args) != schema.arity:
            raise GroundingError(f"{name} expects {schema.arity} arguments, got {len(args)}")
        return instantiate(schema, dict(zip(schema.parameters, args)), self.universes, self.evaluators)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: str
    objects: tuple
    init: frozenset
    goal: tuple
    extras: tuple = ()  # other (:keyword value) pairs, kept verbatim

    def extra(self, key: str, default: Any = None) -> Any:
        return dict(self.extras).get(key, default)


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple
    preconditions: frozenset = frozenset()
    adds: frozenset = frozenset()
    deletes: frozenset = frozenset()
    resources: frozenset = frozenset()
    neg_preconditions: frozenset = frozenset()

    def __str__(self) -> str:
        return f"{self.name}({' '.join(dumps(a) for a in self.args)})"

    @property
    def signature(self) -> tuple:
        return (self.name,) + self.args


# -- parsing ------------------------------------------------------------------


class _Arity:
    def __init__(self, interpreted: set[str]):
        self.seen: dict[str, int] = {}
        self.interpreted = interpreted

    def check(self, atom: Atom, where: str) -> None:
        name = atom[0]
        if name.startswith(":") or name in self.interpreted:
            return
        n = len(atom) - 1
        if self.seen.setdefault(name, n) != n:
            raise DomainError(f"predicate {name} used with arity {n} in {where}, "
                              f"previously {self.seen[name]}")


def _as_atom(x: SExpr, where: str) -> Atom:
    if not isinstance(x, list) or not x or not isinstance(x[0], str):
        raise DomainError(f"expected an atom in {where}, got {dumps(x)}")
    for t in x[1:]:
        if isinstance(t, list):
            raise DomainError(f"nested term in {where}: {dumps(x)}")
    return tuple(x)


def _conjuncts(x: SExpr) -> list:
    if x in ("nil", []):
        return []
    if isinstance(x, list) and x and (x[0] == ":and" or isinstance(x[0], list)):
        out = []  # (:and a b ...) or a bare list (a b ...)
        for part in (x[1:] if x[0] == ":and" else x):
            out.extend(_conjuncts(part))
        return out
    return [x]


def _is_static(name: str, interpreted: set[str]) -> bool:
    return name.startswith(":") or name in interpreted


def _parse_precondition(x: SExpr, op: str, interpreted: set[str], arity: _Arity):
    pos, neg, cons = [], [], []
    for lit in _conjuncts(x):
        if isinstance(lit, list) and lit and lit[0] == ":or":
            raise DomainError(f"disjunctive precondition in {op} is not supported")
        if isinstance(lit, list) and lit and lit[0] == ":not":
            atom = _as_atom(lit[1], op)
            if _is_static(atom[0], interpreted):
                cons.append((":not",) + atom)
            else:
                arity.check(atom, op)
                neg.append(atom)
            continue
        atom = _as_atom(lit, op)
        if _is_static(atom[0], interpreted):
            cons.append(atom)
        else:
            arity.check(atom, op)
            pos.append(atom)
    return tuple(pos), tuple(neg), tuple(cons)


def _quantified(spec: SExpr, op: str) -> list[str]:
    if not isinstance(spec, list):
        raise DomainError(f"bad quantifier variable list in {op}")
    out = []
    i = 0
    while i < len(spec):
        v = spec[i]
        if not is_var(v):
            raise DomainError(f"quantified term {dumps(v)} in {op} is not a variable")
        if i + 2 < len(spec) + 1 and i + 1 < len(spec) and spec[i + 1] == "-":
            out.append(f"{v}-{spec[i + 2]}")  # typed: ?w - width
            i += 3
        else:
            out.append(v)
            i += 1
    return out


def quantifier_sort(var: str) -> tuple[str, str]:
    """Split a quantified variable into (variable, sort).

    An untyped ``?surf`` ranges over the sort ``surf``; a typed ``?w - width``
    is stored as ``?w-width`` and ranges over ``width``.
    """
    if "-" in var and var.rsplit("-", 1)[1]:
        base, sort = var.rsplit("-", 1)
        if base.startswith("?") and len(base) > 1:
            return base, sort
    return var, var[1:]


def _parse_effect(x: SExpr, op: str, interpreted: set[str], arity: _Arity,
                  qvars: tuple = (), cond: tuple = ()) -> list[EffectForm]:
    out: list[EffectForm] = []
    if x in ("nil", []):
        return out
    if not isinstance(x, list) or not x:
        raise DomainError(f"bad effect in {op}: {dumps(x)}")
    head = x[0]
    if head == ":and":
        for part in x[1:]:
            out.extend(_parse_effect(part, op, interpreted, arity, qvars, cond))
    elif head == ":or":
        raise DomainError(f"disjunctive effect in {op} is not supported")
    elif head == ":forall":
        more = tuple(_quantified(x[1], op))
        for part in x[2:]:
            out.extend(_parse_effect(part, op, interpreted, arity, qvars + more, cond))
    elif head == ":when":
        guard = []
        for lit in _conjuncts(x[1]):
            if isinstance(lit, list) and lit and lit[0] == ":not":
                inner = _as_atom(lit[1], op)
                if not _is_static(inner[0], interpreted):
                    raise DomainError(f"conditional effect in {op} depends on fluent {atom_str(inner)}")
                guard.append((":not",) + inner)
                continue
            atom = _as_atom(lit, op)
            if not _is_static(atom[0], interpreted):
                raise DomainError(f"conditional effect in {op} depends on fluent {atom_str(atom)}")
            guard.append(atom)
        for part in x[2:]:
            out.extend(_parse_effect(part, op, interpreted, arity, qvars, cond + tuple(guard)))
    elif head == ":not":
        atom = _as_atom(x[1], op)
        arity.check(atom, op)
        out.append(EffectForm(False, atom, qvars, cond))
    else:
        atom = _as_atom(x, op)
        arity.check(atom, op)
        out.append(EffectForm(True, atom, qvars, cond))
    return out


def _parse_operator(form: list, interpreted: set[str], arity: _Arity) -> OperatorSchema:
    name = form[1][1]
    try:
        kw = keyword_args(form, 2)
    except ValueError as exc:
        raise DomainError(f"operator {name}: {exc}") from None
    unknown = set(kw) - {":parameters", ":precondition", ":effect", ":resources"}
    if unknown:
        raise DomainError(f"operator {name}: unknown fields {sorted(unknown)}")
    params = kw.get(":parameters", [])
    params = [] if params == "nil" else params
    if not isinstance(params, list) or not all(is_var(p) for p in params):
        raise DomainError(f"operator {name}: parameters must be variables")
    pos, neg, cons = _parse_precondition(kw.get(":precondition", []), name, interpreted, arity)
    effects = _parse_effect(kw.get(":effect", []), name, interpreted, arity)
    resources = kw.get(":resources", [])
    resources = [] if resources == "nil" else resources
    res = tuple(_as_atom(r, name) for r in resources)
    schema = OperatorSchema(name, tuple(params), pos, neg, cons, tuple(effects), res)
    _check_schema_vars(schema)
    return schema


def _check_schema_vars(schema: OperatorSchema) -> None:
    params = set(schema.parameters)
    for atom in schema.preconditions + schema.neg_preconditions + schema.constraints + schema.resources:
        for t in atom[1:]:
            if is_var(t) and t not in params:
                raise DomainError(f"operator {schema.name}: variable {t} is not a parameter")
    for eff in schema.effects:
        local = params | {quantifier_sort(v)[0] for v in eff.quantified_vars}
        for atom in (eff.atom,) + eff.condition:
            for t in atom[1:]:
                if is_var(t) and t not in local:
                    raise DomainError(f"operator {schema.name}: effect variable {t} is unbound")


def parse_domain(text: str, sorts: Mapping[str, Iterable[Any]] | None = None,
                 name: str | None = None) -> DomainSpec:
    """Parse operator definitions, sort declarations and interpreted-predicate
    declarations. ``sorts`` supplies extra quantifier universes."""
    universes: dict[str, tuple] = {k: tuple(v) for k, v in (sorts or {}).items()}
    interpreted: list[str] = []
    operator_forms: list[list] = []
    domain_name = name

    def header_item(item: SExpr) -> None:
        if isinstance(item, list) and item and item[0] == ":sort":
            universes[item[1]] = tuple(item[2:])
        elif isinstance(item, list) and item and item[0] == ":interpreted":
            interpreted.extend(item[1:])
        elif isinstance(item, list) and item and item[0] == "define":
            top(item)
        else:
            raise DomainError(f"unexpected domain item {dumps(item)}")

    def top(form: SExpr) -> None:
        nonlocal domain_name
        if not (isinstance(form, list) and len(form) >= 2 and form[0] == "define" and isinstance(form[1], list)):
            if isinstance(form, list) and form and form[0] in (":sort", ":interpreted"):
                header_item(form)
                return
            raise DomainError(f"expected a define form, got {dumps(form)[:60]}")
        kind = form[1][0]
        if kind == "domain":
            domain_name = domain_name or form[1][1]
            for item in form[2:]:
                header_item(item)
        elif kind == "operator":
            operator_forms.append(form)
        else:
            raise DomainError(f"unknown definition kind {kind}")

    for form in read_all(text):
        top(form)
    interp = set(interpreted)
    arity = _Arity(interp)
    ops = tuple(_parse_operator(f, interp, arity) for f in operator_forms)
    names = [op.name for op in ops]
    if len(set(names)) != len(names):
        raise DomainError("duplicate operator names")
    for op in ops:
        for eff in op.effects:
            for v in eff.quantified_vars:
                sort = quantifier_sort(v)[1]
                if sort not in universes:
                    raise DomainError(f"operator {op.name}: quantifier over undeclared sort {sort}")
    return DomainSpec(domain_name or "unnamed", ops, tuple(sorted(universes.items())), tuple(interpreted))


def parse_problem(text: str) -> ProblemSpec:
    forms = read_all(text)
    if len(forms) != 1:
        raise DomainError("a problem file holds exactly one define form")
    form = forms[0]
    if not (isinstance(form, list) and form[:1] == ["define"] and form[1][0] == "problem"):
        raise DomainError("expected (define (problem NAME) ...)")
    kw = keyword_args(form, 2)
    objects = kw.get(":objects", [])
    init = [_as_atom(a, "init") for a in _conjuncts(kw.get(":init", []))]
    goal = []
    for g in _conjuncts(kw.get(":goal", [])):
        goal.append(_as_atom(g, "goal"))
    for a in init + goal:
        if not is_ground(a):
            raise DomainError(f"problem atoms must be ground: {atom_str(a)}")
    extras = tuple((k, v) for k, v in kw.items() if k not in (":domain", ":objects", ":init", ":goal"))
    return ProblemSpec(form[1][1], kw.get(":domain", "unnamed"), tuple(objects if objects != "nil" else ()),
                       frozenset(init), tuple(goal), extras)


# -- printing -----------------------------------------------------------------


def _conj(items: list) -> SExpr:
    if len(items) == 1:
        return items[0]
    return [":and"] + items


def _effect_sexpr(eff: EffectForm) -> SExpr:
    body: SExpr = list(eff.atom) if eff.positive else [":not", list(eff.atom)]
    if eff.condition:
        conds = [[":not", list(c[1:])] if c[0] == ":not" else list(c) for c in eff.condition]
        body = [":when", _conj(conds), body]
    if eff.quantified_vars:
        qv: list = []
        for v in eff.quantified_vars:
            base, sort = quantifier_sort(v)
            qv.extend([base] if base[1:] == sort else [base, "-", sort])
        body = [":forall", qv, body]
    return body


def operator_sexpr(op: OperatorSchema) -> SExpr:
    pre = [list(a) for a in op.preconditions] + [[":not", list(a)] for a in op.neg_preconditions]
    pre += [[":not", list(c[1:])] if c[0] == ":not" else list(c) for c in op.constraints]
    form: list = ["define", ["operator", op.name], ":parameters", list(op.parameters)]
    if op.resources:
        form += [":resources", [list(r) for r in op.resources]]
    form += [":precondition", _conj(pre) if pre else "nil"]
    effs = [_effect_sexpr(e) for e in op.effects]
    form += [":effect", _conj(effs) if effs else "nil"]
    return form


def print_domain(domain: DomainSpec) -> str:
    head: list = ["define", ["domain", domain.name]]
    for sort, values in domain.sorts:
        head.append([":sort", sort, *values])
    if domain.interpreted:
        head.append([":interpreted", *domain.interpreted])
    lines = [dumps(head)]
    lines += [dumps(operator_sexpr(op)) for op in domain.operators]
    return "\n\n".join(lines) + "\n"


def print_problem(problem: ProblemSpec) -> str:
    form = ["define", ["problem", problem.name], ":domain", problem.domain,
            ":objects", list(problem.objects),
            ":init", [list(a) for a in sorted(problem.init, key=_sort_key)],
            ":goal", [":and"] + [list(a) for a in problem.goal]]
    for k, v in problem.extras:
        form += [k, v]
    return dumps(form) + "\n"


def _sort_key(atom: Atom) -> tuple:
    return tuple((type(t).__name__, t) for t in atom)


# -- grounding and execution --------------------------------------------------


def _eval_static(atom: Atom, evaluators: Mapping[str, Callable[..., bool]] | None) -> bool:
    if atom[0] == ":not":
        return not _eval_static(atom[1:], evaluators)
    if evaluators and atom[0] in evaluators:
        return bool(evaluators[atom[0]](*atom[1:]))
    return _default_static(atom[0], atom[1:])


def instantiate(schema: OperatorSchema, binding: Mapping[str, Any],
                universes: Mapping[str, Iterable[Any]] | None = None,
                evaluators: Mapping[str, Callable[..., bool]] | None = None) -> GroundAction:
    """Ground ``schema`` under ``binding``.

    Quantified effects are expanded over ``universes``, static effect guards
    are evaluated, and effects with a false guard are dropped. Raises
    ``ConstraintViolation`` when a static precondition constraint fails.
    """
    missing = [p for p in schema.parameters if p not in binding]
    if missing:
        raise GroundingError(f"{schema.name}: unbound parameters {missing}")
    for c in schema.constraints:
        if not _eval_static(substitute(c, binding), evaluators):
            raise ConstraintViolation(f"{schema.name}: constraint {atom_str(c)} fails for {dict(binding)}")
    universes = universes or {}
    adds, dels = set(), set()
    for eff in schema.effects:
        names, pools = [], []
        for v in eff.quantified_vars:
            base, sort = quantifier_sort(v)
            if sort not in universes:
                raise GroundingError(f"{schema.name}: quantifier over undeclared sort {sort}")
            names.append(base)
            pools.append(tuple(universes[sort]))
        for combo in itertools.product(*pools):
            local = dict(binding)
            local.update(zip(names, combo))
            if all(_eval_static(substitute(c, local), evaluators) for c in eff.condition):
                (adds if eff.positive else dels).add(substitute(eff.atom, local))
    pre = frozenset(substitute(a, binding) for a in schema.preconditions)
    neg = frozenset(substitute(a, binding) for a in schema.neg_preconditions)
    res = frozenset(substitute(a, binding) for a in schema.resources)
    args = tuple(binding[p] for p in schema.parameters)
    return GroundAction(schema.name, args, pre, frozenset(adds), frozenset(dels - adds), res, neg)


def applicable(state: frozenset, action: GroundAction) -> bool:
    return action.preconditions <= state and not (action.neg_preconditions & state)


def progress(state: Iterable[Atom], action: GroundAction) -> frozenset:
    """Apply ``action``; raises ``PreconditionError`` if it is not applicable."""
    state = frozenset(state)
    missing = action.preconditions - state
    if missing:
        raise PreconditionError(f"{action}: unsatisfied {sorted(atom_str(a) for a in missing)}")
    blocked = action.neg_preconditions & state
    if blocked:
        raise PreconditionError(f"{action}: negated precondition holds {sorted(atom_str(a) for a in blocked)}")
    return (state - action.deletes) | action.adds


def execute(state: Iterable[Atom], actions: Iterable[GroundAction]) -> frozenset:
    state = frozenset(state)
    for a in actions:
        state = progress(state, a)
    return state
