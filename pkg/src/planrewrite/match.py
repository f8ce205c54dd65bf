"""Rule antecedents evaluated as conjunctive queries over a plan's relational view."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Iterator

from .model import is_var
from .plan import PartialPlan, RelationalView, relational_view, step_label
from .rules import MatchContext, Registry, RewritingRule, RuleError, builtin_library
from .sexpr import dumps

Substitution = dict


@dataclass
class Conjunct:
    kind: str           # action | resource | causal | threat | ordering | constraint
    terms: tuple        # pattern over the row columns
    name: str = ""      # table name / predicate name
    rows: list = field(default_factory=list)

    def variables(self) -> set[str]:
        return {t for t in self.terms if is_var(t)}

    def describe(self) -> str:
        if self.kind == "constraint":
            return dumps([self.name, *self.terms])
        return f"{self.kind} {self.name} {dumps(list(self.terms))}".replace("  ", " ")


def _conjuncts(rule: RewritingRule, view: RelationalView) -> list[Conjunct]:
    out = []
    for n in rule.nodes:
        pred = n.atom[0]
        if n.resource:
            rows = [r for r in view.resources.get(pred, []) if len(r) == len(n.atom)]
            out.append(Conjunct("resource", (n.var,) + n.atom[1:], pred, rows))
        else:
            rows = [r for r in view.steps.get(pred, []) if len(r) == len(n.atom)]
            out.append(Conjunct("action", (n.var,) + n.atom[1:], pred, rows))
    for l in rule.links:
        if l.kind == "causal":
            pred = l.condition[0]
            rows = [r for r in view.links.get(pred, []) if len(r) == len(l.condition) + 1]
            out.append(Conjunct("causal", (l.src, l.dst) + l.condition[1:], pred, rows))
        elif l.kind == "threat":
            out.append(Conjunct("threat", (l.src, l.dst), "threat", list(view.threat_orderings)))
        else:
            out.append(Conjunct("ordering", (l.src, l.dst), "precedes"))
    for c in rule.constraints:
        out.append(Conjunct("constraint", c.args, c.name))
    return out


def _bound_mask(c: Conjunct, bound: set[str]) -> list[bool]:
    return [not is_var(t) or t in bound for t in c.terms]


def order_conjuncts(conjuncts: list[Conjunct], registry: Registry, n_steps: int) -> list[Conjunct]:
    """Greedy static order: runnable filters first, then the scan with the
    most bound columns (smallest table on ties)."""
    left = list(conjuncts)
    bound: set[str] = set()
    ordered = []
    while left:
        best, best_key = None, None
        for i, c in enumerate(left):
            mask = _bound_mask(c, bound)
            nb = sum(mask)
            if c.kind == "constraint":
                if not registry[c.name].schedulable(mask):
                    continue
                key = (0 if all(mask) else 2, -nb, 0, i)
            elif c.kind == "ordering":
                if all(mask):
                    key = (1, 0, 0, i)
                elif any(mask):
                    key = (3, -nb, n_steps, i)
                else:
                    key = (5, 0, n_steps * n_steps, i)
            else:
                key = (3 if nb else 4, -nb, len(c.rows), i)
            if best_key is None or key < best_key:
                best, best_key = c, key
        if best is None:
            c = next(c for c in left if c.kind == "constraint")
            free = [t for t in c.terms if is_var(t) and t not in bound]
            raise RuleError(f"constraint {c.name} cannot be scheduled: {free[0]} is never bound")
        left.remove(best)
        ordered.append(best)
        bound |= best.variables()
    return ordered


def _unify(terms: tuple, row: tuple, binding: dict) -> dict | None:
    new = None
    for t, v in zip(terms, row):
        if is_var(t):
            cur = binding.get(t, _MISSING) if new is None else new.get(t, _MISSING)
            if cur is _MISSING:
                if new is None:
                    new = dict(binding)
                new[t] = v
            elif cur != v:
                return None
        elif t != v:
            return None
    return binding if new is None else new


_MISSING = object()


class _Executor:
    def __init__(self, rule: RewritingRule, plan: PartialPlan, registry: Registry, rng: random.Random | None):
        self.plan = plan
        self.registry = registry
        self.rng = rng
        self.ctx = MatchContext(plan)
        view = relational_view(plan)
        self.order = order_conjuncts(_conjuncts(rule, view), registry, len(plan.steps))
        self.indexes: list[dict | None] = []
        bound: set[str] = set()
        for c in self.order:
            rows = list(c.rows)
            if rng is not None:
                rng.shuffle(rows)
            if c.kind in ("action", "resource", "causal", "threat"):
                positions = [i for i, t in enumerate(c.terms) if not is_var(t) or t in bound]
                index: dict = {}
                for r in rows:
                    index.setdefault(tuple(r[i] for i in positions), []).append(r)
                self.indexes.append((positions, index))
            else:
                self.indexes.append(None)
            bound |= c.variables()

    def _value(self, t: Any, binding: dict) -> Any:
        return binding[t] if is_var(t) else t

    def _candidates(self, k: int, binding: dict) -> Iterator[tuple]:
        c = self.order[k]
        if c.kind == "constraint":
            args = tuple(binding.get(t) if is_var(t) else t for t in c.terms)
            out = list(self.registry[c.name].fn(self.ctx, args))
            if self.rng is not None and len(out) > 1:
                self.rng.shuffle(out)
            yield from out
        elif c.kind == "ordering":
            a, b = c.terms
            va = binding.get(a) if is_var(a) else a
            vb = binding.get(b) if is_var(b) else b
            plan = self.plan
            if va is not None and vb is not None:
                if va in plan.steps and vb in plan.steps and plan.precedes(va, vb):
                    yield (va, vb)
                return
            if va is not None:
                pairs = [(va, x) for x in sorted(plan.descendants(va))] if va in plan.steps else []
            elif vb is not None:
                pairs = [(x, vb) for x in sorted(plan.ancestors(vb))] if vb in plan.steps else []
            else:
                pairs = [(x, y) for x in sorted(plan.steps) for y in sorted(plan.descendants(x))]
            if self.rng is not None:
                self.rng.shuffle(pairs)
            yield from pairs
        else:
            positions, index = self.indexes[k]
            key = tuple(self._value(c.terms[i], binding) for i in positions)
            yield from index.get(key, ())

    def run(self, k: int, binding: dict) -> Iterator[dict]:
        if k == len(self.order):
            yield binding
            return
        terms = self.order[k].terms
        for row in self._candidates(k, binding):
            nb = _unify(terms, row, binding)
            if nb is not None:
                yield from self.run(k + 1, nb)


def _value_key(v: Any) -> tuple:
    return (type(v).__name__, v)


def substitution_key(sub: dict) -> tuple:
    return tuple(sorted((k, _value_key(v)) for k, v in sub.items()))


def match_lazy(rule: RewritingRule, plan: PartialPlan, registry: Registry | None = None,
               rng: random.Random | None = None) -> Iterator[Substitution]:
    """Stream distinct substitutions; table rows are shuffled when ``rng`` is given."""
    ex = _Executor(rule, plan, registry or _default_registry(), rng)
    seen = set()
    for sub in ex.run(0, {}):
        key = substitution_key(sub)
        if key not in seen:
            seen.add(key)
            yield dict(sub)


def match_all(rule: RewritingRule, plan: PartialPlan, registry: Registry | None = None) -> list[Substitution]:
    subs = list(match_lazy(rule, plan, registry))
    subs.sort(key=lambda s: tuple(_value_key(s[k]) for k in sorted(s)))
    return subs


def explain(rule: RewritingRule, plan: PartialPlan, registry: Registry | None = None) -> str:
    """Conjunct order with table sizes and the number of partial matches
    surviving each conjunct."""
    ex = _Executor(rule, plan, registry or _default_registry(), None)
    partial = [{}]
    lines = [f"rule {rule.name}"]
    for k, c in enumerate(ex.order):
        nxt = []
        for b in partial:
            for row in ex._candidates(k, b):
                nb = _unify(c.terms, row, b)
                if nb is not None:
                    nxt.append(nb)
        size = len(c.rows) if c.kind in ("action", "resource", "causal", "threat") else "-"
        lines.append(f"  {k + 1}. {c.describe():50s} rows={size!s:>5} partial={len(nxt)}")
        partial = nxt
    return "\n".join(lines)


_DEFAULT: Registry | None = None


def _default_registry() -> Registry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = builtin_library()
    return _DEFAULT


def format_substitution(sub: dict) -> str:
    return " ".join(f"{k}={step_label(v) if isinstance(v, int) and k.startswith('?n') else dumps(v)}"
                    for k, v in sorted(sub.items()))
