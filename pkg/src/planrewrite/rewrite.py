"""Rule application: match, remove the replaced subplan, add the replacement,
then complete the plan by reusing existing steps only (no step addition)."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .match import format_substitution, match_all, match_lazy
from .model import DomainSpec, GroundingError, atom_str, substitute
from .plan import (
    PSEUDO, CausalLink, CycleError, OpenCondition, OperatorThreat, PartialPlan,
    ResourceConflict, find_threats, link_threats, remove_subplan, step_label,
)
from .rules import Registry, RewritingRule, RuleError, builtin_library


@dataclass
class RewriteRequest:
    plan: PartialPlan
    rule: RewritingRule
    domain: DomainSpec
    registry: Registry | None = None
    all_embeddings: bool = True
    lazy: bool = False
    seed: int | None = None


# -- reuse-only completion ------------------------------------------------------


def _still_threat(plan: PartialPlan, f: OperatorThreat) -> bool:
    return f.link in plan.links and plan.possibly_between(f.threatener, f.link.producer, f.link.consumer)


def _still_conflict(plan: PartialPlan, f: ResourceConflict) -> bool:
    return not plan.precedes(f.a, f.b) and not plan.precedes(f.b, f.a)


def rpop(plan: PartialPlan, agenda: Sequence | None = None, first: bool = False,
         decisions: list | None = None) -> Iterator[PartialPlan]:
    """Repair every flaw on the agenda without adding steps.

    Threats and resource conflicts are handled before open conditions, last
    in first out within each class. Yields each distinct completion.
    """
    agenda = list(plan.flaws if agenda is None else agenda)
    threats = [f for f in agenda if not isinstance(f, OpenCondition)]
    opens = [f for f in agenda if isinstance(f, OpenCondition)]
    seen: set = set()
    for out in _complete(plan.copy(), threats, opens, [] if decisions is None else list(decisions)):
        key = out.key()
        if key in seen:
            continue
        seen.add(key)
        yield out
        if first:
            return


def _complete(plan: PartialPlan, threats: list, opens: list, log: list) -> Iterator[PartialPlan]:
    while threats:
        f = threats[-1]
        live = _still_threat(plan, f) if isinstance(f, OperatorThreat) else _still_conflict(plan, f)
        if live:
            break
        threats.pop()
    if threats:
        f = threats.pop()
        if isinstance(f, OperatorThreat):
            options = [(f.threatener, f.link.producer, "demote"), (f.link.consumer, f.threatener, "promote")]
            origin = "threat-resolution"
        else:
            options = [(f.a, f.b, "order"), (f.b, f.a, "order")]
            origin = "resource-serialization"
        for a, b, how in options:
            if not plan.can_precede(a, b):
                continue
            child = plan.copy()
            try:
                child.add_ordering(a, b, origin)
            except CycleError:
                continue
            yield from _complete(child, list(threats), list(opens), log + [(how, a, b)])
        return
    if opens:
        oc = opens[-1]
        rest = opens[:-1]
        for s in sorted(plan.steps):
            if s == oc.consumer or oc.condition not in plan.steps[s].adds:
                continue
            if not plan.can_precede(s, oc.consumer):
                continue
            child = plan.copy()
            try:
                link = child.add_link(s, oc.condition, oc.consumer)
            except CycleError:
                continue
            new_threats = link_threats(child, link)
            yield from _complete(child, list(new_threats), list(rest), log + [("link", s, oc.consumer)])
        return
    plan.flaws = []
    plan.note = {"decisions": log}
    yield plan


# -- rewriting ------------------------------------------------------------------


class _Skip(Exception):
    """The substitution cannot be applied (not a rule defect)."""


def _ordering_origin(plan: PartialPlan, a: int, b: int) -> str:
    if plan.steps[a].resources & plan.steps[b].resources:
        return "resource-serialization"
    return "imported"


def prepare(plan: PartialPlan, rule: RewritingRule, sub: dict, domain: DomainSpec) -> tuple[PartialPlan, list, dict]:
    """Remove the matched subplan and add the replacement for one
    substitution: returns the incomplete plan, its flaw agenda and a
    description of the change."""
    doomed = set()
    for v in rule.replace_nodes:
        s = sub[v]
        if s in PSEUDO:
            raise _Skip(f"{v} is bound to a pseudo-step")
        doomed.add(s)
    doomed_links = set()
    doomed_orderings = set()
    for l in rule.replace_links:
        a, b = sub[l.src], sub[l.dst]
        if l.kind == "causal":
            link = CausalLink(a, substitute(l.condition, sub), b)
            if link not in plan.links:
                raise _Skip(f"no causal link {link}")
            doomed_links.add(link)
        else:
            if (a, b) not in plan.orderings:
                raise _Skip(f"no explicit ordering {step_label(a)} < {step_label(b)}")
            doomed_orderings.add((a, b))
    work, opened = remove_subplan(plan, doomed, doomed_links)
    for a, b in doomed_orderings:
        work.remove_ordering(a, b)
    binding = dict(sub)
    added = []
    for n in rule.with_nodes:
        args = []
        for t in n.atom[1:]:
            if isinstance(t, str) and t.startswith("?"):
                if t not in binding:
                    raise RuleError(f"rule {rule.name}: replacement variable {t} is unbound")
                args.append(binding[t])
            else:
                args.append(t)
        try:
            action = domain.ground(n.atom[0], args)
        except KeyError:
            raise RuleError(f"rule {rule.name}: unknown operator {n.atom[0]}") from None
        except GroundingError as exc:
            raise _Skip(str(exc)) from None
        try:
            sid = work.add_step(action)
        except ValueError as exc:
            raise _Skip(str(exc)) from None
        binding[n.var] = sid
        added.append(sid)
    supplied: set[tuple] = set()
    try:
        for l in rule.with_links:
            a, b = binding[l.src], binding[l.dst]
            if a not in work.steps or b not in work.steps:
                raise _Skip("replacement link endpoint was removed")
            if l.kind == "causal":
                cond = substitute(l.condition, binding)
                if cond not in work.steps[a].adds or cond not in work.steps[b].preconditions:
                    raise _Skip(f"replacement link {step_label(a)} -{atom_str(cond)}-> {step_label(b)} is not causal")
                if not work.can_precede(a, b):
                    raise _Skip("replacement link closes a cycle")
                work.add_link(a, cond, b)
                supplied.add((cond, b))
            else:
                if a == b or not work.can_precede(a, b):
                    raise _Skip("replacement ordering closes a cycle")
                work.add_ordering(a, b, _ordering_origin(work, a, b))
    except CycleError as exc:
        raise _Skip(str(exc)) from None
    supported = {(l.condition, l.consumer) for l in work.links}
    opens = {oc for oc in opened if oc.consumer in work.steps and (oc.condition, oc.consumer) not in supported}
    for s in added:
        for p in work.steps[s].preconditions:
            if (p, s) not in supported:
                opens.add(OpenCondition(p, s))
    agenda = sorted(opens, key=lambda f: (f.consumer, atom_str(f.condition)))
    agenda += find_threats(work)
    info = {"rule": rule.name, "substitution": format_substitution(sub),
            "removed": sorted(doomed), "added": added}
    return work, agenda, info


def apply_substitution(plan: PartialPlan, rule: RewritingRule, sub: dict, domain: DomainSpec,
                       first: bool = False) -> Iterator[PartialPlan]:
    try:
        work, agenda, info = prepare(plan, rule, sub, domain)
    except _Skip:
        return
    work.flaws = agenda
    for out in rpop(work, agenda, first=first):
        note = dict(info)
        note["decisions"] = out.note["decisions"] if out.note else []
        out.note = note
        yield out


def rewrite(request: RewriteRequest) -> list[PartialPlan]:
    """All (or first-embedding) rewritings of the plan by the rule."""
    registry = request.registry or builtin_library()
    rng = random.Random(request.seed) if request.lazy else None
    if request.lazy:
        subs: Iterable[dict] = match_lazy(request.rule, request.plan, registry, rng)
    else:
        subs = match_all(request.rule, request.plan, registry)
    out: list[PartialPlan] = []
    seen = set()
    for sub in subs:
        for p in apply_substitution(request.plan, request.rule, sub, request.domain,
                                    first=not request.all_embeddings):
            key = p.key()
            if key not in seen:
                seen.add(key)
                out.append(p)
    return out


def rewrite_plan(plan: PartialPlan, rule: RewritingRule, domain: DomainSpec,
                 registry: Registry | None = None, all_embeddings: bool = True) -> list[PartialPlan]:
    return rewrite(RewriteRequest(plan, rule, domain, registry, all_embeddings))


def neighborhood(plan: PartialPlan, rules: Sequence[RewritingRule], domain: DomainSpec,
                 registry: Registry | None = None, mode: str = "all",
                 rng: random.Random | None = None) -> Iterator[PartialPlan]:
    """Valid plans one rule application away, excluding copies of ``plan``.

    ``all`` enumerates every match and embedding of every rule; ``first``
    streams lazily in a shuffled rule order with shuffled matches, taking the
    first embedding of each match.
    """
    registry = registry or builtin_library()
    own = plan.signature()
    seen = {own}
    if mode == "all":
        for rule in rules:
            for sub in match_all(rule, plan, registry):
                for p in apply_substitution(plan, rule, sub, domain):
                    sig = p.signature()
                    if sig not in seen:
                        seen.add(sig)
                        yield p
        return
    if mode != "first":
        raise ValueError(f"unknown neighborhood mode {mode}")
    rng = rng or random.Random(0)
    order = list(rules)
    rng.shuffle(order)
    for rule in order:
        for sub in match_lazy(rule, plan, registry, rng):
            for p in apply_substitution(plan, rule, sub, domain, first=True):
                sig = p.signature()
                if sig not in seen:
                    seen.add(sig)
                    yield p
