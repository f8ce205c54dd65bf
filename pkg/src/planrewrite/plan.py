"""Partial-order causal-link plans.

A plan holds ground steps keyed by integer id, causal links, and explicit
ordering constraints tagged with their origin. Step ``0`` is the initial
pseudo-step (its adds are the initial state) and ``GOAL`` is the goal
pseudo-step (its preconditions are the goal). Precedence is kept as a
transitive closure in per-step descendant bitsets.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .model import Atom, DomainSpec, GroundAction, atom_str, progress
from .sexpr import dumps, read

START = 0
GOAL = 2**31 - 1
PSEUDO = (START, GOAL)

ORIGINS = ("causal", "threat-resolution", "resource-serialization", "imported")


class PlanError(ValueError):
    """Structural misuse of a plan (unknown step, cycle, pseudo-step removal)."""


class CycleError(PlanError):
    pass


def step_label(step_id: int) -> str:
    return "goal" if step_id == GOAL else str(step_id)


@dataclass(frozen=True, order=True)
class CausalLink:
    producer: int
    condition: Atom
    consumer: int

    def __str__(self) -> str:
        return f"{step_label(self.producer)} -{atom_str(self.condition)}-> {step_label(self.consumer)}"


@dataclass(frozen=True, order=True)
class OrderingConstraint:
    before: int
    after: int
    origin: str = "imported"


@dataclass(frozen=True, order=True)
class OpenCondition:
    condition: Atom
    consumer: int


@dataclass(frozen=True, order=True)
class OperatorThreat:
    threatener: int
    link: CausalLink


@dataclass(frozen=True, order=True)
class ResourceConflict:
    a: int
    b: int
    resource: Atom


class PartialPlan:
    """Mutable plan value; use :meth:`copy` before modifying a shared plan."""

    def __init__(self, init: Iterable[Atom] = (), goal: Iterable[Atom] = ()):
        self.steps: dict[int, GroundAction] = {
            START: GroundAction("start", (), adds=frozenset(init)),
            GOAL: GroundAction("goal", (), preconditions=frozenset(goal)),
        }
        self.links: set[CausalLink] = set()
        self.orderings: dict[tuple[int, int], str] = {}
        self.flaws: list = []
        self.next_id = 1
        self.note: dict | None = None
        self._index: dict[int, int] = {}
        self._desc: dict[int, int] = {}
        self._dirty = True

    # -- basic structure ----------------------------------------------------

    @property
    def init(self) -> frozenset:
        return self.steps[START].adds

    @property
    def goal(self) -> frozenset:
        return self.steps[GOAL].preconditions

    def copy(self) -> "PartialPlan":
        new = PartialPlan.__new__(PartialPlan)
        new.steps = dict(self.steps)
        new.links = set(self.links)
        new.orderings = dict(self.orderings)
        new.flaws = list(self.flaws)
        new.next_id = self.next_id
        new.note = None
        new._index = dict(self._index)
        new._desc = dict(self._desc)
        new._dirty = self._dirty
        return new

    def real_steps(self) -> list[int]:
        return sorted(s for s in self.steps if s not in PSEUDO)

    def __len__(self) -> int:
        return len(self.steps) - 2

    def action(self, step: int) -> GroundAction:
        try:
            return self.steps[step]
        except KeyError:
            raise PlanError(f"unknown step {step_label(step)}") from None

    def add_step(self, action: GroundAction, step_id: int | None = None) -> int:
        if action.neg_preconditions:
            raise PlanError(f"{action}: negated preconditions are not supported in plans")
        if step_id is None:
            step_id = self.next_id
        if step_id in self.steps:
            raise PlanError(f"step id {step_id} already in use")
        self.steps[step_id] = action
        self.next_id = max(self.next_id, step_id + 1)
        if not self._dirty:
            bit = len(self._index)
            self._index[step_id] = bit
            self._desc[step_id] = 1 << self._index[GOAL]
            self._desc[START] |= 1 << bit
        return step_id

    def add_link(self, producer: int, condition: Atom, consumer: int) -> CausalLink:
        self.action(producer)
        self.action(consumer)
        link = CausalLink(producer, condition, consumer)
        self._add_edge(producer, consumer)
        self.links.add(link)
        return link

    def add_ordering(self, before: int, after: int, origin: str = "imported") -> None:
        if origin not in ORIGINS:
            raise PlanError(f"unknown ordering origin {origin}")
        self.action(before)
        self.action(after)
        if before == after:
            raise CycleError(f"self ordering on {step_label(before)}")
        self._add_edge(before, after)
        self.orderings[(before, after)] = origin

    def remove_link(self, link: CausalLink) -> None:
        self.links.discard(link)
        self._dirty = True

    def remove_ordering(self, before: int, after: int) -> None:
        self.orderings.pop((before, after), None)
        self._dirty = True

    def remove_steps(self, doomed: Iterable[int]) -> None:
        doomed = set(doomed)
        if doomed & set(PSEUDO):
            raise PlanError("pseudo-steps cannot be removed")
        for s in doomed:
            self.action(s)
            del self.steps[s]
        self.links = {l for l in self.links if l.producer not in doomed and l.consumer not in doomed}
        self.orderings = {k: v for k, v in self.orderings.items() if k[0] not in doomed and k[1] not in doomed}
        self.flaws = [f for f in self.flaws if not _flaw_mentions(f, doomed)]
        self._dirty = True

    # -- precedence ---------------------------------------------------------

    def edges(self) -> set[tuple[int, int]]:
        """Direct precedence edges: causal links plus explicit orderings."""
        out = {(l.producer, l.consumer) for l in self.links}
        out.update(self.orderings)
        return out

    def _rebuild(self) -> None:
        ids = sorted(self.steps)
        index = {s: i for i, s in enumerate(ids)}
        succ: dict[int, set[int]] = {s: set() for s in ids}
        for a, b in self.edges():
            succ[a].add(b)
        for s in ids:
            if s != START:
                succ[START].add(s)
            if s != GOAL:
                succ[s].add(GOAL)
        indeg = {s: 0 for s in ids}
        for a in ids:
            for b in succ[a]:
                indeg[b] += 1
        queue = [s for s in ids if indeg[s] == 0]
        order = []
        while queue:
            s = queue.pop()
            order.append(s)
            for b in succ[s]:
                indeg[b] -= 1
                if indeg[b] == 0:
                    queue.append(b)
        if len(order) != len(ids):
            raise CycleError("ordering constraints are cyclic")
        desc: dict[int, int] = {}
        for s in reversed(order):
            bits = 0
            for b in succ[s]:
                bits |= (1 << index[b]) | desc[b]
            desc[s] = bits
        self._index, self._desc, self._dirty = index, desc, False

    def _ensure(self) -> None:
        if self._dirty:
            self._rebuild()

    def _add_edge(self, a: int, b: int) -> None:
        """Extend the closure with ``a < b``; raises before any change when
        the edge would close a cycle."""
        if a == b or a == GOAL or b == START:
            raise CycleError(f"ordering {step_label(a)} < {step_label(b)} is impossible")
        if a == START or b == GOAL:
            return
        self._ensure()
        if self.precedes(a, b):
            return
        if self.precedes(b, a):
            raise CycleError(f"ordering {step_label(a)} < {step_label(b)} closes a cycle")
        ia = 1 << self._index[a]
        new = (1 << self._index[b]) | self._desc[b]
        for x, bits in self._desc.items():
            if x == a or bits & ia:
                self._desc[x] = bits | new

    def precedes(self, a: int, b: int) -> bool:
        """Strict transitive precedence ``a < b``."""
        if a not in self.steps or b not in self.steps:
            raise PlanError(f"unknown step {step_label(a if a not in self.steps else b)}")
        self._ensure()
        return bool((self._desc[a] >> self._index[b]) & 1)

    def descendants(self, a: int) -> list[int]:
        self._ensure()
        bits = self._desc[a]
        return [s for s, i in self._index.items() if (bits >> i) & 1]

    def ancestors(self, b: int) -> list[int]:
        self._ensure()
        bit = 1 << self._index[b]
        return [s for s, bits in self._desc.items() if bits & bit]

    def can_precede(self, a: int, b: int) -> bool:
        """True iff ``a < b`` can be added without a cycle."""
        return a != b and a != GOAL and b != START and not self.precedes(b, a)

    def possibly_between(self, s: int, a: int, b: int) -> bool:
        for x in (s, a, b):
            self.action(x)
        return s not in (a, b) and not self.precedes(s, a) and not self.precedes(b, s)

    def possibly_adjacent(self, n1: int, n2: int) -> bool:
        """Some linearization places ``n1`` immediately before ``n2``."""
        if n1 == n2 or self.precedes(n2, n1):
            return False
        self._ensure()
        between = self._desc[n1] & _mask_of_ancestors(self, n2)
        return between == 0

    def directly_before(self, a: int, b: int) -> bool:
        return (a, b) in self.orderings or any(l.producer == a and l.consumer == b for l in self.links)

    def ordering_constraints(self) -> list[OrderingConstraint]:
        """Explicit orderings plus one causal ordering per linked pair."""
        out = {OrderingConstraint(a, b, o) for (a, b), o in self.orderings.items()}
        for l in self.links:
            if (l.producer, l.consumer) not in self.orderings:
                out.add(OrderingConstraint(l.producer, l.consumer, "causal"))
        return sorted(out)

    # -- identity -----------------------------------------------------------

    def signature(self) -> tuple:
        """Id-independent summary used to spot rewrites that change nothing."""
        sig = {s: a.signature for s, a in self.steps.items()}
        return (
            tuple(sorted(sig[s] for s in self.real_steps())),
            tuple(sorted((sig[l.producer], l.condition, sig[l.consumer]) for l in self.links)),
            tuple(sorted((sig[a], sig[b]) for a, b in self.orderings)),
        )

    def key(self) -> tuple:
        """Exact structural key including step ids."""
        return (
            tuple(sorted((s, a.signature) for s, a in self.steps.items())),
            tuple(sorted(self.links)),
            tuple(sorted(self.orderings)),
        )

    def __repr__(self) -> str:
        return f"PartialPlan({len(self)} steps, {len(self.links)} links, {len(self.orderings)} orderings)"


def _mask_of_ancestors(plan: PartialPlan, b: int) -> int:
    bit = 1 << plan._index[b]
    mask = 0
    for s, bits in plan._desc.items():
        if bits & bit:
            mask |= 1 << plan._index[s]
    return mask


def _flaw_mentions(flaw: Any, doomed: set[int]) -> bool:
    if isinstance(flaw, OpenCondition):
        return flaw.consumer in doomed
    if isinstance(flaw, OperatorThreat):
        return flaw.threatener in doomed or flaw.link.producer in doomed or flaw.link.consumer in doomed
    return flaw.a in doomed or flaw.b in doomed


# -- module-level operations --------------------------------------------------


def precedes(plan: PartialPlan, a: int, b: int) -> bool:
    return plan.precedes(a, b)


def possibly_between(plan: PartialPlan, s: int, a: int, b: int) -> bool:
    return plan.possibly_between(s, a, b)


def remove_subplan(plan: PartialPlan, doomed: Iterable[int],
                   doomed_links: Iterable[CausalLink] = ()) -> tuple[PartialPlan, set[OpenCondition]]:
    """Remove steps and links; the conditions they supported become open."""
    doomed = set(doomed)
    doomed_links = set(doomed_links)
    if doomed & set(PSEUDO):
        raise PlanError("pseudo-steps cannot be removed")
    out = plan.copy()
    opened: set[OpenCondition] = set()
    for l in plan.links:
        if l.consumer in doomed:
            continue
        if l.producer in doomed or l in doomed_links:
            opened.add(OpenCondition(l.condition, l.consumer))
    for l in doomed_links:
        out.remove_link(l)
    if doomed:
        out.remove_steps(doomed)
    return out, opened


def step_threats(plan: PartialPlan, s: int, links: Iterable[CausalLink] | None = None) -> list[OperatorThreat]:
    """Threats step ``s`` poses to ``links`` (default: all links)."""
    dels = plan.steps[s].deletes
    if not dels:
        return []
    out = []
    for l in (plan.links if links is None else links):
        if l.condition in dels and plan.possibly_between(s, l.producer, l.consumer):
            out.append(OperatorThreat(s, l))
    return out


def link_threats(plan: PartialPlan, link: CausalLink, deleters: Mapping[Atom, list[int]] | None = None) -> list[OperatorThreat]:
    """Threats against one causal link."""
    if deleters is None:
        cands = [s for s, a in plan.steps.items() if link.condition in a.deletes]
    else:
        cands = deleters.get(link.condition, [])
    return [OperatorThreat(s, link) for s in cands if plan.possibly_between(s, link.producer, link.consumer)]


def deleter_index(plan: PartialPlan) -> dict[Atom, list[int]]:
    idx: dict[Atom, list[int]] = defaultdict(list)
    for s in sorted(plan.steps):
        for d in plan.steps[s].deletes:
            idx[d].append(s)
    return idx


def resource_conflicts(plan: PartialPlan, steps: Iterable[int] | None = None) -> list[ResourceConflict]:
    users: dict[Atom, list[int]] = defaultdict(list)
    for s in sorted(plan.steps):
        for r in plan.steps[s].resources:
            users[r].append(s)
    focus = None if steps is None else set(steps)
    out = []
    for r in sorted(users, key=atom_str):
        for a, b in itertools.combinations(users[r], 2):
            if focus is not None and a not in focus and b not in focus:
                continue
            if not plan.precedes(a, b) and not plan.precedes(b, a):
                out.append(ResourceConflict(a, b, r))
    return out


def find_threats(plan: PartialPlan) -> list:
    """Every operator threat and unordered shared-resource pair."""
    idx = deleter_index(plan)
    out: list = []
    for l in sorted(plan.links):
        out.extend(link_threats(plan, l, idx))
    out.extend(resource_conflicts(plan))
    return out


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid

    def __str__(self) -> str:
        return "valid" if self.valid else "\n".join(self.violations)


def validate(plan: PartialPlan) -> ValidationReport:
    report = ValidationReport()
    v = report.violations
    try:
        plan._rebuild()
    except CycleError as exc:
        v.append(str(exc))
        return report
    supported: dict[int, set[Atom]] = defaultdict(set)
    for l in sorted(plan.links):
        if l.producer not in plan.steps or l.consumer not in plan.steps:
            v.append(f"link {l} refers to a missing step")
            continue
        if l.condition not in plan.steps[l.producer].adds:
            v.append(f"link {l}: producer does not add the condition")
        if l.condition not in plan.steps[l.consumer].preconditions:
            v.append(f"link {l}: consumer does not need the condition")
        if not plan.precedes(l.producer, l.consumer):
            v.append(f"link {l}: producer is not ordered before consumer")
        supported[l.consumer].add(l.condition)
    for s in sorted(plan.steps):
        for p in sorted(plan.steps[s].preconditions, key=atom_str):
            if p not in supported[s]:
                v.append(f"open condition {atom_str(p)} at step {step_label(s)}")
    for f in find_threats(plan):
        if isinstance(f, OperatorThreat):
            v.append(f"step {step_label(f.threatener)} threatens {atom_str(f.link.condition)} "
                     f"link {step_label(f.link.producer)} -> {step_label(f.link.consumer)}")
        else:
            v.append(f"steps {f.a} and {f.b} share resource {atom_str(f.resource)} unordered")
    return report


# -- relational view ----------------------------------------------------------


@dataclass
class RelationalView:
    steps: dict[str, list[tuple]]
    links: dict[str, list[tuple]]
    resources: dict[str, list[tuple]]
    threat_orderings: list[tuple]
    orderings: list[tuple]

    def dump(self) -> str:
        lines = []
        for title, tables in (("step", self.steps), ("link", self.links), ("resource", self.resources)):
            for name in sorted(tables):
                lines.append(f"{title} {name}:")
                lines += ["  " + " ".join(step_label(x) if isinstance(x, int) and i < 2 else dumps(x)
                                          for i, x in enumerate(row)) for row in tables[name]]
        lines.append("threat orderings: " + " ".join(f"({step_label(a)} {step_label(b)})" for a, b in self.threat_orderings))
        return "\n".join(lines)


def relational_view(plan: PartialPlan) -> RelationalView:
    steps: dict[str, list[tuple]] = defaultdict(list)
    resources: dict[str, list[tuple]] = defaultdict(list)
    for s in sorted(plan.steps):
        a = plan.steps[s]
        if s not in PSEUDO:
            steps[a.name].append((s,) + a.args)
        for r in sorted(a.resources, key=atom_str):
            resources[r[0]].append((s,) + r[1:])
    links: dict[str, list[tuple]] = defaultdict(list)
    for l in sorted(plan.links):
        links[l.condition[0]].append((l.producer, l.consumer) + l.condition[1:])
    threats = sorted(k for k, o in plan.orderings.items() if o in ("threat-resolution", "resource-serialization"))
    return RelationalView(dict(steps), dict(links), dict(resources), threats, sorted(plan.edges()))


# -- critical paths and linearizations ---------------------------------------


def _real_edges(plan: PartialPlan) -> dict[int, set[int]]:
    succ: dict[int, set[int]] = {s: set() for s in plan.real_steps()}
    for a, b in plan.edges():
        if a in succ and b in succ:
            succ[a].add(b)
    return succ


def _topo(succ: dict[int, set[int]]) -> list[int]:
    indeg = {s: 0 for s in succ}
    for a in succ:
        for b in succ[a]:
            indeg[b] += 1
    ready = sorted(s for s in succ if indeg[s] == 0)
    order = []
    while ready:
        s = ready.pop(0)
        order.append(s)
        for b in sorted(succ[s]):
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    if len(order) != len(succ):
        raise CycleError("ordering constraints are cyclic")
    return order


def chain_depths(plan: PartialPlan) -> tuple[int, dict[int, int], dict[int, int]]:
    """(length, head, tail): head[s] counts steps on the longest chain ending
    at ``s``, tail[s] on the longest chain starting at ``s``."""
    succ = _real_edges(plan)
    order = _topo(succ)
    pred: dict[int, list[int]] = defaultdict(list)
    for a in succ:
        for b in succ[a]:
            pred[b].append(a)
    head: dict[int, int] = {}
    for s in order:
        head[s] = 1 + max((head[p] for p in pred[s]), default=0)
    tail: dict[int, int] = {}
    for s in reversed(order):
        tail[s] = 1 + max((tail[b] for b in succ[s]), default=0)
    return max(head.values(), default=0), head, tail


def critical_paths(plan: PartialPlan, limit: int = 1000) -> tuple[int, list[tuple[int, ...]]]:
    """Longest chain length and (up to ``limit``) chains attaining it."""
    length, head, tail = chain_depths(plan)
    succ = _real_edges(plan)
    paths: list[tuple[int, ...]] = []

    def extend(path: list[int]) -> None:
        if len(paths) >= limit:
            return
        s = path[-1]
        if tail[s] == 1:
            paths.append(tuple(path))
            return
        for b in sorted(succ[s]):
            if tail[b] == tail[s] - 1:
                extend(path + [b])

    for s in sorted(head):
        if head[s] == 1 and tail[s] == length:
            extend([s])
    return length, paths


def in_critical_path(plan: PartialPlan, s: int) -> bool:
    if s in PSEUDO:
        return False
    length, head, tail = chain_depths(plan)
    return head[s] + tail[s] - 1 == length


def adjacent_in_critical_path(plan: PartialPlan, a: int, b: int) -> bool:
    if a in PSEUDO or b in PSEUDO:
        return False
    length, head, tail = chain_depths(plan)
    return b in _real_edges(plan)[a] and head[a] + tail[b] == length


def linearizations(plan: PartialPlan, guard: int = 12) -> Iterator[tuple[int, ...]]:
    """All topological orders of the non-pseudo steps."""
    steps = plan.real_steps()
    if len(steps) > guard:
        raise PlanError(f"plan has {len(steps)} steps, above the linearization guard {guard}")
    before = {s: {t for t in steps if plan.precedes(t, s)} for s in steps}

    def rec(prefix: list[int], left: set[int]) -> Iterator[tuple[int, ...]]:
        if not left:
            yield tuple(prefix)
            return
        placed = set(prefix)
        for s in sorted(left):
            if before[s] <= placed:
                prefix.append(s)
                left.remove(s)
                yield from rec(prefix, left)
                left.add(s)
                prefix.pop()

    yield from rec([], set(steps))


def random_linearization(plan: PartialPlan, rng) -> tuple[int, ...]:
    succ = _real_edges(plan)
    for a in succ:
        succ[a] = {b for b in plan.real_steps() if plan.precedes(a, b)}
    indeg = {s: 0 for s in succ}
    for a in succ:
        for b in succ[a]:
            indeg[b] += 1
    ready = sorted(s for s in succ if indeg[s] == 0)
    out = []
    while ready:
        s = ready.pop(rng.randrange(len(ready)))
        out.append(s)
        for b in sorted(succ[s]):
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    return tuple(out)


def execute_order(plan: PartialPlan, order: Sequence[int]) -> bool:
    """Execute steps in ``order`` from the initial state; True iff the goal holds."""
    state = plan.init
    for s in order:
        state = progress(state, plan.steps[s])
    return plan.goal <= state


def linearization_oracle(plan: PartialPlan, rng=None, exhaustive_limit: int = 8) -> bool:
    """Execution check: every linearization for small plans, else one sampled."""
    try:
        if len(plan) <= exhaustive_limit:
            return all(execute_order(plan, o) for o in linearizations(plan, guard=exhaustive_limit))
        import random
        return execute_order(plan, random_linearization(plan, rng or random.Random(0)))
    except ValueError:
        return False


# -- isomorphism --------------------------------------------------------------


def isomorphic(p: PartialPlan, q: PartialPlan) -> bool:
    """Structural equality up to renaming of non-pseudo step ids."""
    if p.signature() != q.signature():
        return False
    ps, qs = p.real_steps(), q.real_steps()
    groups: dict[tuple, list[int]] = defaultdict(list)
    for s in qs:
        groups[q.steps[s].signature].append(s)
    q_links = q.links
    q_ord = set(q.orderings)

    def consistent(m: dict[int, int]) -> bool:
        for l in p.links:
            if l.producer in m and l.consumer in m:
                if CausalLink(m[l.producer], l.condition, m[l.consumer]) not in q_links:
                    return False
        for a, b in p.orderings:
            if a in m and b in m and (m[a], m[b]) not in q_ord:
                return False
        return True

    def rec(i: int, m: dict[int, int], used: set[int]) -> bool:
        if i == len(ps):
            return True
        s = ps[i]
        for t in groups[p.steps[s].signature]:
            if t in used:
                continue
            m[s] = t
            used.add(t)
            if consistent(m) and rec(i + 1, m, used):
                return True
            del m[s]
            used.discard(t)
        return False

    return rec(0, {START: START, GOAL: GOAL}, set())


# -- serialization ------------------------------------------------------------


def _sid(s: int) -> Any:
    return "goal" if s == GOAL else s


def _pid(x: Any) -> int:
    if x == "goal":
        return GOAL
    if isinstance(x, int):
        return x
    raise PlanError(f"bad step id {x!r}")


def dump_plan(plan: PartialPlan) -> str:
    lines = ["(plan"]
    lines.append("  (:steps")
    for s in plan.real_steps():
        a = plan.steps[s]
        lines.append("    " + dumps([s, a.name, *a.args]))
    lines.append("  )")
    lines.append("  (:links")
    for l in sorted(plan.links):
        lines.append("    " + dumps([_sid(l.producer), list(l.condition), _sid(l.consumer)]))
    lines.append("  )")
    lines.append("  (:orderings")
    for (a, b) in sorted(plan.orderings):
        lines.append("    " + dumps([_sid(a), _sid(b), plan.orderings[(a, b)]]))
    lines.append("  ))")
    return "\n".join(lines) + "\n"


def load_plan(text: str, domain: DomainSpec, init: Iterable[Atom], goal: Iterable[Atom]) -> PartialPlan:
    form = read(text)
    if not (isinstance(form, list) and form and form[0] == "plan"):
        raise PlanError("expected (plan ...)")
    sections = {item[0]: item[1:] for item in form[1:] if isinstance(item, list) and item}
    plan = PartialPlan(init, goal)
    for entry in sections.get(":steps", []):
        sid, name, *args = entry
        plan.add_step(domain.ground(name, args), step_id=_pid(sid))
    plan._dirty = True
    for p, cond, c in sections.get(":links", []):
        plan.links.add(CausalLink(_pid(p), tuple(cond), _pid(c)))
    for entry in sections.get(":orderings", []):
        a, b = entry[0], entry[1]
        origin = entry[2] if len(entry) > 2 else "imported"
        if origin not in ORIGINS:
            raise PlanError(f"unknown ordering origin {origin}")
        plan.orderings[(_pid(a), _pid(b))] = origin
    for l in plan.links:
        plan.action(l.producer)
        plan.action(l.consumer)
    return plan


def plan_from_links(init: Iterable[Atom], goal: Iterable[Atom], steps: Mapping[int, GroundAction],
                    links: Iterable[tuple[int, Atom, int]],
                    orderings: Iterable[tuple[int, int]] | Iterable[tuple[int, int, str]] = ()) -> PartialPlan:
    """Build a plan from explicit parts (fixtures, tests)."""
    plan = PartialPlan(init, goal)
    for sid in sorted(steps):
        plan.add_step(steps[sid], step_id=sid)
    for p, c, q in links:
        plan.add_link(p, c, q)
    for o in orderings:
        plan.add_ordering(o[0], o[1], o[2] if len(o) > 2 else "threat-resolution")
    return plan
