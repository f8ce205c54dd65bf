"""Conversion of a valid action sequence into a partial-order causal-link plan."""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Sequence

from .model import Atom, GroundAction, PreconditionError, atom_str, progress
from .plan import GOAL, START, CausalLink, PartialPlan


class InvalidSequence(ValueError):
    """The input sequence does not execute from the initial state to the goal."""


def _check_executes(init: frozenset, goal: Iterable[Atom], seq: Sequence[GroundAction]) -> None:
    state = init
    for i, a in enumerate(seq, start=1):
        if a.neg_preconditions:
            raise InvalidSequence(f"step {i} {a}: negated preconditions are not supported")
        try:
            state = progress(state, a)
        except PreconditionError as exc:
            raise InvalidSequence(f"step {i}: {exc}") from None
    missing = [g for g in goal if g not in state]
    if missing:
        raise InvalidSequence(f"goal not reached: {', '.join(sorted(atom_str(g) for g in missing))}")


def _producer_options(seq: list[GroundAction], i: int, p: Atom) -> list[int]:
    """Producers ``k < i`` of ``p`` with no deleter strictly between, latest first."""
    out = []
    for k in range(i - 1, -1, -1):
        if p in seq[k].adds:
            out.append(k)
        if k > 0 and p in seq[k].deletes:
            break
    return out


def _build(init, goal, seq: list[GroundAction], choice: dict[tuple[int, Atom], int],
           extra: Iterable[tuple[int, int]]) -> PartialPlan:
    # seq[0] is the start pseudo-step, seq[n+1] the goal pseudo-step
    n = len(seq) - 2
    ident = {0: START, n + 1: GOAL}

    def sid(i: int) -> int:
        return ident.get(i, i)

    plan = PartialPlan(init, goal)
    for i in range(1, n + 1):
        plan.add_step(seq[i], step_id=i)
    plan._dirty = True
    links = []
    for (i, p), k in sorted(choice.items(), key=lambda kv: (kv[0][0], atom_str(kv[0][1]))):
        plan.links.add(CausalLink(sid(k), p, sid(i)))
        links.append((k, p, i))
    order: set[tuple[int, int]] = set()
    origin: dict[tuple[int, int], str] = {}

    def want(a: int, b: int, why: str) -> None:
        if a == b or a == 0 or b == n + 1:
            return
        order.add((a, b))
        origin.setdefault((a, b), why)

    # consumers of a deleted atom stay before the deleter
    for i in range(1, n + 1):
        for p in seq[i].deletes:
            for j in range(i - 1, 0, -1):
                if p in seq[j].preconditions:
                    want(j, i, "threat-resolution")
    # a deleter earlier than a producer stays before that producer
    for k, p, i in links:
        for d in range(1, k):
            if p in seq[d].deletes:
                want(d, k, "threat-resolution")
    # unit resources are used in sequence order
    users: dict[Atom, list[int]] = {}
    for i in range(1, n + 1):
        for r in seq[i].resources:
            users.setdefault(r, []).append(i)
    for r in sorted(users, key=atom_str):
        for a, b in zip(users[r], users[r][1:]):
            want(a, b, "resource-serialization")
    for a, b in extra:
        want(a, b, "imported")

    causal = {(k, i) for k, _, i in links}
    kept = {e for e in order if e not in causal}
    # drop orderings implied by the rest of the graph
    for e in sorted(kept):
        rest = causal | (kept - {e})
        if _reaches(rest, e[0], e[1]):
            kept.discard(e)
    for a, b in sorted(kept):
        plan.orderings[(sid(a), sid(b))] = origin[(a, b)]
    plan._rebuild()
    return plan


def _reaches(edges: set[tuple[int, int]], a: int, b: int) -> bool:
    succ: dict[int, list[int]] = {}
    for x, y in edges:
        succ.setdefault(x, []).append(y)
    stack, seen = [a], {a}
    while stack:
        x = stack.pop()
        for y in succ.get(x, ()):
            if y == b:
                return True
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return False


def _frame(init, goal, sequence):
    init = frozenset(init)
    goal = tuple(goal)
    _check_executes(init, goal, sequence)
    start = GroundAction("start", (), adds=init)
    end = GroundAction("goal", (), preconditions=frozenset(goal))
    return init, goal, [start, *sequence, end]


def to2po(init: Iterable[Atom], goal: Iterable[Atom], sequence: Sequence[GroundAction],
          extra_orderings: Iterable[tuple[int, int]] = ()) -> PartialPlan:
    """Latest-producer conversion. Steps are numbered 1..n in sequence order;
    ``extra_orderings`` use the same numbering."""
    init, goal, seq = _frame(init, goal, sequence)
    choice = {}
    for i in range(1, len(seq)):
        for p in seq[i].preconditions:
            choice[(i, p)] = _producer_options(seq, i, p)[0]
    return _build(init, goal, seq, choice, list(extra_orderings))


def to2po_all(init: Iterable[Atom], goal: Iterable[Atom], sequence: Sequence[GroundAction],
              extra_orderings: Iterable[tuple[int, int]] = ()) -> Iterator[PartialPlan]:
    """Every causal structure consistent with the sequence; the first one
    yielded is the latest-producer plan."""
    init, goal, seq = _frame(init, goal, sequence)
    keys, options = [], []
    for i in range(1, len(seq)):
        for p in sorted(seq[i].preconditions, key=atom_str):
            keys.append((i, p))
            options.append(_producer_options(seq, i, p))
    extra = list(extra_orderings)
    for combo in itertools.product(*options):
        yield _build(init, goal, seq, dict(zip(keys, combo)), extra)
