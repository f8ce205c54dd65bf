"""Plan cost functions: step count, schedule length and a distributed query
execution-cost estimate over a source catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable, Iterable

from .plan import GOAL, PartialPlan, chain_depths
from .queryterms import edge, query_term, relations
from .sexpr import dumps, keyword_args, read_all


@dataclass(frozen=True)
class CostFunction:
    name: str
    evaluate: Callable[[PartialPlan], Fraction | int]

    def __call__(self, plan: PartialPlan) -> Fraction | int:
        return self.evaluate(plan)


def step_count(plan: PartialPlan) -> int:
    return len(plan.real_steps())


def schedule_length(plan: PartialPlan) -> int:
    """Longest precedence chain under unit step durations."""
    return chain_depths(plan)[0]


STEP_COUNT = CostFunction("step-count", step_count)
SCHEDULE_LENGTH = CostFunction("schedule-length", schedule_length)


# -- catalog --------------------------------------------------------------------


class CatalogError(ValueError):
    pass


@dataclass
class Source:
    name: str
    transfer: Fraction
    capabilities: frozenset = frozenset()


@dataclass
class Relation:
    name: str
    source: str
    tuples: int
    distinct: dict[str, int] = field(default_factory=dict)


@dataclass
class SourceCatalog:
    """Source statistics plus the selections and join edges of one query."""

    sources: dict[str, Source]
    relations: dict[str, Relation]
    selections: dict[str, str] = field(default_factory=dict)
    joins: tuple = ()  # edges (rel_a, attr_a, rel_b, attr_b)

    def __post_init__(self) -> None:
        for r in self.relations.values():
            if r.source not in self.sources:
                raise CatalogError(f"relation {r.name} placed at unknown source {r.source}")
            for a, v in r.distinct.items():
                if v < 1 or v > max(r.tuples, 1):
                    raise CatalogError(f"{r.name}.{a}: distinct count {v} out of range")
        for rel, attr in self.selections.items():
            self._distinct(rel, attr)
        for e in self.joins:
            self._distinct(e[0], e[1])
            self._distinct(e[2], e[3])
        self._card_cache: dict[frozenset, int] = {}

    def _distinct(self, rel: str, attr: str) -> int:
        try:
            return max(1, self.relations[rel].distinct[attr])
        except KeyError:
            raise CatalogError(f"missing statistics for {rel}.{attr}") from None

    def relation(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise CatalogError(f"relation {name} not in catalog") from None

    def source_of(self, rels: Iterable[str]) -> str | None:
        places = {self.relation(r).source for r in rels}
        return places.pop() if len(places) == 1 else None

    def acceptable(self, query: str, source: str) -> bool:
        try:
            rels = relations(query)
        except ValueError:
            return False
        if any(r not in self.relations for r in rels):
            return False
        if self.source_of(rels) != source:
            return False
        return len(rels) == 1 or "join" in self.sources[source].capabilities

    def edges_between(self, a: frozenset, b: frozenset) -> set:
        return {e for e in self.joins if (e[0] in a and e[2] in b) or (e[0] in b and e[2] in a)}

    def cardinality(self, rels: Iterable[str]) -> int:
        """Estimated result size of the selections and joins over ``rels``."""
        key = frozenset(rels)
        if key in self._card_cache:
            return self._card_cache[key]
        num = Fraction(1)
        for r in sorted(key):
            rel = self.relation(r)
            size = Fraction(rel.tuples)
            if r in self.selections:
                size /= self._distinct(r, self.selections[r])
            num *= size
        for e in self.joins:
            if e[0] in key and e[2] in key:
                num /= max(self._distinct(e[0], e[1]), self._distinct(e[2], e[3]))
        card = math.ceil(num)
        self._card_cache[key] = card
        return card

    def retrieve_cost(self, rels: Iterable[str], source: str) -> Fraction:
        return (self.sources[source].transfer + 1) * self.cardinality(rels)

    def join_cost(self, left: Iterable[str], right: Iterable[str]) -> Fraction:
        left, right = frozenset(left), frozenset(right)
        return Fraction(self.cardinality(left) + self.cardinality(right) + self.cardinality(left | right))

    def query_relations(self) -> list[str]:
        return sorted(self.relations)

    def join_condition(self, a: frozenset, b: frozenset) -> str:
        from .queryterms import join_term
        return join_term(self.edges_between(a, b))


def _num(x) -> Fraction:
    return Fraction(x)


def parse_catalog(text: str) -> SourceCatalog:
    """Read ``(catalog (:source NAME :transfer T :capabilities (join))
    (:relation NAME :source S :tuples N :attributes ((a V) ...))
    (:select REL ATTR) (:join REL.ATTR REL.ATTR))``."""
    forms = read_all(text)
    if len(forms) != 1 or not isinstance(forms[0], list) or forms[0][:1] != ["catalog"]:
        raise CatalogError("expected one (catalog ...) form")
    sources: dict[str, Source] = {}
    rels: dict[str, Relation] = {}
    selections: dict[str, str] = {}
    joins = []
    for item in forms[0][1:]:
        if not isinstance(item, list) or not item:
            raise CatalogError(f"bad catalog entry {dumps(item)}")
        head = item[0]
        if head == ":source":
            kw = keyword_args(item, 2)
            caps = kw.get(":capabilities", [])
            sources[item[1]] = Source(item[1], _num(kw.get(":transfer", 1)),
                                      frozenset([] if caps == "nil" else caps))
        elif head == ":relation":
            kw = keyword_args(item, 2)
            attrs = kw.get(":attributes", [])
            rels[item[1]] = Relation(item[1], kw[":source"], int(kw[":tuples"]),
                                     {a: int(v) for a, v in ([] if attrs == "nil" else attrs)})
        elif head == ":select":
            selections[item[1]] = item[2]
        elif head == ":join":
            ra, aa = item[1].split(".")
            rb, ab = item[2].split(".")
            joins.append(edge(ra, aa, rb, ab))
        else:
            raise CatalogError(f"unknown catalog entry {head}")
    return SourceCatalog(sources, rels, selections, tuple(sorted(set(joins))))


def dump_catalog(cat: SourceCatalog) -> str:
    lines = ["(catalog"]
    for s in sorted(cat.sources.values(), key=lambda s: s.name):
        lines.append("  " + dumps([":source", s.name, ":transfer", s.transfer,
                                   ":capabilities", sorted(s.capabilities)]))
    for r in sorted(cat.relations.values(), key=lambda r: r.name):
        lines.append("  " + dumps([":relation", r.name, ":source", r.source, ":tuples", r.tuples,
                                   ":attributes", [[a, v] for a, v in sorted(r.distinct.items())]]))
    for rel, attr in sorted(cat.selections.items()):
        lines.append("  " + dumps([":select", rel, attr]))
    for e in cat.joins:
        lines.append("  " + dumps([":join", f"{e[0]}.{e[1]}", f"{e[2]}.{e[3]}"]))
    lines.append(")")
    return "\n".join(lines) + "\n"


# -- query cost -----------------------------------------------------------------


@dataclass
class StepCost:
    step: int
    operation: str
    own: Fraction
    cardinality: int
    cumulative: Fraction


@dataclass
class CostReport:
    total: Fraction
    steps: list[StepCost]


def query_cost(plan: PartialPlan, catalog: SourceCatalog) -> CostReport:
    """Each step costs its own work plus the most expensive of its causal
    producers (independent subplans run in parallel); the total is the cost
    at the step delivering the query to the goal."""
    own: dict[int, tuple[str, Fraction, int]] = {}
    for s in plan.real_steps():
        a = plan.steps[s]
        if a.name == "retrieve":
            q, src = a.args
            rels = relations(q)
            own[s] = ("retrieve", catalog.retrieve_cost(rels, src), catalog.cardinality(rels))
        elif a.name == "join":
            q, jc, qa, qb = a.args
            ra, rb = relations(qa), relations(qb)
            own[s] = ("join", catalog.join_cost(ra, rb), catalog.cardinality(ra | rb))
        else:
            raise CatalogError(f"no cost model for operator {a.name}")
    producers: dict[int, set[int]] = {s: set() for s in own}
    for l in plan.links:
        if l.consumer in producers and l.producer in own:
            producers[l.consumer].add(l.producer)
    memo: dict[int, Fraction] = {}

    def total(s: int) -> Fraction:
        if s not in memo:
            memo[s] = own[s][1] + max((total(p) for p in producers[s]), default=Fraction(0))
        return memo[s]

    sinks = [l.producer for l in plan.links if l.consumer == GOAL and l.producer in own]
    grand = max((total(s) for s in sinks), default=Fraction(0))
    report = [StepCost(s, own[s][0], own[s][1], own[s][2], total(s)) for s in sorted(own)]
    return CostReport(Fraction(grand), report)


def query_cost_function(catalog: SourceCatalog) -> CostFunction:
    return CostFunction("query-cost", lambda plan: query_cost(plan, catalog).total)


# -- dynamic-programming oracle --------------------------------------------------


@dataclass(frozen=True)
class JoinTree:
    relations: frozenset
    left: "JoinTree | None" = None
    right: "JoinTree | None" = None
    source: str | None = None  # set for a single retrieve

    def shape(self) -> str:
        if self.left is None:
            return "[" + "+".join(sorted(self.relations)) + "]"
        a, b = sorted((self.left.shape(), self.right.shape()))
        return f"({a} {b})"


def dp_optimal(catalog: SourceCatalog, rels: Iterable[str] | None = None) -> tuple[Fraction, JoinTree]:
    """Cheapest plan over all bushy join trees, cross products included, with
    any single-source subset retrievable in one step when the source joins."""
    rels = sorted(rels or catalog.query_relations())

    @lru_cache(maxsize=None)
    def best(subset: frozenset) -> tuple[Fraction, JoinTree]:
        cands: list[tuple[Fraction, str, JoinTree]] = []
        src = catalog.source_of(subset)
        if src is not None and catalog.acceptable(query_term(subset), src):
            t = JoinTree(subset, source=src)
            cands.append((catalog.retrieve_cost(subset, src), t.shape(), t))
        items = sorted(subset)
        first, rest = items[0], items[1:]
        for k in range(0, len(rest)):
            for combo in combinations(rest, k):
                left = frozenset((first,) + combo)
                right = subset - left
                if not right:
                    continue
                cl, tl = best(left)
                cr, tr = best(right)
                cost = max(cl, cr) + catalog.join_cost(left, right)
                t = JoinTree(subset, tl, tr)
                cands.append((cost, t.shape(), t))
        cost, _, tree = min(cands, key=lambda c: (c[0], c[1]))
        return cost, tree

    return best(frozenset(rels))


def tree_cost(catalog: SourceCatalog, tree: JoinTree) -> Fraction:
    """Cost of a given tree under the same estimator, composed independently."""
    if tree.left is None:
        return catalog.retrieve_cost(tree.relations, tree.source)
    return max(tree_cost(catalog, tree.left), tree_cost(catalog, tree.right)) + \
        catalog.join_cost(tree.left.relations, tree.right.relations)
