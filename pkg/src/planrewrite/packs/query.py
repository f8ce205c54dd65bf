"""Distributed query planning: random parse-tree initial plans over a source
catalog, catalog-bound interpreted predicates and a chain-query generator."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Union

from ..costs import CostFunction, Relation, Source, SourceCatalog, dump_catalog, parse_catalog, query_cost_function
from ..model import DomainSpec, GroundAction, ProblemSpec
from ..queryterms import edge, query_term, relations
from ..rules import Registry, builtin_library, test_predicate
from ..sexpr import dumps, read
from . import DATA, DomainPack, PackError, Param

Tree = Union[str, tuple]  # a relation name or a (left, right) pair


def default_catalog() -> SourceCatalog:
    return parse_catalog((DATA / "query" / "catalog.pbr").read_text())


def catalog_of(problem: ProblemSpec | None) -> SourceCatalog:
    """The catalog embedded in the problem, else the shipped example."""
    form = problem.extra(":catalog") if problem is not None else None
    if form is None:
        return default_catalog()
    return parse_catalog(dumps(form))


def query_problem(catalog: SourceCatalog, rels=None, name: str = "query") -> ProblemSpec:
    rels = sorted(rels or catalog.query_relations())
    for r in rels:
        catalog.relation(r)
    init = frozenset(("source-available", s) for s in catalog.sources)
    goal = (("available", "sims", query_term(rels)),)
    extras = ((":catalog", read(dump_catalog(catalog))),)
    return ProblemSpec(name, "query", tuple(sorted(catalog.sources)), init, goal, extras)


def goal_relations(problem: ProblemSpec) -> list[str]:
    goals = [g for g in problem.goal if g[0] == "available"]
    if len(goals) != 1:
        raise PackError("a query problem has exactly one (available sims QUERY) goal")
    return sorted(relations(goals[0][2]))


def evaluators(catalog: SourceCatalog) -> dict:
    def acceptable(query, source) -> bool:
        return catalog.acceptable(query, source)

    def join_query(query, jc, qa, qb) -> bool:
        try:
            ra, rb = relations(qa), relations(qb)
        except ValueError:
            return False
        if not ra or not rb or ra & rb or any(r not in catalog.relations for r in ra | rb):
            return False
        return query == query_term(ra | rb) and jc == catalog.join_condition(ra, rb)

    return {"source-acceptable-query": acceptable, "join-query": join_query}


def capability(catalog: SourceCatalog | None):
    def check(ctx, source, what) -> bool:
        if catalog is None:
            return False
        s = catalog.sources.get(source)
        return s is not None and what in s.capabilities

    return test_predicate("capability", 2, check, "the source supports the named remote operation")


def tree_sequence(tree: Tree, catalog: SourceCatalog) -> list[GroundAction]:
    """Post-order retrieve and join steps realizing a parse tree."""
    domain = PACK.domain.bind(evaluators(catalog))
    seq: list[GroundAction] = []

    def walk(t: Tree) -> frozenset:
        if isinstance(t, str):
            rel = catalog.relation(t)
            seq.append(domain.ground("retrieve", [t, rel.source]))
            return frozenset([t])
        left, right = walk(t[0]), walk(t[1])
        qa, qb = sorted((query_term(left), query_term(right)))
        both = left | right
        seq.append(domain.ground("join", [query_term(both), catalog.join_condition(left, right), qa, qb]))
        return both

    walk(tree)
    return seq


def random_parse(rels: list[str], rng: random.Random) -> Tree:
    """Shuffle the relations, then split each segment at a random point."""
    items = list(rels)
    rng.shuffle(items)

    def build(xs: list[str]) -> Tree:
        if len(xs) == 1:
            return xs[0]
        k = rng.randint(1, len(xs) - 1)
        return (build(xs[:k]), build(xs[k:]))

    return build(items)


def dfs_parse(rels: list[str], catalog: SourceCatalog, rng: random.Random) -> Tree:
    """Random depth-first traversal of the join graph from a random relation;
    each relation is joined with the subtrees of its children in visit order.
    Every subtree is connected, so cross products only link components."""
    wanted = set(rels)
    adj: dict[str, set[str]] = {r: set() for r in rels}
    for e in catalog.joins:
        if e[0] in wanted and e[2] in wanted and e[0] != e[2]:
            adj[e[0]].add(e[2])
            adj[e[2]].add(e[0])
    seen: set[str] = set()

    def visit(v: str) -> Tree:
        seen.add(v)
        tree: Tree = v
        nbrs = sorted(adj[v])
        rng.shuffle(nbrs)
        for u in nbrs:
            if u not in seen:
                tree = (tree, visit(u))
        return tree

    out: Tree | None = None
    while len(seen) < len(rels):
        rest = sorted(wanted - seen)
        part = visit(rest[rng.randrange(len(rest))])
        out = part if out is None else (out, part)
    return out


def left_deep(rels: list[str]) -> Tree:
    tree: Tree = rels[0]
    for r in rels[1:]:
        tree = (tree, r)
    return tree


def query_initial(problem: ProblemSpec, catalog: SourceCatalog | None, rng: random.Random) -> list[GroundAction]:
    """Single-relation retrievals joined along a random depth-first parse of
    the query. Selections travel with their relation's retrieval."""
    catalog = catalog or catalog_of(problem)
    rels = goal_relations(problem)
    for r in rels:
        catalog.relation(r)
    return tree_sequence(dfs_parse(rels, catalog, rng), catalog)


def chain_catalog(n: int, rng: random.Random, sources: int = 2) -> SourceCatalog:
    """n relations joined in a chain r1.b=r2.a, ..., each with one selection
    attribute, spread at random over join-capable sources."""
    srcs = {f"s{i}": Source(f"s{i}", rng.randint(1, 3), frozenset({"join"})) for i in range(1, sources + 1)}
    names = sorted(srcs)
    rels = {}
    for i in range(1, n + 1):
        size = rng.randint(100, 5000)
        distinct = {a: rng.randint(max(1, size // 20), size) for a in ("a", "b")}
        distinct["sel"] = rng.randint(2, 50)
        rels[f"r{i}"] = Relation(f"r{i}", rng.choice(names), size, distinct)
    joins = tuple(sorted(edge(f"r{i}", "b", f"r{i + 1}", "a") for i in range(1, n)))
    return SourceCatalog(srcs, rels, {r: "sel" for r in rels}, joins)


@dataclass
class QueryPack(DomainPack):
    def rule_registry(self) -> Registry:
        return builtin_library().extended(capability(None))

    def domain_for(self, problem: ProblemSpec) -> DomainSpec:
        return self.domain.bind(evaluators(catalog_of(problem)))

    def registry_for(self, problem: ProblemSpec) -> Registry:
        return builtin_library().extended(capability(catalog_of(problem)))

    def cost_for(self, problem: ProblemSpec) -> CostFunction:
        return query_cost_function(catalog_of(problem))

    def initial_sequence(self, problem: ProblemSpec, rng: random.Random) -> list[GroundAction]:
        return query_initial(problem, catalog_of(problem), rng)

    def generate(self, rng: random.Random, **params: int) -> ProblemSpec:
        p = self.check_params(params)
        cat = chain_catalog(p["relations"], rng, p["sources"])
        return query_problem(cat, name=f"query-{p['relations']}")


PACK = QueryPack(name="query", size_param="relations", cost_name="query-cost",
                 params={"relations": Param(4, 1, 30, "relations in the chain query"),
                         "sources": Param(2, 1, 10, "information sources")})


def plan_shape(plan) -> str:
    """Canonical join-tree shape of a query plan, in the notation of
    ``JoinTree.shape`` (each retrieval is a bracketed leaf)."""
    producer = {}
    for s in plan.real_steps():
        a = plan.steps[s]
        producer[a.args[0]] = a

    def walk(q: str) -> str:
        a = producer[q]
        if a.name == "retrieve":
            return "[" + q + "]"
        left, right = sorted((walk(a.args[2]), walk(a.args[3])))
        return f"({left} {right})"

    return walk(goal_query(plan))


def goal_query(plan) -> str:
    goals = [g for g in plan.goal if g[0] == "available"]
    return goals[0][2]
