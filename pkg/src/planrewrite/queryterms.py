"""Symbolic query terms for distributed query plans.

A query is written as its relation names sorted and joined with ``+``
(``employee+project``). A join condition lists equality edges
``rel.attr=rel.attr`` joined with ``&``, or ``none`` for a cross product.
Relation and attribute names must not contain ``+``, ``&``, ``.`` or ``=``.
"""

from __future__ import annotations

from typing import Iterable

Edge = tuple  # (rel_a, attr_a, rel_b, attr_b) with rel_a < rel_b

NO_JOIN = "none"


def query_term(relations: Iterable[str]) -> str:
    rels = sorted(set(relations))
    if not rels:
        raise ValueError("empty query")
    return "+".join(rels)


def relations(query: str) -> frozenset:
    return frozenset(str(query).split("+"))


def edge(rel_a: str, attr_a: str, rel_b: str, attr_b: str) -> Edge:
    if (rel_b, attr_b) < (rel_a, attr_a):
        rel_a, attr_a, rel_b, attr_b = rel_b, attr_b, rel_a, attr_a
    return (rel_a, attr_a, rel_b, attr_b)


def edge_term(e: Edge) -> str:
    return f"{e[0]}.{e[1]}={e[2]}.{e[3]}"


def join_term(edges: Iterable[Edge]) -> str:
    terms = sorted({edge_term(e) for e in edges})
    return "&".join(terms) if terms else NO_JOIN


def edges_of(jc: str) -> set[Edge]:
    if jc == NO_JOIN:
        return set()
    out = set()
    for part in str(jc).split("&"):
        left, right = part.split("=")
        ra, aa = left.split(".")
        rb, ab = right.split(".")
        out.add(edge(ra, aa, rb, ab))
    return out


def crossing(edges: Iterable[Edge], a: frozenset, b: frozenset) -> set[Edge]:
    return {e for e in edges if (e[0] in a and e[2] in b) or (e[0] in b and e[2] in a)}


def join_swappable(ctx, args: tuple) -> list[tuple]:
    """Re-associate ``(X join Y) join C`` into ``X join (Y join C)`` and
    ``Y join (X join C)``; yields one 16-tuple per alternative."""
    q1, jc1, sq1a, sq1b, q2, jc2, sq2a, sq2b = args[:8]
    if q2 == sq1a:
        other = sq1b
    elif q2 == sq1b:
        other = sq1a
    else:
        return []
    try:
        c = relations(other)
        x, y = relations(sq2a), relations(sq2b)
        known = edges_of(jc1) | edges_of(jc2)
    except ValueError:
        return []
    out = []
    for keep, move in ((x, y), (y, x)):
        inner = move | c
        q4 = query_term(inner)
        jc4 = join_term(crossing(known, move, c))
        sq4a, sq4b = sorted((query_term(move), query_term(c)))
        jc3 = join_term(crossing(known, keep, inner))
        sq3a, sq3b = sorted((query_term(keep), q4))
        out.append(tuple(args[:8]) + (q1, jc3, sq3a, sq3b, q4, jc4, sq4a, sq4b))
    return out
