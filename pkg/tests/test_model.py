from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from fixtures import BLOCKS, PACKS, TOWER_GOAL, TOWER_INIT, tower_sequence
from planrewrite.model import (
    DomainError, GroundingError, Not, PreconditionError, execute, holds, instantiate, parse_domain,
    parse_problem, print_domain, print_problem, progress,
)
from planrewrite.sexpr import SExprSyntaxError, dumps, read, read_all

MANUFACTURING = parse_domain((PACKS / "data" / "manufacturing" / "domain.pbr").read_text())


# -- s-expressions ------------------------------------------------------------


def test_reader_lowercases_symbols_and_reads_numbers():
    assert read("(Stack ?X 3 Table -2)") == ["stack", "?x", 3, "table", -2]


def test_reader_reports_position_of_unbalanced_paren():
    with pytest.raises(SExprSyntaxError) as info:
        read("(a (b c)\n  (d")
    assert "line" in str(info.value)


def test_reader_skips_comments():
    assert read_all("; note\n(a b) ; tail\n(c)") == [["a", "b"], ["c"]]


symbols = st.from_regex(r"[a-z][a-z0-9\-]{0,6}", fullmatch=True)
sexprs = st.recursive(st.one_of(symbols, st.integers(-50, 50)), lambda inner: st.lists(inner, max_size=4),
                      max_leaves=12)


@given(sexprs)
def test_dump_read_roundtrip(x):
    assert read(dumps(x)) == x


# -- domains ------------------------------------------------------------------


def test_blocks_domain_has_two_schemas():
    assert [op.name for op in BLOCKS.operators] == ["stack", "unstack"]
    assert BLOCKS.operator("stack").arity == 3
    assert BLOCKS.operator("unstack").arity == 2


def test_empty_domain_is_valid():
    d = parse_domain("(define (domain nothing))")
    assert d.operators == ()


def test_punch_has_two_resource_templates():
    punch = MANUFACTURING.operator("punch")
    assert set(punch.resources) == {("machine", "punch"), ("is-object", "?x")}


def test_arity_conflict_is_rejected():
    text = """(define (domain bad))
    (define (operator a) :parameters (?x) :precondition (p ?x) :effect (q ?x))
    (define (operator b) :parameters (?x) :precondition (p ?x ?x) :effect (q ?x))"""
    with pytest.raises(DomainError, match="arity"):
        parse_domain(text)


def test_quantifier_over_undeclared_sort_is_rejected():
    text = """(define (domain bad))
    (define (operator a) :parameters (?x) :precondition (p ?x)
      :effect (:forall (?colour) (:not (q ?x ?colour))))"""
    with pytest.raises(DomainError, match="sort"):
        parse_domain(text)


def test_domain_print_parse_roundtrip():
    again = parse_domain(print_domain(MANUFACTURING))
    assert again.operators == MANUFACTURING.operators
    assert again.sorts == MANUFACTURING.sorts


def test_problem_print_parse_roundtrip():
    p = parse_problem((PACKS / "data" / "blocks" / "tower.pbr").read_text())
    assert p.init == TOWER_INIT
    assert p.goal == TOWER_GOAL
    assert parse_problem(print_problem(p)) == p


# -- instantiation ------------------------------------------------------------


def test_punch_expands_surface_deletes_over_the_sort():
    a = MANUFACTURING.ground("punch", ["a", "small", "front"])
    assert a.deletes == {("surface-condition", "a", "polished"), ("surface-condition", "a", "smooth")}
    assert a.adds == {("surface-condition", "a", "rough"), ("has-hole", "a", "small", "front")}
    assert a.resources == {("machine", "punch"), ("is-object", "a")}


def test_stack_from_table_grounds():
    a = BLOCKS.ground("stack", ["a", "b", "table"])
    assert a.adds == {("on", "a", "b"), ("clear", "table")}
    assert ("on", "a", "table") in a.deletes


def test_stack_constraint_violation():
    with pytest.raises(GroundingError):
        BLOCKS.ground("stack", ["a", "a", "table"])


def test_zero_effect_schema():
    d = parse_domain("(define (domain z)) (define (operator noop) :parameters () :precondition nil :effect nil)")
    a = d.ground("noop", [])
    assert a.adds == frozenset() and a.deletes == frozenset()


def test_unbound_parameter():
    with pytest.raises(GroundingError):
        instantiate(BLOCKS.operator("unstack"), {"?x": "a"}, {})


# -- states -------------------------------------------------------------------


def test_holds_membership_and_closed_world():
    s = {("on", "c", "a")}
    assert holds(s, ("on", "c", "a"))
    assert holds(s, Not(("clear", "c")))


def test_tower_goal_is_false_initially():
    assert not all(holds(TOWER_INIT, g) for g in TOWER_GOAL)


def test_holds_rejects_variables():
    with pytest.raises(ValueError):
        holds(set(), ("on", "?x", "a"))


def test_progress_unstack():
    a = BLOCKS.ground("unstack", ["c", "a"])
    s = progress(TOWER_INIT, a)
    assert ("on", "c", "table") in s and ("clear", "a") in s
    assert ("on", "c", "a") not in s


def test_progress_rejects_unmet_precondition():
    with pytest.raises(PreconditionError):
        progress(TOWER_INIT, BLOCKS.ground("unstack", ["a", "c"]))


def test_empty_effects_leave_state_unchanged():
    d = parse_domain("(define (domain z)) (define (operator noop) :parameters () :precondition nil :effect nil)")
    assert progress(TOWER_INIT, d.ground("noop", [])) == TOWER_INIT


def test_tower_sequence_reaches_goal():
    final = execute(TOWER_INIT, tower_sequence())
    assert all(g in final for g in TOWER_GOAL)
