from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from fixtures import BLOCKS, TOWER_GOAL, TOWER_INIT, tower_plan, tower_plan_rewritten, tower_sequence
from planrewrite.model import parse_domain
from planrewrite.plan import (
    GOAL, START, CausalLink, CycleError, OperatorThreat, PartialPlan, PlanError, ResourceConflict,
    chain_depths, critical_paths, dump_plan, execute_order, find_threats, isomorphic, linearization_oracle,
    linearizations, load_plan, plan_from_links, relational_view, remove_subplan, validate,
)
from planrewrite.to2po import InvalidSequence, to2po, to2po_all

TOY = parse_domain("""
(define (domain toy))
(define (operator make) :parameters (?x) :precondition nil :effect (have ?x))
(define (operator use) :parameters (?x) :precondition (have ?x) :effect (:and (used ?x) (:not (have ?x))))
(define (operator tool) :parameters (?x) :resources ((machine m)) :precondition nil :effect (done ?x))
""")


def chain(n: int) -> PartialPlan:
    steps = {i: TOY.ground("make", [f"x{i}"]) for i in range(1, n + 1)}
    return plan_from_links([], [], steps, [], [(i, i + 1) for i in range(1, n)])


def unordered(n: int) -> PartialPlan:
    steps = {i: TOY.ground("make", [f"x{i}"]) for i in range(1, n + 1)}
    return plan_from_links([], [], steps, [])


# -- ordering queries ---------------------------------------------------------


def test_precedes():
    p = tower_plan()
    assert p.precedes(2, 3)
    assert not p.precedes(3, 3)
    assert not p.precedes(4, 5) and not p.precedes(5, 4)
    assert p.precedes(START, 1) and p.precedes(3, GOAL)


def test_precedes_unknown_step():
    with pytest.raises(PlanError):
        tower_plan().precedes(1, 99)


def test_possibly_between():
    p = chain(2)
    assert p.possibly_between(1, START, 2)
    assert not p.possibly_between(1, 1, 2)
    q = tower_plan_rewritten()
    q.remove_ordering(6, 2)
    assert q.possibly_between(2, 6, GOAL)


def test_adding_a_cycle_is_rejected():
    p = chain(3)
    with pytest.raises(CycleError):
        p.add_ordering(3, 1)
    assert (3, 1) not in p.orderings
    assert validate(p).valid


# -- removal and threats ------------------------------------------------------


def test_remove_subplan_opens_supported_conditions():
    out, opened = remove_subplan(tower_plan(), {1, 4})
    assert {(o.condition, o.consumer) for o in opened} == {(("clear", "a"), 3), (("on", "c", "d"), GOAL)}
    assert set(out.real_steps()) == {2, 3, 5}
    assert all(l.producer not in (1, 4) and l.consumer not in (1, 4) for l in out.links)


def test_remove_nothing():
    p = tower_plan()
    out, opened = remove_subplan(p, set())
    assert opened == set()
    assert out.key() == p.key()


def test_remove_side_effect_only_step():
    steps = {1: TOY.ground("make", ["a"]), 2: TOY.ground("make", ["b"]), 3: TOY.ground("use", ["a"])}
    p = plan_from_links([], [("used", "a")], steps, [(1, ("have", "a"), 3), (3, ("used", "a"), GOAL)])
    _, opened = remove_subplan(p, {2})
    assert opened == set()


def test_pseudo_steps_cannot_be_removed():
    with pytest.raises(PlanError):
        remove_subplan(tower_plan(), {START})


def test_threat_on_clear_c_without_the_new_ordering():
    q = tower_plan_rewritten()
    q.remove_ordering(6, 2)
    threats = find_threats(q)
    assert OperatorThreat(2, CausalLink(START, ("clear", "c"), 6)) in threats


def test_serialized_plan_without_deleters_has_no_threats():
    assert find_threats(chain(4)) == []


def test_two_unordered_users_of_a_machine_conflict():
    steps = {1: TOY.ground("tool", ["a"]), 2: TOY.ground("tool", ["b"])}
    p = plan_from_links([], [], steps, [])
    assert find_threats(p) == [ResourceConflict(1, 2, ("machine", "m"))]


# -- validation ---------------------------------------------------------------


def test_tower_plan_is_valid():
    assert validate(tower_plan()).valid


def test_missing_threat_ordering_is_reported():
    p = tower_plan()
    p.remove_ordering(2, 3)
    report = validate(p)
    assert not report.valid
    assert any("step 3 threatens (clear b)" in v and "-> 2" in v for v in report.violations)


def test_empty_plan_is_valid():
    assert validate(PartialPlan([], [])).valid


def test_open_condition_is_reported():
    p = tower_plan()
    p.remove_link(CausalLink(4, ("clear", "a"), 3))
    assert any("open condition (clear a) at step 3" in v for v in validate(p).violations)


# -- relational view ----------------------------------------------------------


def test_relational_view_tables():
    v = relational_view(tower_plan())
    assert v.steps["unstack"] == [(4, "c", "a"), (5, "b", "d")]
    assert set(v.links["clear"]) == {(0, 1, "c"), (0, 2, "b"), (0, 2, "c"), (0, 3, "b"), (0, 4, "c"),
                                     (0, 5, "b"), (4, 3, "a"), (5, 1, "d")}
    assert "drive" not in v.steps


# -- critical paths -----------------------------------------------------------


def test_critical_path_of_unordered_steps():
    length, paths = critical_paths(unordered(4))
    assert length == 1 and len(paths) == 4


@pytest.mark.parametrize("k", [1, 2, 5])
def test_critical_path_of_a_chain(k):
    length, paths = critical_paths(chain(k))
    assert length == k and paths == [tuple(range(1, k + 1))]


def test_chain_depths_head_and_tail():
    length, head, tail = chain_depths(tower_plan())
    assert length == 4
    assert head[3] == 4 and tail[4] == 4


# -- linearizations -----------------------------------------------------------


def test_tower_linearizations():
    orders = list(linearizations(tower_plan()))
    assert sorted(orders) == [(4, 5, 1, 2, 3), (5, 4, 1, 2, 3)]
    assert all(execute_order(tower_plan(), o) for o in orders)


def test_chain_has_one_linearization():
    assert len(list(linearizations(chain(5)))) == 1


@pytest.mark.parametrize("n", [1, 3, 5])
def test_unordered_steps_have_factorial_linearizations(n):
    assert len(list(linearizations(unordered(n)))) == math.factorial(n)


def test_linearization_guard():
    with pytest.raises(PlanError):
        list(linearizations(unordered(13)))


def test_oracle_rejects_invalid_plan():
    p = tower_plan()
    p.remove_ordering(2, 3)
    assert not linearization_oracle(p)


# -- serialization and isomorphism --------------------------------------------


def test_dump_load_roundtrip():
    p = tower_plan()
    q = load_plan(dump_plan(p), BLOCKS, TOWER_INIT, TOWER_GOAL)
    assert q.key() == p.key()
    assert validate(q).valid


def test_isomorphism_ignores_step_ids():
    p = tower_plan()
    renumber = {1: 11, 2: 12, 3: 13, 4: 14, 5: 15, START: START, GOAL: GOAL}
    steps = {renumber[s]: p.steps[s] for s in p.real_steps()}
    links = [(renumber[l.producer], l.condition, renumber[l.consumer]) for l in p.links]
    q = plan_from_links(TOWER_INIT, TOWER_GOAL, steps, links, [(12, 13), (11, 12)])
    assert isomorphic(p, q)
    assert not isomorphic(p, tower_plan_rewritten())


# -- to2po --------------------------------------------------------------------


def test_to2po_reproduces_the_tower_plan():
    p = to2po(TOWER_INIT, TOWER_GOAL, tower_sequence())
    assert isomorphic(p, tower_plan())
    assert {(a, b) for (a, b), o in p.orderings.items() if o == "threat-resolution"} == {(3, 4), (4, 5)}


def test_to2po_single_action():
    a = BLOCKS.ground("unstack", ["c", "a"])
    p = to2po(TOWER_INIT, [("on", "c", "table")], [a])
    assert p.real_steps() == [1]
    assert p.precedes(START, 1) and p.precedes(1, GOAL)


def test_to2po_leaves_independent_actions_unordered():
    seq = [TOY.ground("make", ["a"]), TOY.ground("make", ["b"])]
    p = to2po([], [("have", "a"), ("have", "b")], seq)
    assert not p.precedes(1, 2) and not p.precedes(2, 1)
    assert all(execute_order(p, o) for o in linearizations(p))


def test_to2po_names_the_failing_precondition():
    seq = [BLOCKS.ground("stack", ["c", "d", "a"])]
    with pytest.raises(InvalidSequence, match=r"step 1.*\(clear d\)"):
        to2po(TOWER_INIT, TOWER_GOAL, seq)


def test_to2po_all_yields_alternative_producers():
    seq = [TOY.ground("make", ["a"]), TOY.ground("make", ["a"]), TOY.ground("use", ["a"])]
    plans = list(to2po_all([], [("used", "a")], seq))
    producers = sorted(next(l.producer for l in p.links if l.condition == ("have", "a")) for p in plans)
    assert producers == [1, 2]
    assert plans[0].key() == to2po([], [("used", "a")], seq).key()


@st.composite
def toy_sequences(draw):
    """Random executable sequences over make/use/tool on three objects."""
    n = draw(st.integers(1, 7))
    state: set = set()
    seq = []
    for _ in range(n):
        x = draw(st.sampled_from(["a", "b", "c"]))
        kind = draw(st.sampled_from(["make", "use", "tool"]))
        if kind == "use" and ("have", x) not in state:
            kind = "make"
        a = TOY.ground(kind, [x])
        state = (state - a.deletes) | a.adds
        seq.append(a)
    goal = sorted(state)
    return seq, goal


@settings(max_examples=150, deadline=None)
@given(toy_sequences())
def test_to2po_outputs_execute_in_every_order(case):
    seq, goal = case
    plans = list(to2po_all([], goal, seq))
    assert plans
    for p in plans:
        assert validate(p).valid
        assert linearization_oracle(p)
