"""Hand-built plans shared by the tests."""

from __future__ import annotations

from pathlib import Path

from planrewrite.model import parse_domain
from planrewrite.plan import GOAL, plan_from_links

PACKS = Path(__file__).resolve().parents[1] / "src" / "planrewrite" / "packs"

BLOCKS = parse_domain((PACKS / "data" / "blocks" / "domain.pbr").read_text())

TOWER_INIT = frozenset({("on", "c", "a"), ("on", "a", "table"), ("on", "b", "d"),
                       ("on", "d", "table"), ("clear", "c"), ("clear", "b")})
TOWER_GOAL = (("on", "a", "b"), ("on", "b", "c"), ("on", "c", "d"))


def tower_plan():
    """The five-step unstack-stack plan for the four-block tower problem."""
    g = BLOCKS.ground
    steps = {
        1: g("stack", ["c", "d", "table"]),
        2: g("stack", ["b", "c", "table"]),
        3: g("stack", ["a", "b", "table"]),
        4: g("unstack", ["c", "a"]),
        5: g("unstack", ["b", "d"]),
    }
    links = [
        (0, ("clear", "c"), 1), (0, ("clear", "b"), 2), (0, ("clear", "c"), 2),
        (0, ("clear", "b"), 3), (0, ("clear", "c"), 4), (0, ("clear", "b"), 5),
        (4, ("clear", "a"), 3), (5, ("clear", "d"), 1),
        (4, ("on", "c", "table"), 1), (5, ("on", "b", "table"), 2),
        (0, ("on", "a", "table"), 3), (0, ("on", "c", "a"), 4), (0, ("on", "b", "d"), 5),
        (1, ("on", "c", "d"), GOAL), (2, ("on", "b", "c"), GOAL), (3, ("on", "a", "b"), GOAL),
    ]
    return plan_from_links(TOWER_INIT, TOWER_GOAL, steps, links, [(1, 2), (2, 3)])


def tower_sequence():
    g = BLOCKS.ground
    return [g("unstack", ["c", "a"]), g("unstack", ["b", "d"]), g("stack", ["c", "d", "table"]),
            g("stack", ["b", "c", "table"]), g("stack", ["a", "b", "table"])]


def tower_plan_rewritten():
    """The four-step result of replacing unstack(c a) and stack(c d table)."""
    g = BLOCKS.ground
    steps = {
        2: g("stack", ["b", "c", "table"]),
        3: g("stack", ["a", "b", "table"]),
        5: g("unstack", ["b", "d"]),
        6: g("stack", ["c", "d", "a"]),
    }
    links = [
        (0, ("clear", "b"), 2), (0, ("clear", "c"), 2), (0, ("clear", "b"), 3), (0, ("clear", "b"), 5),
        (5, ("on", "b", "table"), 2), (0, ("on", "a", "table"), 3), (0, ("on", "b", "d"), 5),
        (2, ("on", "b", "c"), GOAL), (3, ("on", "a", "b"), GOAL),
        (0, ("on", "c", "a"), 6), (0, ("clear", "c"), 6), (5, ("clear", "d"), 6),
        (6, ("clear", "a"), 3), (6, ("on", "c", "d"), GOAL),
    ]
    return plan_from_links(TOWER_INIT, TOWER_GOAL, steps, links, [(2, 3), (6, 2)])


# -- exponential embeddings ------------------------------------------------------

EMBEDDING_DOMAIN_TEXT = """
(define (domain embedding))
(define (operator MAKE-G0)
  :parameters ()
  :precondition (:and)
  :effect (:and (g0)))
(define (operator X)
  :parameters ()
  :precondition (:and)
  :effect (:and (g0) (:not (b))))
(define (operator X-STRICT)
  :parameters ()
  :precondition (:and)
  :effect (:and (g0) (:not (b)) (:not (a)) (:not (g1))))
(define (operator PRODUCE)
  :parameters (?i)
  :precondition (:and (ready ?i))
  :effect (:and (b) (made ?i)))
(define (operator PRODUCE-FIRST)
  :parameters (?i)
  :precondition (:and (ready ?i) (a))
  :effect (:and (b) (made ?i)))
(define (operator CONSUME)
  :parameters (?i)
  :precondition (:and (b) (made ?i))
  :effect (:and (done ?i)))
(define (operator CONSUME-FIRST)
  :parameters (?i)
  :precondition (:and (b) (made ?i))
  :effect (:and (done ?i) (g1)))
"""

EMBEDDING_RULES_TEXT = """
(define-rule :name use-x
  :if (:operators ((?n (make-g0))))
  :replace (:operators (?n))
  :with (:operators ((?m (x)))))
(define-rule :name use-x-strict
  :if (:operators ((?n (make-g0))))
  :replace (:operators (?n))
  :with (:operators ((?m (x-strict)))))
"""

EMBEDDING = parse_domain(EMBEDDING_DOMAIN_TEXT)


def embedding_plan(n: int):
    """n unordered producer/consumer pairs, each linking b, and one step
    supplying g0. A replacement for that step which deletes b must sit before
    each producer or after its consumer: 2^n ways. The first pair also uses
    a from the initial state and supplies g1 to the goal."""
    g = EMBEDDING.ground
    init = {("a",)} | {("ready", str(i)) for i in range(1, n + 1)}
    goal = [("g0",), ("g1",)] + [("done", str(i)) for i in range(1, n + 1)]
    steps = {1: g("make-g0", [])}
    links = [(1, ("g0",), GOAL), (0, ("a",), 2)]
    for i in range(1, n + 1):
        p, c = 2 * i, 2 * i + 1
        steps[p] = g("produce-first" if i == 1 else "produce", [str(i)])
        steps[c] = g("consume-first" if i == 1 else "consume", [str(i)])
        links += [(0, ("ready", str(i)), p), (p, ("b",), c), (p, ("made", str(i)), c),
                  (c, ("done", str(i)), GOAL)]
        if i == 1:
            links.append((c, ("g1",), GOAL))
    return plan_from_links(init, goal, steps, links)


TOY_MACHINES = parse_domain("""
(define (domain shop))
(define (operator punch)
  :parameters (?x)
  :resources ((machine punch) (is-object ?x))
  :precondition nil
  :effect (holed ?x))
""")


def applicable_actions(domain, state: frozenset, objects) -> list:
    """Every ground action applicable in ``state``. Parameters are bound by
    matching positive preconditions against the state; any left over range
    over ``objects``."""
    import itertools

    from planrewrite.model import GroundingError, applicable, is_var

    by_pred: dict = {}
    for a in state:
        by_pred.setdefault(a[0], []).append(a)
    out = []
    for op in domain.operators:
        pres = sorted(op.preconditions, key=lambda p: len(by_pred.get(p[0], ())))

        def bind(i, b):
            if i == len(pres):
                yield dict(b)
                return
            pat = pres[i]
            for fact in by_pred.get(pat[0], ()):
                if len(fact) != len(pat):
                    continue
                new, ok = dict(b), True
                for t, v in zip(pat[1:], fact[1:]):
                    if is_var(t):
                        if new.setdefault(t, v) != v:
                            ok = False
                            break
                    elif t != v:
                        ok = False
                        break
                if ok:
                    yield from bind(i + 1, new)

        seen = set()
        for b in bind(0, {}):
            free = [p for p in op.parameters if p not in b]
            for combo in itertools.product(objects, repeat=len(free)):
                full = {**b, **dict(zip(free, combo))}
                key = tuple(full[p] for p in op.parameters)
                if key in seen:
                    continue
                seen.add(key)
                try:
                    act = domain.ground(op.name, key)
                except (GroundingError, ValueError):
                    continue
                if applicable(state, act) and (act.adds - state or act.deletes & state):
                    out.append(act)
    out.sort(key=lambda a: (a.name, tuple(map(str, a.args))))
    return out


def random_walk(domain, problem, rng, length: int) -> tuple[list, tuple]:
    """A random executable sequence from the problem's initial state, and a
    goal made of atoms it added that still hold at the end."""
    from planrewrite.model import progress

    objects = sorted({str(o) for o in problem.objects} | {"table"})
    state = frozenset(problem.init)
    seq = []
    for _ in range(length):
        acts = applicable_actions(domain, state, objects)
        if not acts:
            break
        a = acts[rng.randrange(len(acts))]
        seq.append(a)
        state = progress(state, a)
    goal = tuple(sorted(state - frozenset(problem.init)))
    return seq, goal
