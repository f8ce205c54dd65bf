"""Manufacturing process planning: a greedy per-part subplanner whose
subsequences are concatenated and merged by TO2PO, plus a random generator
spreading goals over parts."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..model import GroundAction, ProblemSpec, progress
from . import DomainPack, PackError, Param, UnsolvableProblem

COLORS = ("red", "blue", "green", "yellow", "black")
WIDTHS = ("small", "medium", "large")
ORIENTATIONS = ("front", "back", "side")
REGULAR = ("cylindrical", "rectangular")


def composite_name(x: str, y: str) -> str:
    return f"{x}_{y}"


def _group_goals(problem: ProblemSpec) -> tuple[dict[str, list[tuple]], list[tuple]]:
    """Per-part goals in listed order, and the joined goals."""
    parts: dict[str, list[tuple]] = {}
    joins = []
    for g in problem.goal:
        if g[0] == "joined":
            joins.append(g[1:])
        elif g[0] in ("shape", "temperature", "surface-condition", "has-hole", "painted"):
            parts.setdefault(g[1], []).append(g)
        else:
            raise PackError(f"unknown manufacturing goal {g}")
    for x, goals in parts.items():
        surfaces = {g[2] for g in goals if g[0] == "surface-condition"}
        temps = {g[2] for g in goals if g[0] == "temperature"}
        if len(surfaces) > 1 or len(temps) > 1:
            raise UnsolvableProblem(f"{x}: conflicting goals")
    return parts, joins


class _Greedy:
    """Depth-first, goal-ordered subplanner with a fixed operator preference."""

    def __init__(self, problem: ProblemSpec):
        self.problem = problem
        self.state = frozenset(problem.init)
        self.ground = PACK.domain.ground
        self.seq: list[GroundAction] = []

    def has(self, *atom) -> bool:
        return tuple(atom) in self.state

    def do(self, name: str, *args) -> None:
        a = self.ground(name, list(args))
        self.state = progress(self.state, a)
        self.seq.append(a)

    def can_hole(self, x: str, w: str, o: str) -> str | None:
        if self.has("has-hole", x, w, o):
            return "have"
        if self.has("is-punchable", x, w, o) and self.has("has-clamp", "punch"):
            return "punch"
        if self.has("have-bit", w) and self.has("is-drillable", x, o):
            return "drill-press"
        return None

    def hole(self, x: str, w: str, o: str) -> None:
        how = self.can_hole(x, w, o)
        if how is None:
            raise UnsolvableProblem(f"no way to make a {w} hole in {x} at {o}")
        if how != "have":
            self.do(how, x, w, o)

    def achieve(self, g: tuple) -> None:
        head, x = g[0], g[1]
        if head == "shape":
            if g[2] != "cylindrical":
                raise UnsolvableProblem(f"no operator makes {x} {g[2]}")
            self.do("lathe", x)
        elif head == "temperature":
            if g[2] != "hot":
                raise UnsolvableProblem(f"no operator cools {x}")
            self.do("roll", x)
        elif head == "surface-condition":
            if g[2] == "polished":
                if not (self.has("temperature", x, "cold") and self.has("has-clamp", "polisher")):
                    raise UnsolvableProblem(f"{x} cannot be polished")
                self.do("polish", x)
            elif g[2] == "smooth":
                self.do("grind", x)
            elif g[2] == "rough":
                self.do("lathe", x)
            else:
                raise UnsolvableProblem(f"no operator makes {x} {g[2]}")
        elif head == "has-hole":
            self.hole(x, g[2], g[3])
        elif head == "painted":
            c = g[2]
            if self.has("have-paint-for-immersion", c):
                self.do("immersion-paint", x, c)
                return
            if not (self.has("sprayable", c) and self.has("has-clamp", "spray-painter")):
                raise UnsolvableProblem(f"no paint for {c}")
            if not self.has("temperature", x, "cold"):
                raise UnsolvableProblem(f"{x} is too hot to spray paint")
            if not self.has("shape", x, "cylindrical"):
                # spraying needs a regular shape; the naive choice is to lathe
                self.do("lathe", x)
            self.do("spray-paint", x, c, "cylindrical")

    def part(self, x: str, goals: list[tuple]) -> None:
        """Achieve goals in order; a goal clobbered by a later operation is
        queued again."""
        if not self.has("is-object", x):
            raise UnsolvableProblem(f"{x} is not an available part")
        agenda = list(goals)
        budget = 4 * len(goals) + 4
        while agenda:
            g = agenda.pop(0)
            if g in self.state:
                continue
            budget -= 1
            if budget < 0:
                raise UnsolvableProblem(f"{x}: goals keep undoing each other")
            self.achieve(g)
            agenda.extend(h for h in goals if h not in self.state and h not in agenda)

    def plan_join(self, x: str, y: str, o: str) -> list[tuple]:
        """Holes each part needs for its join (empty when welding)."""
        if self.has("can-be-welded", x, y, o):
            return []
        if not self.has("can-be-bolted", x, y, o):
            raise UnsolvableProblem(f"{x} and {y} cannot be joined at {o}")
        for w in WIDTHS:
            if self.has("bolt-width", w) and self.can_hole(x, w, o) and self.can_hole(y, w, o):
                return [(w, o)]
        raise UnsolvableProblem(f"no bolt fits {x} and {y} at {o}")

    def join(self, x: str, y: str, o: str) -> None:
        new = composite_name(x, y)
        if self.has("can-be-welded", x, y, o):
            self.do("weld", x, y, new, o)
            return
        for w in WIDTHS:
            if self.has("bolt-width", w) and self.has("has-hole", x, w, o) and self.has("has-hole", y, w, o):
                self.do("bolt", x, y, new, o, w)
                return
        raise UnsolvableProblem(f"holes for bolting {x} and {y} are missing")


def manufacturing_initial(problem: ProblemSpec, rng: random.Random | None = None) -> list[GroundAction]:
    """Solve each part on its own, in part order, then the joins, and
    concatenate the subsequences."""
    parts, joins = _group_goals(problem)
    planner = _Greedy(problem)
    joined: set[str] = set()
    for x, y, o in joins:
        if x in joined or y in joined:
            raise UnsolvableProblem(f"{x} or {y} is joined twice")
        joined |= {x, y}
        need = planner.plan_join(x, y, o)
        for part in (x, y):
            parts.setdefault(part, []).extend(("has-hole", part, w, o) for w, o in need)
    for name in sorted(parts):
        planner.part(name, parts[name])
    for x, y, o in joins:
        planner.join(x, y, o)
    missing = [g for g in problem.goal if g not in planner.state]
    if missing:
        raise UnsolvableProblem(f"goals undone by later operations: {missing}")
    return planner.seq


# -- generator ------------------------------------------------------------------


def shop_facts(parts: list[str], rng: random.Random) -> set[tuple]:
    """Static machine-shop facts plus random per-part capabilities."""
    facts: set[tuple] = {("has-clamp", m) for m in ("polisher", "punch", "spray-painter")}
    facts |= {("regular-shape", s) for s in REGULAR}
    for w in WIDTHS:
        facts.add(("have-bit", w))
        facts.add(("bolt-width", w))
    immersion = set(rng.sample(COLORS, 3))
    for c in COLORS:
        if c in immersion:
            facts.add(("have-paint-for-immersion", c))
        if c not in immersion or rng.random() < 0.5:
            facts.add(("sprayable", c))
    for x in parts:
        facts |= {("is-object", x), ("temperature", x, "cold"),
                  ("shape", x, rng.choice(("rectangular", "irregular"))),
                  ("surface-condition", x, "rough")}
        for o in ORIENTATIONS:
            facts.add(("is-drillable", x, o))
            for w in WIDTHS:
                if rng.random() < 0.5:
                    facts.add(("is-punchable", x, w, o))
    return facts


def _random_goal(parts: list[str], rng: random.Random, joinable: bool) -> tuple:
    kinds = ["painted"] * 3 + ["has-hole"] * 3 + ["surface"] * 2 + ["shape"] + (["joined"] if joinable else [])
    kind = rng.choice(kinds)
    x = rng.choice(parts)
    if kind == "painted":
        return ("painted", x, rng.choice(COLORS))
    if kind == "has-hole":
        return ("has-hole", x, rng.choice(WIDTHS), rng.choice(ORIENTATIONS))
    if kind == "surface":
        return ("surface-condition", x, rng.choice(("polished", "smooth")))
    if kind == "shape":
        return ("shape", x, "cylindrical")
    x, y = sorted(rng.sample(parts, 2))
    return ("joined", x, y, rng.choice(ORIENTATIONS))


@dataclass
class ManufacturingPack(DomainPack):
    def initial_sequence(self, problem: ProblemSpec, rng: random.Random) -> list[GroundAction]:
        return manufacturing_initial(problem, rng)

    def generate(self, rng: random.Random, **params: int) -> ProblemSpec:
        """Goals drawn one at a time and assigned to uniformly random parts;
        a draw that makes the problem unsolvable for the initial generator
        is redrawn."""
        p = self.check_params(params)
        parts = [f"p{i}" for i in range(1, p["parts"] + 1)]
        init = shop_facts(parts, rng)
        goals: list[tuple] = []
        joined: set[str] = set()
        attempts = 0
        while len(goals) < p["goals"]:
            attempts += 1
            if attempts > 100 * p["goals"]:
                raise PackError("could not draw a solvable goal set")
            free = [x for x in parts if x not in joined]
            g = _random_goal(parts, rng, p["joins"] and len(free) >= 2)
            if g in goals or any(a in joined for a in g[1:3] if g[0] == "joined"):
                continue
            extra = set()
            if g[0] == "joined":
                x, y, o = g[1:]
                if x in joined or y in joined:
                    continue
                extra = {("composite-object", composite_name(x, y), o, x, y),
                         ("can-be-welded" if rng.random() < 0.5 else "can-be-bolted", x, y, o)}
            trial = ProblemSpec("trial", "manufacturing", tuple(parts), frozenset(init | extra),
                                tuple(goals + [g]))
            try:
                manufacturing_initial(trial)
            except UnsolvableProblem:
                continue
            goals.append(g)
            init |= extra
            if g[0] == "joined":
                joined |= {g[1], g[2]}
        name = f"manufacturing-{p['parts']}-{p['goals']}"
        return ProblemSpec(name, "manufacturing", tuple(parts), frozenset(init), tuple(goals))


PACK = ManufacturingPack(name="manufacturing", size_param="goals", cost_name="schedule-length",
                         params={"parts": Param(10, 1, 10, "number of parts"),
                                 "goals": Param(15, 1, 60, "number of goals"),
                                 "joins": Param(1, 0, 1, "allow joined goals")})
