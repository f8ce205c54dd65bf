"""Blocks world: unstack-stack initial plans, random tower problems and an
exact optimal-length oracle for small instances."""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass

from ..model import GroundAction, ProblemSpec
from . import DomainPack, PackError, Param, read_rules

TABLE = "table"


class InconsistentGoal(PackError):
    pass


def _positions(atoms, blocks: set[str] | None = None, what: str = "state") -> dict[str, str]:
    below: dict[str, str] = {}
    for a in atoms:
        if a[0] != "on":
            continue
        x, y = a[1], a[2]
        if x == y:
            raise InconsistentGoal(f"{what}: {x} on itself")
        if x in below and below[x] != y:
            raise InconsistentGoal(f"{what}: {x} on both {below[x]} and {y}")
        below[x] = y
    seen: dict[str, str] = {}
    for x, y in below.items():
        if y != TABLE:
            if y in seen:
                raise InconsistentGoal(f"{what}: {seen[y]} and {x} both on {y}")
            seen[y] = x
    for x in below:
        path, cur = set(), x
        while cur in below:
            if cur in path:
                raise InconsistentGoal(f"{what}: cyclic tower through {x}")
            path.add(cur)
            cur = below[cur]
    return below


def _blocks(problem: ProblemSpec) -> list[str]:
    names = {a[1] for a in problem.init if a[0] == "on"} | {a[2] for a in problem.init if a[0] == "on"}
    names |= {a[1] for a in problem.goal if a[0] == "on"} | {a[2] for a in problem.goal if a[0] == "on"}
    names |= {o for o in problem.objects}
    names.discard(TABLE)
    return sorted(names)


def _well_placed(current: dict[str, str], goal: dict[str, str]) -> set[str]:
    """Blocks whose support already matches the goal all the way down.
    A block without a goal position may stay where it is when its support is
    settled and no goal block has to go on that support."""
    memo: dict[str, bool] = {}
    wanted = {y for x, y in goal.items() if y != TABLE}

    def ok(x: str) -> bool:
        if x not in memo:
            memo[x] = False
            here = current.get(x, TABLE)
            if x in goal:
                memo[x] = here == goal[x] and (here == TABLE or ok(here))
            else:
                memo[x] = here == TABLE or (ok(here) and here not in wanted)
        return memo[x]

    return {x for x in current if ok(x)}


def _towers(below: dict[str, str]) -> list[list[str]]:
    """Towers bottom-up, ordered by bottom block name."""
    above = {y: x for x, y in below.items() if y != TABLE}
    out = []
    for b in sorted(x for x, y in below.items() if y == TABLE):
        tower = [b]
        while tower[-1] in above:
            tower.append(above[tower[-1]])
        out.append(tower)
    return out


def blocks_initial(problem: ProblemSpec, rng: random.Random | None = None) -> list[GroundAction]:
    """Put every misplaced block on the table, then build the goal towers
    bottom-up. Blocks already in their final position are left alone."""
    ground = PACK.domain.ground
    current = _positions(problem.init, what="initial state")
    goal = _positions(problem.goal, what="goal")
    unknown = set(goal) - set(current)
    if unknown:
        raise PackError(f"blocks {sorted(unknown)} missing from the initial state")
    fixed = _well_placed(current, goal)
    seq: list[GroundAction] = []
    for tower in _towers(current):
        for x in reversed(tower):
            if x in fixed:
                break
            if current[x] != TABLE:
                seq.append(ground("unstack", [x, current[x]]))
    for tower in _towers({x: goal.get(x, TABLE) for x in current}):
        for lower, x in zip(tower, tower[1:]):
            if x not in fixed:
                seq.append(ground("stack", [x, lower, TABLE]))
    return seq


# -- exact oracle ---------------------------------------------------------------


def _encode(below: dict[str, str], names: list[str]) -> tuple:
    return tuple(below.get(x, TABLE) for x in names)


def _moves(state: tuple, names: list[str]):
    support = set(state)
    clear = [i for i, x in enumerate(names) if x not in support]
    for i in clear:
        if state[i] != TABLE:
            yield state[:i] + (TABLE,) + state[i + 1:]
        for j in clear:
            if j != i and state[i] != names[j]:
                yield state[:i] + (names[j],) + state[i + 1:]


def _goal_test(goal: dict[str, str], names: list[str]):
    want = [(i, goal[x]) for i, x in enumerate(names) if x in goal]
    return lambda s: all(s[i] == y for i, y in want)


def optimal_length_bfs(problem: ProblemSpec) -> int:
    """Fewest moves by breadth-first search. Exponential; for n <= 6."""
    names = _blocks(problem)
    goal = _positions(problem.goal, what="goal")
    done = _goal_test(goal, names)
    start = _encode(_positions(problem.init), names)
    frontier, dist = deque([start]), {start: 0}
    while frontier:
        s = frontier.popleft()
        if done(s):
            return dist[s]
        for t in _moves(s, names):
            if t not in dist:
                dist[t] = dist[s] + 1
                frontier.append(t)
    raise PackError("goal unreachable")


def optimal_length(problem: ProblemSpec) -> int:
    """Fewest moves by A* with the admissible count of misplaced blocks
    (each needs at least one move)."""
    names = _blocks(problem)
    goal = _positions(problem.goal, what="goal")
    done = _goal_test(goal, names)
    index = {x: i for i, x in enumerate(names)}

    def h(s: tuple) -> int:
        memo: dict[int, bool] = {}

        def ok(i: int) -> bool:
            if i not in memo:
                here, want = s[i], goal.get(names[i], TABLE)
                memo[i] = here == want and (here == TABLE or ok(index[here]))
            return memo[i]

        return sum(1 for i in range(len(names)) if not ok(i))

    start = _encode(_positions(problem.init), names)
    g = {start: 0}
    heap = [(h(start), 0, start)]
    while heap:
        f, cost, s = heapq.heappop(heap)
        if cost > g[s]:
            continue
        if done(s):
            return cost
        for t in _moves(s, names):
            c = cost + 1
            if c < g.get(t, c + 1):
                g[t] = c
                heapq.heappush(heap, (c + h(t), c, t))
    raise PackError("goal unreachable")


# -- generator ------------------------------------------------------------------


def random_towers(names: list[str], rng: random.Random) -> dict[str, str]:
    """Shuffle the blocks, then put each on the previous one or start a new
    tower with equal odds."""
    order = list(names)
    rng.shuffle(order)
    below: dict[str, str] = {}
    prev = TABLE
    for x in order:
        below[x] = prev if prev != TABLE and rng.random() < 0.5 else TABLE
        prev = x
    return below


def state_atoms(below: dict[str, str]) -> frozenset:
    covered = {y for y in below.values()}
    atoms = {("on", x, y) for x, y in below.items()}
    atoms |= {("clear", x) for x in below if x not in covered}
    return frozenset(atoms)


@dataclass
class BlocksPack(DomainPack):
    def initial_sequence(self, problem: ProblemSpec, rng: random.Random) -> list[GroundAction]:
        return blocks_initial(problem, rng)

    def generate(self, rng: random.Random, **params: int) -> ProblemSpec:
        n = self.check_params(params)["blocks"]
        names = [f"b{i}" for i in range(1, n + 1)]
        init = random_towers(names, rng)
        goal = random_towers(names, rng)
        goal_atoms = tuple(sorted(("on", x, y) for x, y in goal.items()))
        return ProblemSpec(f"blocks-{n}", "blocks", tuple(names), state_atoms(init), goal_atoms)

    @property
    def full_rules(self):
        return read_rules("blocks/rules-full.pbr")


PACK = BlocksPack(name="blocks", size_param="blocks", cost_name="step-count",
                  params={"blocks": Param(6, 1, 500, "number of blocks")})
