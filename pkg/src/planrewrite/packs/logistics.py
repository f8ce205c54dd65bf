"""Logistics with one truck in one city: circular delivery trips from the
truck's starting location, and a generator with as many locations as
packages."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..model import GroundAction, ProblemSpec
from . import DomainPack, PackError, Param


def _layout(problem: ProblemSpec) -> tuple[str, str, str, dict[str, str], dict[str, str]]:
    trucks = sorted(a[1] for a in problem.init if a[0] == "truck")
    if len(trucks) != 1:
        raise PackError(f"expected exactly one truck, found {len(trucks)}")
    truck = trucks[0]
    cities = sorted(a[1] for a in problem.init if a[0] == "city")
    if len(cities) != 1:
        raise PackError(f"expected exactly one city, found {len(cities)}")
    objs = {a[1] for a in problem.init if a[0] == "obj"}
    where: dict[str, str] = {}
    home = None
    for a in problem.init:
        if a[0] == "at" and a[1] == truck:
            home = a[2]
        elif a[0] == "at" and a[1] in objs:
            where[a[1]] = a[2]
    if home is None:
        raise PackError(f"location of truck {truck} unknown")
    dest = {}
    for g in problem.goal:
        if g[0] != "at" or g[1] not in objs:
            raise PackError(f"unsupported logistics goal {g}")
        dest[g[1]] = g[2]
    return truck, cities[0], home, where, dest


def logistics_initial(problem: ProblemSpec, rng: random.Random | None = None) -> list[GroundAction]:
    """Deliver packages one at a time in name order, each on a round trip
    from the truck's starting location."""
    ground = PACK.domain.ground
    truck, city, home, where, dest = _layout(problem)
    seq: list[GroundAction] = []

    def drive(a: str, b: str) -> None:
        if a != b:
            seq.append(ground("drive-truck", [truck, a, b, city]))

    for p in sorted(dest):
        if p not in where:
            raise PackError(f"location of package {p} unknown")
        src, dst = where[p], dest[p]
        if src == dst:
            continue
        drive(home, src)
        seq.append(ground("load-truck", [p, truck, src]))
        drive(src, dst)
        seq.append(ground("unload-truck", [p, truck, dst]))
        drive(dst, home)
    return seq


def logistics_problem(truck_at: str, packages: dict[str, tuple[str, str]], locations: list[str],
                      name: str = "logistics", truck: str = "t1", city: str = "c") -> ProblemSpec:
    init = {("truck", truck), ("city", city), ("at", truck, truck_at)}
    for loc in locations:
        init |= {("location", loc), ("in-city", loc, city)}
    goal = []
    for p, (src, dst) in sorted(packages.items()):
        init |= {("obj", p), ("at", p, src)}
        goal.append(("at", p, dst))
    objects = (truck, city, *locations, *sorted(packages))
    return ProblemSpec(name, "logistics", objects, frozenset(init), tuple(goal))


@dataclass
class LogisticsPack(DomainPack):
    def initial_sequence(self, problem: ProblemSpec, rng: random.Random) -> list[GroundAction]:
        return logistics_initial(problem, rng)

    def generate(self, rng: random.Random, **params: int) -> ProblemSpec:
        """n packages and n locations; each package starts and ends at
        distinct random locations."""
        n = self.check_params(params)["packages"]
        locs = [f"l{i}" for i in range(1, max(n, 2) + 1)]
        packages = {}
        for i in range(1, n + 1):
            src, dst = rng.sample(locs, 2)
            packages[f"p{i}"] = (src, dst)
        return logistics_problem(rng.choice(locs), packages, locs, name=f"logistics-{n}")


PACK = LogisticsPack(name="logistics", size_param="packages", cost_name="schedule-length",
                     params={"packages": Param(5, 1, 100, "packages (and locations)")})
