"""Domain packs: operators, rewriting rules, cost selection, initial-plan
generators and seeded problem generators for each shipped domain."""

from __future__ import annotations

import importlib
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..costs import CostFunction, SCHEDULE_LENGTH, STEP_COUNT
from ..model import DomainSpec, GroundAction, ProblemSpec, execute, parse_domain
from ..plan import PartialPlan
from ..rules import Registry, RewritingRule, builtin_library, parse_rules
from ..to2po import to2po

DATA = Path(__file__).resolve().parent / "data"

PACK_NAMES = ("blocks", "manufacturing", "logistics", "query")


class PackError(ValueError):
    pass


class UnsolvableProblem(PackError):
    """The pack's initial generator cannot reach the goal."""


@dataclass(frozen=True)
class Param:
    default: int
    low: int
    high: int
    doc: str = ""


def read_rules(*names: str, registry: Registry | None = None) -> tuple[RewritingRule, ...]:
    rules: list[RewritingRule] = []
    for n in names:
        rules.extend(parse_rules((DATA / n).read_text(), registry))
    return tuple(rules)


@dataclass
class DomainPack:
    """Base pack. Subclasses fill in the generators."""

    name: str = ""
    rule_file: str = "rules.pbr"
    cost_name: str = "step-count"
    params: Mapping[str, Param] = field(default_factory=dict)
    size_param: str = ""  # the parameter a bench size sweep varies

    @property
    def directory(self) -> Path:
        return DATA / self.name

    @property
    def domain(self) -> DomainSpec:
        if not hasattr(self, "_domain"):
            self._domain = parse_domain((self.directory / "domain.pbr").read_text())
        return self._domain

    @property
    def rules(self) -> tuple[RewritingRule, ...]:
        if not hasattr(self, "_rules"):
            self._rules = read_rules(f"{self.name}/{self.rule_file}", registry=self.rule_registry())
        return self._rules

    def rule_registry(self) -> Registry:
        """Registry the rule files are checked against."""
        return builtin_library()

    # Per-problem views; overridden where interpreted predicates depend on data.
    def domain_for(self, problem: ProblemSpec) -> DomainSpec:
        return self.domain

    def registry_for(self, problem: ProblemSpec) -> Registry:
        return builtin_library()

    def cost_for(self, problem: ProblemSpec) -> CostFunction:
        return {"step-count": STEP_COUNT, "schedule-length": SCHEDULE_LENGTH}[self.cost_name]

    def initial_sequence(self, problem: ProblemSpec, rng: random.Random) -> list[GroundAction]:
        raise NotImplementedError

    def initial_plan(self, problem: ProblemSpec, rng: random.Random) -> PartialPlan:
        seq = self.initial_sequence(problem, rng)
        return to2po(problem.init, problem.goal, seq)

    def generate(self, rng: random.Random, **params: int) -> ProblemSpec:
        raise NotImplementedError

    def check_params(self, params: Mapping[str, Any]) -> dict[str, int]:
        out = {}
        for key in params:
            if key not in self.params:
                raise PackError(f"{self.name}: unknown parameter {key}; expected {sorted(self.params)}")
        for key, spec in self.params.items():
            value = int(params.get(key, spec.default))
            if not spec.low <= value <= spec.high:
                raise PackError(f"{self.name}: {key}={value} outside [{spec.low}, {spec.high}]")
            out[key] = value
        return out

    def reaches_goal(self, problem: ProblemSpec, seq: list[GroundAction]) -> bool:
        final = execute(problem.init, seq)
        return all(g in final for g in problem.goal)


_CACHE: dict[str, DomainPack] = {}


def load_pack(name: str) -> DomainPack:
    if name not in PACK_NAMES:
        raise PackError(f"unknown pack {name}; expected one of {', '.join(PACK_NAMES)}")
    if name not in _CACHE:
        module = importlib.import_module(f"{__name__}.{name}")
        _CACHE[name] = module.PACK
    return _CACHE[name]


def generate_problem(pack: str | DomainPack, rng: random.Random, **params: int) -> ProblemSpec:
    p = load_pack(pack) if isinstance(pack, str) else pack
    return p.generate(rng, **params)


def resource_swap_rule() -> RewritingRule:
    return read_rules("resource-swap.pbr")[0]
