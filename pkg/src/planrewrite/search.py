"""Local search over rewriting neighborhoods: first improvement with a plateau
random walk, best improvement (steepest descent), and restarts."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .costs import CostFunction
from .model import DomainSpec
from .plan import PartialPlan, validate
from .rewrite import neighborhood
from .rules import Registry, RewritingRule, builtin_library

InitialGenerator = Callable[[random.Random], PartialPlan]


class SearchError(RuntimeError):
    def __init__(self, message: str, restart: int):
        super().__init__(f"restart {restart}: {message}")
        self.restart = restart


@dataclass
class SearchConfig:
    strategy: str = "first"          # "first" | "best"
    plateau_budget: int = 100
    plateau_counts: str = "considered"  # "considered" | "accepted"
    restarts: int = 1
    max_iterations: int = 10_000
    wall_budget: float | None = None  # seconds, whole run
    seed: int = 0
    check_valid: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in ("first", "best"):
            raise ValueError(f"unknown strategy {self.strategy}")
        if self.plateau_counts not in ("considered", "accepted"):
            raise ValueError(f"unknown plateau counting {self.plateau_counts}")
        if min(self.plateau_budget, self.restarts, self.max_iterations) < 0:
            raise ValueError("budgets must be nonnegative")


@dataclass(frozen=True)
class TraceEvent:
    iteration: int
    restart: int
    rule: str
    cost_before: Fraction
    cost_after: Fraction
    best_cost: Fraction
    elapsed_ms: int

    def csv(self, timing: bool = True) -> str:
        cols = [self.iteration, self.restart, self.rule, _num(self.cost_before),
                _num(self.cost_after), _num(self.best_cost)]
        if timing:
            cols.append(self.elapsed_ms)
        return ",".join(str(c) for c in cols)


TRACE_HEADER = "iteration,restart,rule,cost_before,cost_after,best_cost"


def _num(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class SearchTrace:
    events: list[TraceEvent] = field(default_factory=list)
    best_plan: PartialPlan | None = None
    best_cost: Fraction | None = None
    winner_restart: int = 0
    initial_costs: list[Fraction] = field(default_factory=list)
    iterations: int = 0
    rewrites: int = 0

    def to_csv(self, timing: bool = True) -> str:
        head = TRACE_HEADER + (",elapsed_ms" if timing else "")
        return "\n".join([head] + [e.csv(timing) for e in self.events]) + "\n"


def restart_rng(seed: int, restart: int) -> random.Random:
    """Independent stream per restart, stable when the restart count changes."""
    return random.Random(f"{seed}/restart/{restart}")


def _local_search(plan: PartialPlan, rules: Sequence[RewritingRule], cost: CostFunction,
                  domain: DomainSpec, registry: Registry, config: SearchConfig, rng: random.Random,
                  restart: int, trace: SearchTrace, clock: Callable[[], int], deadline: float | None,
                  global_best: list) -> tuple[PartialPlan, Fraction]:
    current, current_cost = plan, Fraction(cost(plan))
    budget = config.plateau_budget
    best, best_cost = current, current_cost

    def record(rule: str, before: Fraction, after: Fraction) -> None:
        if global_best[0] is None or after < global_best[0]:
            global_best[0] = after
        trace.events.append(TraceEvent(trace.iterations, restart, rule, before, after,
                                       global_best[0], clock()))

    record("initial", current_cost, current_cost)
    for _ in range(config.max_iterations):
        if deadline is not None and time.perf_counter() > deadline:
            break
        chosen, chosen_cost, stop = None, None, False
        if config.strategy == "best":
            cands = []
            for nb in neighborhood(current, rules, domain, registry, "all"):
                cands.append((Fraction(cost(nb)), nb))
                if deadline is not None and time.perf_counter() > deadline:
                    break
            if cands:
                low = min(c for c, _ in cands)
                if low < current_cost:
                    ties = [p for c, p in cands if c == low]
                    chosen, chosen_cost = ties[rng.randrange(len(ties))], low
        else:
            for nb in neighborhood(current, rules, domain, registry, "first", rng):
                c = Fraction(cost(nb))
                if c < current_cost:
                    chosen, chosen_cost = nb, c
                    break
                if config.plateau_counts == "considered":
                    if budget <= 0:
                        stop = True
                        break
                    budget -= 1
                    if c == current_cost:
                        chosen, chosen_cost = nb, c
                        break
                elif c == current_cost:
                    if budget <= 0:
                        stop = True
                        break
                    budget -= 1
                    chosen, chosen_cost = nb, c
                    break
                if deadline is not None and time.perf_counter() > deadline:
                    break
        if chosen is None:
            break
        if config.check_valid and not validate(chosen):
            raise AssertionError(f"accepted an invalid plan: {validate(chosen)}")
        trace.iterations += 1
        trace.rewrites += 1
        rule = (chosen.note or {}).get("rule", "?")
        record(rule, current_cost, chosen_cost)
        current, current_cost = chosen, chosen_cost
        if current_cost < best_cost:
            best, best_cost = current, current_cost
        if stop:
            break
    return best, best_cost


def optimize(initial: InitialGenerator | PartialPlan, rules: Sequence[RewritingRule], cost: CostFunction,
             domain: DomainSpec, registry: Registry | None = None,
             config: SearchConfig | None = None) -> tuple[PartialPlan, SearchTrace]:
    """Run ``config.restarts`` independent local searches (at least one) and
    return the cheapest plan found with the merged trace."""
    config = config or SearchConfig()
    registry = registry or builtin_library()
    trace = SearchTrace()
    start = time.perf_counter()
    deadline = start + config.wall_budget if config.wall_budget else None

    def clock() -> int:
        return int((time.perf_counter() - start) * 1000)

    global_best: list = [None]
    for i in range(max(1, config.restarts)):
        rng = restart_rng(config.seed, i)
        try:
            plan = initial(rng) if callable(initial) else initial
        except Exception as exc:
            raise SearchError(str(exc), i) from exc
        trace.initial_costs.append(Fraction(cost(plan)))
        best, best_cost = _local_search(plan, rules, cost, domain, registry, config, rng, i, trace,
                                        clock, deadline, global_best)
        if trace.best_cost is None or best_cost < trace.best_cost:
            trace.best_plan, trace.best_cost, trace.winner_restart = best, best_cost, i
        if deadline is not None and time.perf_counter() > deadline:
            break
    return trace.best_plan, trace


def run_restarts(initial: InitialGenerator, rules: Sequence[RewritingRule], cost: CostFunction,
                 domain: DomainSpec, restarts: int, registry: Registry | None = None,
                 config: SearchConfig | None = None) -> tuple[PartialPlan, SearchTrace]:
    config = config or SearchConfig()
    cfg = SearchConfig(**{**config.__dict__, "restarts": restarts})
    return optimize(initial, rules, cost, domain, registry, cfg)
