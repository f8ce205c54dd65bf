"""Plan optimization by rewriting: partial-order causal-link plans improved
by local search over declarative rewriting rules."""

from __future__ import annotations

from .costs import SCHEDULE_LENGTH, STEP_COUNT, CostFunction
from .model import DomainSpec, GroundAction, ProblemSpec, parse_domain, parse_problem
from .plan import PartialPlan, dump_plan, load_plan, validate
from .rewrite import neighborhood, rewrite_plan
from .rules import RewritingRule, parse_rules
from .search import SearchConfig, optimize
from .to2po import to2po, to2po_all

__version__ = "0.1.0"

__all__ = [
    "CostFunction", "DomainSpec", "GroundAction", "PartialPlan", "ProblemSpec", "RewritingRule",
    "SCHEDULE_LENGTH", "STEP_COUNT", "SearchConfig", "dump_plan", "load_plan", "neighborhood",
    "optimize", "parse_domain", "parse_problem", "parse_rules", "rewrite_plan", "to2po",
    "to2po_all", "validate",
]
