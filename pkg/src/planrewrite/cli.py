"""Command-line front end.

Exit codes: 0 success, 1 parse or input error, 2 no initial plan,
3 search ended without a valid plan, 4 plan failed validation.
"""

from __future__ import annotations

import os
import random
import sys
from pathlib import Path

import click

from . import bench
from .costs import SCHEDULE_LENGTH, STEP_COUNT
from .model import DomainError, DomainSpec, GroundingError, ProblemSpec, parse_domain, parse_problem, print_problem
from .packs import PACK_NAMES, DomainPack, PackError, load_pack
from .plan import PlanError, dump_plan, load_plan, validate
from .rewrite import rewrite_plan
from .rules import RuleError, builtin_library, parse_rules
from .search import SearchConfig, SearchError, optimize
from .sexpr import SExprSyntaxError, read
from .to2po import InvalidSequence, to2po, to2po_all

PARSE_ERRORS = (SExprSyntaxError, DomainError, GroundingError, RuleError, PlanError, PackError, ValueError)

EXIT_PARSE, EXIT_NO_PLAN, EXIT_BUDGET, EXIT_INVALID = 1, 2, 3, 4


def fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _search_options(f):
    opts = [
        click.option("--seed", type=int, default=None, help="Master seed (else $PBR_SEED, else 0)."),
        click.option("--strategy", type=click.Choice(["first", "best"]), default=None),
        click.option("--plateau", type=int, default=None, help="Plateau budget (default 100)."),
        click.option("--restarts", type=int, default=None, help="Independent restarts (default 1)."),
        click.option("--max-iter", type=int, default=None, help="Iterations per restart (default 10000)."),
        click.option("--time-limit", type=float, default=None, help="Wall-clock budget in seconds."),
        click.option("--trace", type=click.Path(dir_okay=False), default=None, help="Write the search trace CSV."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


SEARCH_KEYS = ("seed", "strategy", "plateau", "restarts", "max_iter", "time_limit", "trace")


def _settings(ctx: click.Context, local: dict) -> dict:
    """Subcommand flags override the group's."""
    merged = dict(ctx.obj or {})
    merged.update({k: v for k, v in local.items() if v is not None})
    if merged.get("seed") is None:
        env = os.environ.get("PBR_SEED")
        try:
            merged["seed"] = int(env) if env else 0
        except ValueError:
            fail(EXIT_PARSE, f"PBR_SEED must be an integer, got {env!r}")
    return merged


def _config(s: dict) -> SearchConfig:
    return SearchConfig(strategy=s.get("strategy") or "first",
                        plateau_budget=s.get("plateau") if s.get("plateau") is not None else 100,
                        restarts=s.get("restarts") or 1,
                        max_iterations=s.get("max_iter") if s.get("max_iter") is not None else 10_000,
                        wall_budget=s.get("time_limit"), seed=s["seed"])


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        fail(EXIT_PARSE, str(exc))


class Setup:
    """Problem, domain, rules and cost resolved from files and an optional pack."""

    def __init__(self, problem_path: str, domain_path: str | None, pack_name: str | None,
                 rules_path: str | None = None, cost: str | None = None):
        try:
            self.problem: ProblemSpec = parse_problem(_read(problem_path))
            name = pack_name or (self.problem.domain if self.problem.domain in PACK_NAMES else None)
            self.pack: DomainPack | None = load_pack(name) if name else None
            if domain_path:
                self.domain: DomainSpec = parse_domain(_read(domain_path))
                if self.pack is not None:
                    self.domain = self.domain.bind(self.pack.domain_for(self.problem).evaluators)
            elif self.pack is not None:
                self.domain = self.pack.domain_for(self.problem)
            else:
                fail(EXIT_PARSE, "give --domain or --pack (or a problem whose :domain names a pack)")
            self.registry = self.pack.registry_for(self.problem) if self.pack else builtin_library()
            if rules_path:
                self.rules = tuple(parse_rules(_read(rules_path), self.registry))
            else:
                self.rules = self.pack.rules if self.pack else ()
            self.cost = self._cost(cost)
        except PARSE_ERRORS as exc:
            fail(EXIT_PARSE, str(exc))

    def _cost(self, name: str | None):
        if name == "step-count":
            return STEP_COUNT
        if name == "schedule-length":
            return SCHEDULE_LENGTH
        if name in (None, "pack") and self.pack is not None:
            return self.pack.cost_for(self.problem)
        if name is None:
            return STEP_COUNT
        fail(EXIT_PARSE, f"unknown cost {name}")

    def sequence(self, path: str):
        form = read(_read(path))
        if not isinstance(form, list) or any(not isinstance(a, list) or not a for a in form):
            raise PlanError("a sequence file holds one list of ground actions, e.g. ((unstack c a) ...)")
        return [self.domain.ground(a[0], list(a[1:])) for a in form]

    def load(self, path: str):
        try:
            return load_plan(_read(path), self.domain, self.problem.init, self.problem.goal)
        except PARSE_ERRORS as exc:
            fail(EXIT_PARSE, str(exc))


def _problem_options(f):
    f = click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Rule file (default: the pack's rules).")(f)
    f = click.option("--pack", "pack_name", type=click.Choice(PACK_NAMES), default=None)(f)
    f = click.option("--domain", "domain_path", type=click.Path(exists=True, dir_okay=False), default=None)(f)
    return f


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
@_search_options
@click.pass_context
def main(ctx: click.Context, **opts) -> None:
    """Plan optimization by local search over rewriting rules."""
    ctx.obj = {k: v for k, v in opts.items() if v is not None}


@main.command("plan")
@click.argument("problem_path", metavar="PROBLEM", type=click.Path(exists=True, dir_okay=False))
@_problem_options
@click.option("--initial", "initial_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Start from this action sequence instead of the pack's generator.")
@click.option("--cost", type=click.Choice(["pack", "step-count", "schedule-length"]), default=None)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None, help="Plan file (default stdout).")
@_search_options
@click.pass_context
def plan_cmd(ctx, problem_path, domain_path, pack_name, rules_path, initial_path, cost, out, **opts):
    """Build an initial plan and optimize it."""
    s = _settings(ctx, opts)
    setup = Setup(problem_path, domain_path, pack_name, rules_path, cost)
    problem = setup.problem
    if initial_path:
        try:
            seq = setup.sequence(initial_path)
            fixed = to2po(problem.init, problem.goal, seq)
        except InvalidSequence as exc:
            fail(EXIT_NO_PLAN, f"initial sequence: {exc}")
        except PARSE_ERRORS as exc:
            fail(EXIT_PARSE, str(exc))
        initial = fixed
    elif setup.pack is not None:
        def initial(rng: random.Random):
            return setup.pack.initial_plan(problem, rng)
    else:
        fail(EXIT_NO_PLAN, "no initial plan: give --initial or a pack with a generator")
    try:
        best, trace = optimize(initial, setup.rules, setup.cost, setup.domain, setup.registry, _config(s))
    except SearchError as exc:
        fail(EXIT_NO_PLAN, f"no initial plan: {exc.__cause__ or exc}")
    if s.get("trace"):
        Path(s["trace"]).write_text(trace.to_csv())
    if best is None or not validate(best):
        fail(EXIT_BUDGET, "search ended without a valid plan")
    _emit(dump_plan(best), out)
    first = trace.initial_costs[trace.winner_restart]
    click.echo(f"cost {bench.number(first)} -> {bench.number(trace.best_cost)} "
               f"({trace.rewrites} rewrites, {len(best)} steps)", err=True)


@main.command("validate")
@click.argument("plan_path", metavar="PLAN", type=click.Path(exists=True, dir_okay=False))
@click.option("--problem", "problem_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_problem_options
def validate_cmd(plan_path, problem_path, domain_path, pack_name, rules_path):
    """Check a plan file; exit 0 iff the plan is valid."""
    setup = Setup(problem_path, domain_path, pack_name, rules_path)
    report = validate(setup.load(plan_path))
    click.echo(str(report))
    sys.exit(0 if report.valid else EXIT_INVALID)


@main.command("rewrite")
@click.argument("plan_path", metavar="PLAN", type=click.Path(exists=True, dir_okay=False))
@click.option("--problem", "problem_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_problem_options
@click.option("--rule", "rule_name", required=True, help="Name of the rule to apply.")
@click.option("--all-embeddings/--first-embedding", default=True,
              help="Keep every completion per match, or only the first.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
def rewrite_cmd(plan_path, problem_path, domain_path, pack_name, rules_path, rule_name, all_embeddings, out):
    """Apply one rule everywhere it matches and write every resulting plan."""
    setup = Setup(problem_path, domain_path, pack_name, rules_path)
    rules = {r.name: r for r in setup.rules}
    if rule_name not in rules:
        fail(EXIT_PARSE, f"unknown rule {rule_name}; have {', '.join(sorted(rules)) or 'none'}")
    plan = setup.load(plan_path)
    results = rewrite_plan(plan, rules[rule_name], setup.domain, setup.registry, all_embeddings)
    chunks = [f"; result {i} of {len(results)}\n" + dump_plan(p) for i, p in enumerate(results, 1)]
    _emit("\n".join(chunks), out)
    click.echo(f"{len(results)} plan(s)", err=True)


@main.command("to2po")
@click.argument("sequence_path", metavar="SEQUENCE", type=click.Path(exists=True, dir_okay=False))
@click.option("--problem", "problem_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_problem_options
@click.option("--mode", type=click.Choice(["latest", "all"]), default="latest",
              help="Latest producer only, or every causal structure.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
def to2po_cmd(sequence_path, problem_path, domain_path, pack_name, rules_path, mode, out):
    """Convert a totally ordered action sequence into a partial-order plan."""
    setup = Setup(problem_path, domain_path, pack_name, rules_path)
    p = setup.problem
    try:
        seq = setup.sequence(sequence_path)
        plans = [to2po(p.init, p.goal, seq)] if mode == "latest" else list(to2po_all(p.init, p.goal, seq))
    except (InvalidSequence, *PARSE_ERRORS) as exc:
        fail(EXIT_PARSE, str(exc))
    if mode == "latest":
        _emit(dump_plan(plans[0]), out)
    else:
        _emit("\n".join(f"; structure {i} of {len(plans)}\n" + dump_plan(q) for i, q in enumerate(plans, 1)), out)


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}")


def _params(items: tuple[str, ...]) -> dict[str, int]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = int(value)
        except ValueError:
            raise click.BadParameter(f"{key}: expected an integer, got {value!r}")
    return out


@main.command("bench")
@click.option("--pack", "pack_name", required=True, type=click.Choice(PACK_NAMES))
@click.option("--sizes", default=None, help="Comma-separated values of the pack's size parameter.")
@click.option("--seeds", type=int, default=1, help="Instances per size.")
@click.option("--strategies", default=None, help="Comma-separated strategies to sweep.")
@click.option("--plateaus", default=None, help="Comma-separated plateau budgets to sweep.")
@click.option("--restart-counts", default=None, help="Comma-separated restart counts to sweep.")
@click.option("--param", "params", multiple=True, help="Other generator parameter, KEY=VALUE.")
@click.option("--jobs", type=int, default=1, help="Worker processes.")
@click.option("--timing/--no-timing", default=False, help="Add elapsed_ms columns (not reproducible).")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None, help="CSV file (default stdout).")
@click.option("--series", type=click.Path(dir_okay=False), default=None, help="Aggregated series file.")
@_search_options
@click.pass_context
def bench_cmd(ctx, pack_name, sizes, seeds, strategies, plateaus, restart_counts, params, jobs, timing,
              out, series, **opts):
    """Sweep generated instances over search configurations."""
    s = _settings(ctx, opts)
    base = _config(s)
    try:
        pack = load_pack(pack_name)
        size_list = _ints(sizes) if sizes else [pack.params[pack.size_param].default]
        extra = _params(params)
        pack.check_params({**extra, pack.size_param: size_list[0]})
        for n in size_list:
            pack.check_params({**extra, pack.size_param: n})
        configs = []
        for strat in (strategies.split(",") if strategies else [base.strategy]):
            for pl in (_ints(plateaus) if plateaus else [base.plateau_budget]):
                for rs in (_ints(restart_counts) if restart_counts else [base.restarts]):
                    configs.append(SearchConfig(strategy=strat.strip(), plateau_budget=pl, restarts=rs,
                                                max_iterations=base.max_iterations,
                                                wall_budget=base.wall_budget, seed=base.seed))
    except (click.BadParameter, PackError, ValueError) as exc:
        fail(EXIT_PARSE, str(exc))
    sweep = bench.Sweep(pack_name, size_list, seeds, s["seed"], configs, extra)
    records = bench.run_sweep(sweep, jobs)
    _emit(bench.to_csv(records, timing), out)
    points = bench.aggregate(records)
    if series:
        Path(series).write_text(bench.series_text(points, timing))
    click.echo(bench.summary_table(points), err=True, nl=False)


@main.command("gen")
@click.option("--pack", "pack_name", required=True, type=click.Choice(PACK_NAMES))
@click.option("--param", "params", multiple=True, help="Generator parameter, KEY=VALUE.")
@click.option("--seed", type=int, default=None, help="Seed (else $PBR_SEED, else the group's, else 0).")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def gen_cmd(ctx, pack_name, params, seed, out):
    """Write a seeded random problem for a pack."""
    s = _settings(ctx, {"seed": seed})
    try:
        pack = load_pack(pack_name)
        problem = pack.generate(random.Random(s["seed"]), **_params(params))
    except (click.BadParameter, PackError) as exc:
        fail(EXIT_PARSE, str(exc))
    _emit(print_problem(problem), out)


if __name__ == "__main__":
    main()
