"""Experiment sweeps over generated problems: one RunRecord per (instance,
configuration) cell, a byte-stable CSV, and aggregated series for plotting."""

from __future__ import annotations

import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .packs import load_pack
from .search import SearchConfig, optimize

CSV_COLUMNS = ("pack", "instance", "seed", "strategy", "plateau", "restarts",
               "initial", "final", "iterations", "rewrites", "status")


def number(x) -> str:
    """Exact text for a cost: an integer, a terminating decimal, or n/d."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = 0
    while (x * 10 ** digits).denominator != 1:
        digits += 1
    scaled = abs(x.numerator * 10 ** digits // x.denominator)
    text = str(scaled).rjust(digits + 1, "0")
    sign = "-" if x < 0 else ""
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


@dataclass(frozen=True)
class RunRecord:
    pack: str
    instance: str
    seed: int
    strategy: str
    plateau: int
    restarts: int
    initial: Fraction | None
    final: Fraction | None
    iterations: int
    rewrites: int
    elapsed_ms: int
    size: int = 0
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def row(self, timing: bool = False) -> list[str]:
        cols = [self.pack, self.instance, str(self.seed), self.strategy, str(self.plateau),
                str(self.restarts), "" if self.initial is None else number(self.initial),
                "" if self.final is None else number(self.final), str(self.iterations),
                str(self.rewrites), self.status]
        if timing:
            cols.append(str(self.elapsed_ms))
        return cols


@dataclass(frozen=True)
class Cell:
    """One benchmark run: a generated instance under one search configuration."""

    pack: str
    size: int
    index: int
    seed: int
    config: SearchConfig
    params: tuple = ()  # extra generator parameters as (key, value) pairs

    @property
    def instance(self) -> str:
        return f"{self.pack}-{self.size}-{self.index}"


def problem_rng(pack: str, size: int, seed: int) -> random.Random:
    """Generator stream for an instance; independent of the search config so
    every configuration sees the same problem."""
    return random.Random(f"{pack}/{size}/{seed}")


def run_cell(cell: Cell) -> RunRecord:
    cfg = cell.config
    base = dict(pack=cell.pack, instance=cell.instance, seed=cell.seed, strategy=cfg.strategy,
                plateau=cfg.plateau_budget, restarts=cfg.restarts, size=cell.size)
    start = time.perf_counter()
    try:
        pack = load_pack(cell.pack)
        params = dict(cell.params)
        params[pack.size_param] = cell.size
        problem = pack.generate(problem_rng(cell.pack, cell.size, cell.seed), **params)
        best, trace = optimize(lambda rng: pack.initial_plan(problem, rng), pack.rules,
                               pack.cost_for(problem), pack.domain_for(problem),
                               pack.registry_for(problem), cfg)
    except Exception as exc:  # recorded per row; the sweep goes on
        msg = " ".join(f"{type(exc).__name__}: {exc}".split()).replace(",", ";")
        return RunRecord(**base, initial=None, final=None, iterations=0, rewrites=0,
                         elapsed_ms=int((time.perf_counter() - start) * 1000), status=f"error {msg}")
    return RunRecord(**base, initial=trace.initial_costs[trace.winner_restart], final=trace.best_cost,
                     iterations=trace.iterations, rewrites=trace.rewrites,
                     elapsed_ms=int((time.perf_counter() - start) * 1000))


@dataclass
class Sweep:
    pack: str
    sizes: Sequence[int]
    seeds: int = 1
    master_seed: int = 0
    configs: Sequence[SearchConfig] = field(default_factory=lambda: [SearchConfig()])
    params: dict = field(default_factory=dict)

    def cells(self) -> list[Cell]:
        out = []
        extra = tuple(sorted(self.params.items()))
        for size in self.sizes:
            for i in range(self.seeds):
                seed = self.master_seed + i
                for cfg in self.configs:
                    out.append(Cell(self.pack, size, i, seed, replace(cfg, seed=seed), extra))
        return out


def run_sweep(sweep: Sweep, jobs: int = 1) -> list[RunRecord]:
    """Records in deterministic cell order, whatever the worker count."""
    cells = sweep.cells()
    if jobs <= 1:
        return [run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_cell, cells))


def to_csv(records: Iterable[RunRecord], timing: bool = False) -> str:
    head = list(CSV_COLUMNS) + (["elapsed_ms"] if timing else [])
    lines = [",".join(head)] + [",".join(r.row(timing)) for r in records]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SeriesPoint:
    pack: str
    strategy: str
    plateau: int
    restarts: int
    size: int
    runs: int
    failures: int
    mean_initial: Fraction | None
    mean_final: Fraction | None
    mean_ms: Fraction | None

    @property
    def label(self) -> str:
        return f"{self.strategy}-p{self.plateau}-r{self.restarts}"


def _mean(xs: list) -> Fraction | None:
    return Fraction(sum(xs, Fraction(0)), len(xs)) if xs else None


def aggregate(records: Iterable[RunRecord]) -> list[SeriesPoint]:
    """Per configuration and size: mean initial cost, final cost and time over
    the successful runs."""
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.pack, r.strategy, r.plateau, r.restarts, r.size), []).append(r)
    out = []
    for key in sorted(groups):
        rs = groups[key]
        good = [r for r in rs if r.ok]
        out.append(SeriesPoint(*key, runs=len(rs), failures=len(rs) - len(good),
                               mean_initial=_mean([r.initial for r in good]),
                               mean_final=_mean([r.final for r in good]),
                               mean_ms=_mean([Fraction(r.elapsed_ms) for r in good])))
    return out


def _fixed(x: Fraction | None, places: int = 3) -> str:
    return "" if x is None else f"{float(x):.{places}f}"


def series_text(points: Iterable[SeriesPoint], timing: bool = False) -> str:
    """Whitespace-separated columns, one block per configuration, ready for a
    plotting tool. Means are rounded to three places."""
    head = "# series size runs failures mean_initial mean_final" + (" mean_ms" if timing else "")
    lines = [head]
    for p in points:
        cols = [p.label, str(p.size), str(p.runs), str(p.failures), _fixed(p.mean_initial),
                _fixed(p.mean_final)] + ([_fixed(p.mean_ms, 1)] if timing else [])
        lines.append(" ".join(c or "-" for c in cols))
    return "\n".join(lines) + "\n"


def summary_table(points: Iterable[SeriesPoint]) -> str:
    rows = [("config", "size", "runs", "fail", "initial", "final", "ms")]
    for p in points:
        rows.append((p.label, str(p.size), str(p.runs), str(p.failures), _fixed(p.mean_initial),
                     _fixed(p.mean_final), _fixed(p.mean_ms, 1)))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows) + "\n"
