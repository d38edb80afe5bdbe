"""Command-line runner: pick benchmarks, run them, print a results table.

Exit codes: 0 success, 2 usage error, 3 invalid config file,
4 a benchmark failed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bench import CATALOG, BenchDescriptor, Group, WorkloadData, in_group, names, resolve
from .bench.datasets import DEFAULT_SEED, load_edge_list, load_pgm, load_signal
from .errors import ApexBenchError, ConfigInvalid
from .kernel.config import HealthMonitorTable, SystemConfig, load_config
from .porting import ApexBackend
from .report import OutputFormat, ReportRow, emit
from .timebase import DEFAULT_TICKS_PER_US, ClockKind, CostTable, as_fraction

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_BENCH = 4


class BenchmarkFailed(ApexBenchError):
    code = "BENCHMARK_FAILED"


@dataclass
class RunPlan:
    benches: list[BenchDescriptor] = field(default_factory=lambda: list(CATALOG))
    clock: ClockKind = ClockKind.VIRTUAL
    ticks_per_us: object = DEFAULT_TICKS_PER_US
    iterations: Optional[int] = None
    output: OutputFormat = OutputFormat.TABLE
    config_path: Optional[Path] = None
    config: Optional[SystemConfig] = None
    trace: Optional[Path] = None
    seed: int = DEFAULT_SEED
    image: Optional[Path] = None
    graph: Optional[Path] = None
    signal: Optional[Path] = None

    def cost_table(self) -> CostTable:
        return self.config.cost_table if self.config else CostTable()

    def hm_table(self) -> HealthMonitorTable:
        return self.config.hm_table if self.config else HealthMonitorTable()

    def dataset(self) -> WorkloadData:
        return WorkloadData.generate(
            self.seed,
            image=load_pgm(self.image) if self.image else None,
            graph=load_edge_list(self.graph) if self.graph else None,
            signal=load_signal(self.signal) if self.signal else None,
        )


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _rate(text: str):
    try:
        value = as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="apexbench",
        description="Run the partitioned-executive benchmark suite and report BCET/WCET/average times.",
    )
    p.add_argument("--group", action="append", choices=[g.value for g in Group],
                   help="run every benchmark of a group (repeatable)")
    p.add_argument("--bench", action="append", metavar="NAME",
                   help="run one benchmark by name or row name (repeatable)")
    p.add_argument("--clock", choices=[c.value for c in ClockKind],
                   help="virtual (deterministic cost table, default) or host (wall clock)")
    p.add_argument("--ticks-per-us", type=_rate, metavar="R",
                   help=f"tick rate used for microsecond columns (default {DEFAULT_TICKS_PER_US})")
    p.add_argument("--iters", type=_positive_int, metavar="N",
                   help="iterations for every selected benchmark (default 1000, complete apps 100)")
    p.add_argument("--format", choices=[f.value for f in OutputFormat], default="table")
    p.add_argument("--config", type=Path, metavar="PATH", help="system/cost configuration file")
    p.add_argument("--trace", type=Path, metavar="PATH", help="write the executive event trace here")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for synthetic datasets")
    p.add_argument("--image", type=Path, metavar="PGM", help="SOBEL input image instead of the synthetic one")
    p.add_argument("--graph", type=Path, metavar="EDGES", help="DIJKSTRA edge list instead of the synthetic graph")
    p.add_argument("--signal", type=Path, metavar="RAW", help="ADPCM 16-bit LE samples instead of the synthetic signal")
    p.add_argument("--list", action="store_true", help="list benchmark names and exit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def parse_cli(argv: Optional[Sequence[str]] = None) -> RunPlan:
    """Turn arguments into a plan. Usage errors exit with status 2;
    an unreadable or invalid config file raises :class:`ConfigInvalid`."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        print("\n".join(names()))
        raise SystemExit(EXIT_OK)

    selected: list[BenchDescriptor] = []
    for group in args.group or ():
        selected.extend(in_group(group))
    for name in args.bench or ():
        try:
            selected.append(resolve(name))
        except KeyError:
            parser.error(f"unknown benchmark {name!r}; valid names: {', '.join(names())}")
    if not selected:
        selected = list(CATALOG)
    # keep catalog order, drop repeats
    chosen = {b.name for b in selected}
    plan = RunPlan(benches=[b for b in CATALOG if b.name in chosen])

    if args.config is not None:
        plan.config_path = args.config
        plan.config = load_config(args.config)
        plan.clock = ClockKind(plan.config.clock)
        plan.ticks_per_us = plan.config.ticks_per_us
    if args.clock is not None:
        plan.clock = ClockKind(args.clock)
    if args.ticks_per_us is not None:
        plan.ticks_per_us = args.ticks_per_us
    plan.iterations = args.iters
    plan.output = OutputFormat(args.format)
    plan.trace = args.trace
    plan.seed = args.seed
    plan.image, plan.graph, plan.signal = args.image, args.graph, args.signal
    for path in (plan.image, plan.graph, plan.signal):
        if path is not None and not path.is_file():
            parser.error(f"no such file: {path}")
    return plan


def execute_plan(plan: RunPlan) -> list[ReportRow]:
    """Run the selected benchmarks one after another, in catalog order."""
    try:
        data = plan.dataset()
    except (OSError, ValueError) as exc:
        raise BenchmarkFailed(f"cannot load dataset: {exc}") from exc
    rows: list[ReportRow] = []
    traces: list[tuple[str, list]] = []
    for bench in plan.benches:
        perf = ApexBackend(plan.clock, plan.ticks_per_us, plan.cost_table(), plan.hm_table(),
                           trace=plan.trace is not None)
        try:
            series = bench.run(perf, plan.iterations, data=data, seed=plan.seed)
        except Exception as exc:
            raise BenchmarkFailed(f"{bench.name}: {type(exc).__name__}: {exc}") from exc
        rows.extend(ReportRow.from_series(name, s, plan.ticks_per_us) for name, s in series.items())
        traces.extend(perf.traces)
    if plan.trace is not None:
        with open(plan.trace, "w") as fh:
            for label, events in traces:
                fh.write(f"# {label}\n")
                fh.writelines(ev.line() + "\n" for ev in events)
    return rows


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        plan = parse_cli(argv)
    except ConfigInvalid as exc:
        print(f"apexbench: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        rows = execute_plan(plan)
    except BenchmarkFailed as exc:
        print(f"apexbench: benchmark failed: {exc}", file=sys.stderr)
        return EXIT_BENCH
    sys.stdout.write(emit(rows, plan.output))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
