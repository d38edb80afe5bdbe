"""Small builders shared by the executive-level tests."""

from __future__ import annotations

import ast
from pathlib import Path

import apexbench.bench as bench_pkg

from apexbench.kernel import calls
from apexbench.kernel.calls import ProcessAttributes
from apexbench.kernel.config import (
    PartitionDescriptor,
    PartitionSchedule,
    ScheduleWindow,
    SystemConfig,
    single_partition_config,
)
from apexbench.kernel.core import boot_system
from apexbench.timebase import CostTable


def spawn(name, body, priority=10, period=None, start=True):
    """Init-entry fragment: create (and start) a process, return its id."""
    pid = yield calls.create_process(ProcessAttributes(name, body, priority, period))
    if start:
        yield calls.start(pid)
    return pid


def single(entry, costs=None, **kwargs):
    config = single_partition_config(entry, **kwargs)
    if costs is not None:
        config.cost_table = costs
    return boot_system(config)


def two_partitions(entry1, entry2, w1=5000, w2=5000, costs=None, channels=()):
    config = SystemConfig(
        partitions=[PartitionDescriptor(1, "P1", entry=entry1), PartitionDescriptor(2, "P2", entry=entry2)],
        schedule=PartitionSchedule(w1 + w2, [ScheduleWindow(1, 0, w1), ScheduleWindow(2, w1, w2)]),
        cost_table=costs or CostTable(),
        channels=list(channels),
    )
    return boot_system(config)


def flat_costs(**kwargs) -> CostTable:
    """Every call costs ``base`` ticks and switches are free unless overridden."""
    params = dict(calls={}, base_cost=1, process_switch_cost=0, partition_switch_cost=0)
    params.update(kwargs)
    return CostTable(**params)


def events(kernel, kind):
    return [ev for ev in kernel.trace if ev.kind == kind]


# -- porting audit -------------------------------------------------------------------

BENCH_ALLOWED_IMPORTS = {"..porting", "..errors", "..timebase", ".datasets", ".workloads",
                         ".", ".apexcalls", ".complete", ".greybox", ".catalog"}
KERNEL_ATTRIBUTES = {"kernel", "trace", "processes", "partitions", "clock", "schedule_step"}


def bench_sources() -> list[Path]:
    return sorted(Path(bench_pkg.__file__).parent.glob("*.py"))


def kernel_references(path: Path) -> list[str]:
    """Imports or ``perf.<attr>`` reads in a bench module that bypass the porting layer."""
    found = []
    for node in ast.walk(ast.parse(path.read_text())):
        if isinstance(node, ast.ImportFrom):
            module = "." * node.level + (node.module or "")
            if node.level and module not in BENCH_ALLOWED_IMPORTS:
                found.append(f"{path.name} imports {module}")
            elif not node.level and module.startswith("apexbench"):
                found.append(f"{path.name} imports {module}")
        elif isinstance(node, ast.Import):
            found += [f"{path.name} imports {a.name}" for a in node.names if a.name.startswith("apexbench")]
        elif isinstance(node, ast.Attribute) and isinstance(node.value, ast.Name) and node.value.id == "perf":
            if node.attr in KERNEL_ATTRIBUTES:
                found.append(f"{path.name} reaches perf.{node.attr}")
    return found


def call_shape(log):
    """Drop values a backend hands back (ids, frame lengths) and keep the rest."""
    def arg(a):
        if isinstance(a, tuple) and a and a[0] == "task":
            return a[:3]
        return None if isinstance(a, int) else a
    return [(op, tuple(arg(a) for a in args)) for op, args in log]


def is_subsequence(short, long) -> bool:
    it = iter(long)
    return all(any(item == other for other in it) for item in short)
