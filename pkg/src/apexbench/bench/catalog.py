"""The registry of the eighteen applications, in report order."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from ..timebase import MeasurementSeries
from . import apexcalls, complete, greybox
from .datasets import WorkloadData


class Group(str, Enum):
    GREYBOX = "grey"
    APEX = "apex"
    COMPLETE = "complete"


DEFAULT_ITERATIONS = {Group.GREYBOX: 1000, Group.APEX: 1000, Group.COMPLETE: 100}


@dataclass(frozen=True)
class BenchDescriptor:
    name: str
    group: Group
    rows: tuple[str, ...]
    runner: Callable[..., dict] = field(repr=False, compare=False)
    # maps the run's dataset to runner keyword arguments
    from_data: Optional[Callable[[WorkloadData], dict]] = field(default=None, compare=False)
    needs_seed: bool = False
    params: dict = field(default_factory=dict, compare=False)

    @property
    def iterations(self) -> int:
        return DEFAULT_ITERATIONS[self.group]

    def run(self, perf, iterations: Optional[int] = None, data: Optional[WorkloadData] = None,
            seed: Optional[int] = None) -> dict[str, MeasurementSeries]:
        n = self.iterations if iterations is None else iterations
        if n < 1:
            raise ValueError(f"{self.name}: iterations must be >= 1")
        kwargs: dict[str, Any] = dict(self.params)
        if self.from_data is not None and data is not None:
            kwargs.update(self.from_data(data))
        if self.needs_seed and seed is not None:
            kwargs["seed"] = seed
        out = self.runner(perf, n, **kwargs)
        return {row: out[row] for row in self.rows}


def _grey(name: str, runner, rows=None, from_data=None) -> BenchDescriptor:
    return BenchDescriptor(name, Group.GREYBOX, tuple(rows or (name,)), runner, from_data=from_data)


def _whole(data: WorkloadData) -> dict:
    return {"data": data}


def _block(data: WorkloadData) -> dict:
    return {"block": data.block}


CATALOG: tuple[BenchDescriptor, ...] = (
    _grey("Process Switch", greybox.run_process_switch),
    _grey("Mutex Acquire/Release", greybox.run_mutex_acquire_release, ("Mutex Acquire", "Mutex Release")),
    _grey("Mutex Acquire 2", greybox.run_mutex_acquire_2),
    _grey("Mutex Release 2", greybox.run_mutex_release_2),
    _grey("Mutex Workload", greybox.run_mutex_workload, from_data=_block),
    _grey("Sem Wait/Signal", greybox.run_sem_wait_signal, ("Sem Wait", "Sem Signal")),
    _grey("Priority Sem", greybox.run_priority_sem),
    _grey("Sem Signal 2", greybox.run_sem_signal_2),
    _grey("Sem Wait 2", greybox.run_sem_wait_2),
    _grey("Sem Workload", greybox.run_sem_workload, from_data=_block),
    _grey("Partition Switch", greybox.run_partition_switch),
    BenchDescriptor(apexcalls.APP_NAME, Group.APEX, tuple(apexcalls.all_rows()), apexcalls.run_apex_latency),
    BenchDescriptor("SOBEL", Group.COMPLETE, ("SOBEL",), complete.run_sobel, from_data=_whole),
    BenchDescriptor("ADPCM", Group.COMPLETE, ("ADPCM",), complete.run_adpcm, from_data=_whole),
    BenchDescriptor("DIJKSTRA", Group.COMPLETE, ("DIJKSTRA",), complete.run_dijkstra, from_data=_whole),
    BenchDescriptor("APEX APP 1", Group.COMPLETE, ("APEX APP 1",), complete.run_apex_app_1, needs_seed=True),
    BenchDescriptor("APEX APP 2", Group.COMPLETE, ("APEX APP 2",), complete.run_apex_app_2, needs_seed=True),
    BenchDescriptor("APEX APP 3", Group.COMPLETE, ("APEX APP 3 A", "APEX APP 3 B", "APEX APP 3 TOTAL"),
                    complete.run_apex_app_3, needs_seed=True),
)

BY_NAME = {b.name: b for b in CATALOG}


def names() -> list[str]:
    return [b.name for b in CATALOG]


def in_group(group: Group | str) -> list[BenchDescriptor]:
    group = Group(group)
    return [b for b in CATALOG if b.group is group]


def resolve(name: str) -> BenchDescriptor:
    """Look a benchmark up by name, ignoring case; also accepts any of its row names."""
    key = name.casefold()
    for b in CATALOG:
        if b.name.casefold() == key or any(r.casefold() == key for r in b.rows):
            return b
    raise KeyError(name)
