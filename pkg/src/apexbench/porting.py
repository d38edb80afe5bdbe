"""The porting layer: the only API benchmark applications may use.

Benchmarks are written against :class:`PerfBackend`. Operations that may
block or consume executive time are generators and are called with
``yield from``; measurement operations are plain calls that take no
virtual time::

    def body():
        perf.start(ctx)
        yield from perf.work("checksum", 1024)
        perf.end(ctx)

:class:`ApexBackend` binds the surface to the emulated executive. To port
the suite elsewhere, implement the same surface (see ``docs/PORTING.md``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Optional, Sequence, Union

from .errors import ApexBenchError, IllegalRequest, LifecycleViolation, UnmatchedEnd
from .kernel import calls
from .kernel.calls import INFINITE, Call, ProcessAttributes
from .kernel.config import (
    DEFAULT_MEMORY_QUOTA,
    ChannelSpec,
    HealthMonitorTable,
    PartitionDescriptor,
    PartitionSchedule,
    PortKind,
    ScheduleWindow,
    SystemConfig,
)
from .kernel.core import Kernel, boot_system
from .report import ReportRow
from .timebase import (
    DEFAULT_TICKS_PER_US,
    ClockKind,
    CostTable,
    MeasureContext,
    MeasurementSeries,
    Rational,
    SummaryStats,
    as_fraction,
    measure_begin,
    measure_end,
    summarize,
)

MIN_PRIORITY = 1
MAX_PRIORITY = 255
SINGLE_PARTITION_FRAME = 1_000_000

# Every operation a backend must provide.
SURFACE = frozenset({
    # system and tasks
    "run", "major_frame", "create_task", "start_task", "get_my_id", "lock_preemption", "unlock_preemption",
    # synchronization
    "create_semaphore", "signal_semaphore", "create_mutex", "acquire_mutex", "release_mutex",
    "create_event", "set_event", "reset_event", "yield_and_wait",
    # inter-partition data
    "create_sampling_port", "write_sampling_message", "read_sampling_message",
    # raw executive services and simulated work
    "apex", "work",
    # measurement
    "declare", "initialize", "start", "end", "restart", "is_open", "validate", "now",
})

WAIT_KINDS = ("semaphore", "event", "period", "delay")

Body = Callable[[], Generator[Any, Any, Any]]


@dataclass(frozen=True)
class TaskSpec:
    name: str
    entry: Body
    priority: int = MIN_PRIORITY
    period: Optional[int] = None
    stack_budget: int = 4096

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("task name must not be empty")


@dataclass
class PartitionLayout:
    name: str
    init: Body
    memory: int = DEFAULT_MEMORY_QUOTA
    runtime_create: bool = False


@dataclass
class SystemLayout:
    """What a benchmark needs from the system, independent of the backend.

    ``windows`` lists ``(partition name, offset, duration)`` in ticks. When
    empty, each partition gets one contiguous window of
    ``switch cost + window_slack`` ticks in declaration order; a lone
    partition owns the whole frame.
    """

    partitions: list[PartitionLayout]
    windows: list[tuple[str, int, int]] = field(default_factory=list)
    frame: Optional[int] = None
    window_slack: int = 100
    channels: list[tuple[str, str, str]] = field(default_factory=list)
    until: Optional[Callable[[], bool]] = None
    max_ticks: Optional[int] = None
    label: str = ""


class PerfBackend:
    """Backend-independent half of the surface: the measurement lifecycle."""

    def __init__(self, ticks_per_us: Rational = DEFAULT_TICKS_PER_US) -> None:
        self.ticks_per_us = as_fraction(ticks_per_us)
        self.rows: dict[str, ReportRow] = {}
        self.series: dict[str, MeasurementSeries] = {}

    def now(self) -> int:
        raise NotImplementedError

    def declare(self) -> MeasureContext:
        return MeasureContext(backend=self)

    def initialize(self, ctx: MeasureContext, name: str) -> None:
        if ctx.stage != "declared":
            raise LifecycleViolation(f"context {ctx.name!r} already initialized")
        if not name:
            raise LifecycleViolation("metric name must not be empty")
        ctx.name = name
        ctx.series = MeasurementSeries(name)
        ctx.stage = "ready"

    def _require_running(self, ctx: MeasureContext, op: str) -> None:
        if ctx.stage != "ready":
            raise LifecycleViolation(f"{op} on {ctx.stage} context {ctx.name!r}")

    def start(self, ctx: MeasureContext) -> None:
        self._require_running(ctx, "start")
        if ctx.is_open:
            raise LifecycleViolation(f"start while {ctx.name!r} is already open")
        measure_begin(ctx)

    def restart(self, ctx: MeasureContext) -> None:
        """Start a sample, silently discarding one that is already open."""
        self._require_running(ctx, "restart")
        measure_begin(ctx)

    def end(self, ctx: MeasureContext) -> int:
        if ctx.stage != "ready" or not ctx.is_open:
            raise UnmatchedEnd(f"end without start on {ctx.name!r}")
        return measure_end(ctx)

    def is_open(self, ctx: MeasureContext) -> bool:
        return ctx.is_open

    def validate(self, ctx: MeasureContext, std_variation_enable: bool = True) -> SummaryStats:
        if ctx.stage not in ("ready", "validated"):
            raise LifecycleViolation(f"validate on {ctx.stage} context")
        if ctx.is_open:
            raise LifecycleViolation(f"validate while {ctx.name!r} has an open sample")
        stats = summarize(ctx.series, self.ticks_per_us, std_variation_enable)
        if not stats.bcet_ticks <= stats.average_ticks <= stats.wcet_ticks:
            raise ApexBenchError(f"inconsistent statistics for {ctx.name!r}")
        ctx.stage = "validated"
        self.rows[ctx.name] = ReportRow.from_series(ctx.name, ctx.series, self.ticks_per_us,
                                                    std_variation_enable)
        self.series[ctx.name] = ctx.series
        return stats


class ApexBackend(PerfBackend):
    """Binding of the surface to the emulated partitioned executive."""

    def __init__(self, clock: Union[str, ClockKind] = ClockKind.VIRTUAL,
                 ticks_per_us: Rational = DEFAULT_TICKS_PER_US,
                 cost_table: Optional[CostTable] = None,
                 hm_table: Optional[HealthMonitorTable] = None,
                 trace: bool = False) -> None:
        super().__init__(ticks_per_us)
        self.clock_kind = ClockKind(clock)
        self.cost_table = cost_table or CostTable()
        self.hm_table = hm_table or HealthMonitorTable()
        self.tracing = trace
        self.traces: list[tuple[str, list]] = []
        self.kernel: Optional[Kernel] = None

    def now(self) -> int:
        return self.kernel.clock.now() if self.kernel is not None else 0

    # -- system ------------------------------------------------------------------

    def build_config(self, layout: SystemLayout) -> SystemConfig:
        ids = {p.name: i for i, p in enumerate(layout.partitions, start=1)}
        partitions = [PartitionDescriptor(ids[p.name], p.name, p.memory, p.init,
                                          runtime_create=p.runtime_create)
                      for p in layout.partitions]
        if layout.windows:
            windows = [ScheduleWindow(ids[name], offset, duration)
                       for name, offset, duration in layout.windows]
            frame = layout.frame or max(w.end_ticks for w in windows)
        elif len(layout.partitions) == 1:
            frame = layout.frame or SINGLE_PARTITION_FRAME
            windows = [ScheduleWindow(1, 0, frame)]
        else:
            span = self.cost_table.partition_switch_cost + layout.window_slack
            windows = [ScheduleWindow(i, (i - 1) * span, span) for i in ids.values()]
            frame = layout.frame or span * len(windows)
        channels = [ChannelSpec(PortKind(kind), src, dst) for kind, src, dst in layout.channels]
        return SystemConfig(partitions, PartitionSchedule(frame, windows), clock=self.clock_kind,
                            ticks_per_us=self.ticks_per_us, cost_table=self.cost_table,
                            hm_table=self.hm_table, channels=channels)

    def run(self, layout: SystemLayout) -> int:
        """Boot a fresh system for ``layout`` and run it to completion."""
        self.kernel = boot_system(self.build_config(layout), trace=self.tracing, strict=True)
        end = self.kernel.run(until=layout.until, max_ticks=layout.max_ticks)
        if self.tracing:
            self.traces.append((layout.label, self.kernel.trace))
        return end

    def major_frame(self):
        """Length of the running system's major time frame, in ticks."""
        return self.kernel.config.schedule.major_frame_ticks
        yield  # pragma: no cover

    # -- tasks -------------------------------------------------------------------

    def create_task(self, spec: TaskSpec):
        if not MIN_PRIORITY <= spec.priority <= MAX_PRIORITY:
            raise IllegalRequest(f"priority {spec.priority} outside {MIN_PRIORITY}..{MAX_PRIORITY}")
        attrs = ProcessAttributes(spec.name, spec.entry, spec.priority, spec.period,
                                  stack_budget=spec.stack_budget)
        handle = yield calls.create_process(attrs)
        yield calls.start(handle)
        return handle

    def start_task(self, handle: int):
        return (yield calls.start(handle))

    def get_my_id(self):
        return (yield calls.get_my_id())

    def lock_preemption(self):
        return (yield calls.lock_preemption())

    def unlock_preemption(self):
        return (yield calls.unlock_preemption())

    # -- synchronization -----------------------------------------------------------

    def create_semaphore(self, name: str, initial: int, maximum: int):
        return (yield calls.create_semaphore(name, initial, maximum))

    def signal_semaphore(self, sem: int):
        return (yield calls.signal_semaphore(sem))

    def create_mutex(self, name: str):
        return (yield calls.create_mutex(name))

    def acquire_mutex(self, mutex: int, timeout: int = INFINITE):
        return (yield calls.acquire_mutex(mutex, timeout))

    def release_mutex(self, mutex: int):
        return (yield calls.release_mutex(mutex))

    def create_event(self, name: str):
        return (yield calls.create_event(name))

    def set_event(self, event: int):
        return (yield calls.set_event(event))

    def reset_event(self, event: int):
        return (yield calls.reset_event(event))

    def yield_and_wait(self, kind: str, target: Optional[int] = None, timeout: int = INFINITE):
        """Block on a semaphore, an event, the next period, or a delay in ticks."""
        if kind == "semaphore":
            return (yield calls.wait_semaphore(target, timeout))
        if kind == "event":
            return (yield calls.wait_event(target, timeout))
        if kind == "period":
            return (yield calls.periodic_wait())
        if kind == "delay":
            return (yield calls.timed_wait(target))
        raise ValueError(f"unknown wait kind {kind!r}; expected one of {WAIT_KINDS}")

    # -- inter-partition data ------------------------------------------------------

    def create_sampling_port(self, name: str, max_size: int, direction: str, refresh: int):
        return (yield calls.create_sampling_port(name, max_size, direction, refresh))

    def write_sampling_message(self, port: int, message: bytes):
        return (yield calls.write_sampling_message(port, message))

    def read_sampling_message(self, port: int):
        return (yield calls.read_sampling_message(port))

    # -- raw services and work -------------------------------------------------------

    def apex(self, service: str, *args: Any):
        return (yield Call(service, args))

    def work(self, kernel: str, units: int = 1):
        return (yield calls.work(kernel, units))


class RecordingBackend:
    """Proxy that logs every surface operation before delegating.

    Anything outside :data:`SURFACE` raises ``AttributeError``, so a
    benchmark that reaches past the porting layer fails loudly.
    """

    def __init__(self, inner: PerfBackend) -> None:
        self._inner = inner
        self.log: list[tuple[str, tuple]] = []

    def __getattr__(self, name: str) -> Any:
        if name not in SURFACE:
            raise AttributeError(f"{name!r} is not part of the porting surface")
        target = getattr(self._inner, name)

        def recorded(*args: Any, **kwargs: Any) -> Any:
            self.log.append((name, _summarize_args(args)))
            return target(*args, **kwargs)

        return recorded

    @property
    def rows(self) -> dict[str, ReportRow]:
        return self._inner.rows

    @property
    def series(self) -> dict[str, MeasurementSeries]:
        return self._inner.series

    @property
    def ticks_per_us(self):
        return self._inner.ticks_per_us

    def operations(self) -> list[str]:
        return [name for name, _ in self.log]


def _summarize_args(args: Sequence[Any]) -> tuple:
    out = []
    for a in args:
        if isinstance(a, (int, str, float, bytes)) or a is None:
            out.append(a)
        elif isinstance(a, TaskSpec):
            out.append(("task", a.name, a.priority, a.period))
        elif isinstance(a, MeasureContext):
            out.append(("ctx", a.name))
        else:
            out.append(type(a).__name__)
    return tuple(out)


class StubBackend(PerfBackend):
    """Executive-free binding: every operation succeeds at once and is logged.

    Used to check that a benchmark's call sequence does not depend on the
    backend it is bound to. ``run`` only drives the partition entries.
    """

    def __init__(self, ticks_per_us: Rational = DEFAULT_TICKS_PER_US) -> None:
        super().__init__(ticks_per_us)
        self.log: list[tuple[str, tuple]] = []
        self._ids = iter(range(1, 1 << 30))
        self._now = 0

    def now(self) -> int:
        return self._now

    def _op(self, name: str, *args: Any, result: Any = None):
        self.log.append((name, _summarize_args(args)))
        return result
        yield  # pragma: no cover

    def run(self, layout: SystemLayout) -> int:
        self.log.append(("run", (layout.label,)))
        for part in layout.partitions:
            drive(part.init())
        return self._now

    def major_frame(self):
        return (yield from self._op("major_frame", result=1))

    def create_task(self, spec):
        return (yield from self._op("create_task", spec, result=next(self._ids)))

    def start_task(self, handle):
        return (yield from self._op("start_task", handle))

    def get_my_id(self):
        return (yield from self._op("get_my_id", result=0))

    def lock_preemption(self):
        return (yield from self._op("lock_preemption", result=1))

    def unlock_preemption(self):
        return (yield from self._op("unlock_preemption", result=0))

    def create_semaphore(self, name, initial, maximum):
        return (yield from self._op("create_semaphore", name, initial, maximum, result=next(self._ids)))

    def signal_semaphore(self, sem):
        return (yield from self._op("signal_semaphore", sem))

    def create_mutex(self, name):
        return (yield from self._op("create_mutex", name, result=next(self._ids)))

    def acquire_mutex(self, mutex, timeout=INFINITE):
        return (yield from self._op("acquire_mutex", mutex))

    def release_mutex(self, mutex):
        return (yield from self._op("release_mutex", mutex))

    def create_event(self, name):
        return (yield from self._op("create_event", name, result=next(self._ids)))

    def set_event(self, event):
        return (yield from self._op("set_event", event))

    def reset_event(self, event):
        return (yield from self._op("reset_event", event))

    def yield_and_wait(self, kind, target=None, timeout=INFINITE):
        return (yield from self._op("yield_and_wait", kind, target))

    def create_sampling_port(self, name, max_size, direction, refresh):
        return (yield from self._op("create_sampling_port", name, result=next(self._ids)))

    def write_sampling_message(self, port, message):
        return (yield from self._op("write_sampling_message", port))

    def read_sampling_message(self, port):
        return (yield from self._op("read_sampling_message", port))

    def apex(self, service, *args):
        return (yield from self._op("apex", service))

    def work(self, kernel, units=1):
        self._now += units
        return (yield from self._op("work", kernel, units))


def drive(gen: Generator) -> Any:
    """Run a generator that never needs to block (stub bindings) to completion."""
    try:
        request = next(gen)
    except StopIteration as stop:
        return stop.value
    raise ApexBenchError(f"stub-driven body tried to block on {request!r}")
