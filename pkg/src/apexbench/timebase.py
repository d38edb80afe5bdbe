"""Clock backends, the cost model, sample series and summary statistics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Union

from .errors import ApexBenchError, EmptySeries, UnmatchedEnd

Rational = Union[int, float, str, Fraction]

DEFAULT_TICKS_PER_US = 75
DEFAULT_BASE_COST = 10


def as_fraction(value: Rational) -> Fraction:
    """Convert a user-supplied rate to an exact rational.

    Floats go through their shortest repr so ``75.5`` means 151/2 rather
    than the nearest binary double.
    """
    if isinstance(value, Fraction):
        result = value
    elif isinstance(value, float):
        result = Fraction(repr(value))
    else:
        result = Fraction(value)
    if result <= 0:
        raise ValueError(f"ticks_per_us must be positive, got {value!r}")
    return result


class ClockKind(str, Enum):
    VIRTUAL = "virtual"
    HOST = "host"


class VirtualClock:
    """Simulated timebase; only moves when the executive charges work to it."""

    kind = ClockKind.VIRTUAL

    def __init__(self, ticks_per_us: Rational = DEFAULT_TICKS_PER_US) -> None:
        self.ticks_per_us = as_fraction(ticks_per_us)
        self._now = 0

    def now(self) -> int:
        return self._now

    def charge(self, ticks: int) -> None:
        if ticks < 0:
            raise ValueError("cannot charge negative time")
        self._now += ticks

    def advance_to(self, tick: int) -> None:
        if tick > self._now:
            self._now = tick


class HostClock:
    """Monotonic host timer scaled to ticks; charges are no-ops."""

    kind = ClockKind.HOST

    def __init__(self, ticks_per_us: Rational = DEFAULT_TICKS_PER_US) -> None:
        self.ticks_per_us = as_fraction(ticks_per_us)
        self._num = self.ticks_per_us.numerator
        self._den = self.ticks_per_us.denominator * 1000
        self._origin = time.perf_counter_ns()

    def now(self) -> int:
        elapsed = time.perf_counter_ns() - self._origin
        return elapsed * self._num // self._den

    def charge(self, ticks: int) -> None:
        pass

    def advance_to(self, tick: int) -> None:
        while self.now() < tick:
            remaining_us = (tick - self.now()) / self.ticks_per_us
            if remaining_us > 2000:
                time.sleep(float(remaining_us) / 2e6)


ClockBackend = Union[VirtualClock, HostClock]


def make_clock(kind: Union[str, ClockKind], ticks_per_us: Rational = DEFAULT_TICKS_PER_US) -> ClockBackend:
    kind = ClockKind(kind)
    if kind is ClockKind.VIRTUAL:
        return VirtualClock(ticks_per_us)
    return HostClock(ticks_per_us)


def now_ticks(backend: ClockBackend) -> int:
    return backend.now()


# Per-call defaults echo the averages published for the reference platform
# so that virtual runs land in a familiar range; every entry is overridable.
DEFAULT_CALL_COSTS: dict[str, int] = {
    "WAIT_SEMAPHORE": 119,
    "SIGNAL_SEMAPHORE": 42,
    "CREATE_SEMAPHORE": 1004,
    "GET_SEMAPHORE_ID": 44,
    "GET_SEMAPHORE_STATUS": 57,
    "ACQUIRE_MUTEX": 76,
    "RELEASE_MUTEX": 79,
    "CREATE_BUFFER": 388,
    "SEND_BUFFER": 134,
    "CREATE_BLACKBOARD": 349,
    "DISPLAY_BLACKBOARD": 51,
    "READ_BLACKBOARD": 83,
    "CREATE_EVENT": 407,
    "SET_EVENT": 50,
    "GET_EVENT_ID": 65,
    "GET_EVENT_STATUS": 48,
    "GET_PARTITION_STATUS": 58,
    "LOCK_PREEMPTION": 157,
    "UNLOCK_PREEMPTION": 129,
    "SET_PRIORITY": 101,
    "GET_MY_ID": 52,
    "GET_PROCESS_ID": 36,
    "GET_PROCESS_STATUS": 91,
    "CREATE_SAMPLING_PORT": 1436,
    "WRITE_SAMPLING_MESSAGE": 546,
    "READ_SAMPLING_MESSAGE": 475,
    "GET_SAMPLING_PORT_ID": 279,
    "GET_SAMPLING_PORT_STATUS": 26,
    "CREATE_QUEUING_PORT": 1683,
    "SEND_QUEUING_MESSAGE": 1261,
    "GET_QUEUING_PORT_ID": 30,
    "GET_QUEUING_PORT_STATUS": 295,
}

# Virtual cost of workload kernels, in ticks per unit of work.
DEFAULT_WORK_COSTS: dict[str, int] = {
    "checksum": 1,    # per byte
    "crc32": 5,       # per byte
    "sobel": 96,      # per pixel
    "adpcm": 7,       # per sample
    "dijkstra": 10,   # per node pair
    "matmul": 4,      # per multiply-add
    "spin": 1,        # per tick requested
}


@dataclass
class CostTable:
    """Deterministic timing model used by the virtual clock."""

    calls: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_CALL_COSTS))
    work: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_WORK_COSTS))
    process_switch_cost: int = 113
    partition_switch_cost: int = 1682
    base_cost: int = DEFAULT_BASE_COST

    def __post_init__(self) -> None:
        for table in (self.calls, self.work):
            for name, cost in table.items():
                if cost < 0:
                    raise ValueError(f"negative cost for {name}")
        for name in ("process_switch_cost", "partition_switch_cost", "base_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"negative {name}")

    def cost(self, operation: str) -> int:
        return self.calls.get(operation, self.base_cost)

    def work_cost(self, kernel: str, units: int) -> int:
        return self.work.get(kernel, self.base_cost) * units

    def with_overrides(self, calls: Optional[Mapping[str, int]] = None, **kwargs: int) -> "CostTable":
        merged = dict(self.calls)
        merged.update(calls or {})
        params = dict(
            work=dict(self.work),
            process_switch_cost=self.process_switch_cost,
            partition_switch_cost=self.partition_switch_cost,
            base_cost=self.base_cost,
        )
        params.update(kwargs)
        return CostTable(calls=merged, **params)


@dataclass
class MeasurementSeries:
    name: str
    samples: list[int] = field(default_factory=list)
    unit: str = "ticks"

    def append(self, sample: int) -> None:
        if sample < 0:
            raise ValueError(f"negative sample {sample} in {self.name}")
        self.samples.append(sample)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class MeasureContext:
    """Per-metric measurement state (declare/initialize/start/end/validate)."""

    name: Optional[str] = None
    backend: Optional[ClockBackend] = None
    open_start: Optional[int] = None
    series: Optional[MeasurementSeries] = None
    stage: str = "declared"

    @property
    def is_open(self) -> bool:
        return self.open_start is not None


def measure_begin(ctx: MeasureContext) -> None:
    ctx.open_start = ctx.backend.now()


def measure_end(ctx: MeasureContext) -> int:
    end = ctx.backend.now()
    if ctx.open_start is None:
        raise UnmatchedEnd(f"end without begin for {ctx.name!r}")
    sample = end - ctx.open_start
    ctx.open_start = None
    ctx.series.append(sample)
    return sample


@dataclass(frozen=True)
class SummaryStats:
    bcet_ticks: int
    wcet_ticks: int
    average_ticks: float
    bcet_us: float
    wcet_us: float
    average_us: float
    stddev_us: float
    count: int


def summarize(series: Union[MeasurementSeries, list], ticks_per_us: Rational = DEFAULT_TICKS_PER_US,
              with_stddev: bool = True) -> SummaryStats:
    samples = series.samples if isinstance(series, MeasurementSeries) else list(series)
    if not samples:
        raise EmptySeries("cannot summarize an empty series")
    rate = as_fraction(ticks_per_us)
    scale = rate.numerator / rate.denominator
    n = len(samples)
    lo, hi = min(samples), max(samples)
    mean_ticks = math.fsum(samples) / n
    stddev = 0.0
    if with_stddev and n > 1:
        us = [s / scale for s in samples]
        mean_us = math.fsum(us) / n
        stddev = math.sqrt(math.fsum((u - mean_us) ** 2 for u in us) / n)
    return SummaryStats(
        bcet_ticks=lo,
        wcet_ticks=hi,
        average_ticks=mean_ticks,
        bcet_us=lo / scale,
        wcet_us=hi / scale,
        average_us=mean_ticks / scale,
        stddev_us=stddev,
        count=n,
    )


def ticks_to_micros_display(ticks: Union[int, Fraction], ticks_per_us: Rational = DEFAULT_TICKS_PER_US) -> str:
    """Render ticks as microseconds with two decimals, truncated toward zero.

    Exact rational arithmetic: 29 ticks at 75/us is 0.38666... and shows
    as ``"0.38"``.
    """
    hundredths = Fraction(ticks) * 100 / as_fraction(ticks_per_us)
    return _format_hundredths(math.trunc(hundredths))


def truncate_2dp(value: float) -> str:
    """Two-decimal display of an already-converted value, truncated."""
    if not math.isfinite(value):
        raise ApexBenchError(f"cannot display non-finite value {value!r}")
    return _format_hundredths(math.trunc(Fraction(value) * 100))


def _format_hundredths(h: int) -> str:
    sign = "-" if h < 0 else ""
    h = abs(h)
    return f"{sign}{h // 100}.{h % 100:02d}"
