"""System configuration: partitions, the major-frame schedule, channels and
the health-monitor table, plus the plain-text configuration file reader."""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from ..errors import ConfigInvalid
from ..timebase import DEFAULT_TICKS_PER_US, ClockKind, CostTable, Rational, as_fraction

DEFAULT_PROCESS_CAP = 32
DEFAULT_MEMORY_QUOTA = 1 << 20


class ErrorCode(str, Enum):
    DEADLINE_MISS = "DEADLINE_MISS"
    APPLICATION_ERROR = "APPLICATION_ERROR"
    NUMERIC_ERROR = "NUMERIC_ERROR"
    STACK_OVERFLOW = "STACK_OVERFLOW"
    ILLEGAL_REQUEST = "ILLEGAL_REQUEST"


class HealthAction(str, Enum):
    IGNORE = "IGNORE"
    RESTART_PROCESS = "RESTART_PROCESS"
    RESTART_PARTITION = "RESTART_PARTITION"
    STOP_PARTITION = "STOP_PARTITION"


@dataclass
class HealthMonitorTable:
    entries: dict[ErrorCode, HealthAction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.entries = {ErrorCode(k): HealthAction(v) for k, v in self.entries.items()}
        for code in ErrorCode:
            self.entries.setdefault(code, HealthAction.IGNORE)

    def action(self, code: ErrorCode) -> HealthAction:
        return self.entries[ErrorCode(code)]


@dataclass
class PartitionDescriptor:
    id: int
    name: str
    memory_quota: int = DEFAULT_MEMORY_QUOTA
    entry: Optional[Callable] = None
    process_cap: int = DEFAULT_PROCESS_CAP
    runtime_create: bool = False


@dataclass(frozen=True)
class ScheduleWindow:
    partition_id: int
    offset_ticks: int
    duration_ticks: int

    @property
    def end_ticks(self) -> int:
        return self.offset_ticks + self.duration_ticks


@dataclass
class PartitionSchedule:
    major_frame_ticks: int
    windows: list[ScheduleWindow]
    # None means "take it from the cost table"
    switch_cost_ticks: Optional[int] = None


class PortKind(str, Enum):
    SAMPLING = "sampling"
    QUEUING = "queuing"


@dataclass(frozen=True)
class ChannelSpec:
    kind: PortKind
    source: str
    destination: str


@dataclass
class SystemConfig:
    partitions: list[PartitionDescriptor]
    schedule: PartitionSchedule
    clock: ClockKind = ClockKind.VIRTUAL
    ticks_per_us: Rational = DEFAULT_TICKS_PER_US
    cost_table: CostTable = field(default_factory=CostTable)
    hm_table: HealthMonitorTable = field(default_factory=HealthMonitorTable)
    channels: list[ChannelSpec] = field(default_factory=list)
    # extra key/value settings from a config file (iterations, seed, ...)
    settings: dict[str, str] = field(default_factory=dict)

    @property
    def switch_cost_ticks(self) -> int:
        if self.schedule.switch_cost_ticks is not None:
            return self.schedule.switch_cost_ticks
        return self.cost_table.partition_switch_cost

    def partition(self, pid: int) -> PartitionDescriptor:
        for p in self.partitions:
            if p.id == pid:
                return p
        raise KeyError(pid)


def validate_config(config: SystemConfig) -> None:
    """Raise ConfigInvalid unless every structural invariant holds."""
    if not config.partitions:
        raise ConfigInvalid("at least one partition is required")
    ids = [p.id for p in config.partitions]
    if len(set(ids)) != len(ids):
        raise ConfigInvalid(f"duplicate partition ids in {ids}")
    for p in config.partitions:
        if p.memory_quota <= 0:
            raise ConfigInvalid(f"partition {p.id}: memory_quota must be > 0")
        if p.process_cap <= 0:
            raise ConfigInvalid(f"partition {p.id}: process_cap must be > 0")
    try:
        as_fraction(config.ticks_per_us)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigInvalid(str(exc)) from None

    sched = config.schedule
    if sched.major_frame_ticks <= 0:
        raise ConfigInvalid("major frame must be positive")
    if not sched.windows:
        raise ConfigInvalid("schedule has no windows")
    if config.switch_cost_ticks < 0:
        raise ConfigInvalid("switch cost must be >= 0")
    known = set(ids)
    prev_end = 0
    for i, w in enumerate(sched.windows):
        if w.partition_id not in known:
            raise ConfigInvalid(f"window {i} references unknown partition {w.partition_id}")
        if w.duration_ticks <= 0 or w.offset_ticks < 0:
            raise ConfigInvalid(f"window {i} has non-positive duration or negative offset")
        if w.offset_ticks < prev_end:
            raise ConfigInvalid(f"window {i} overlaps or is out of order")
        if w.end_ticks > sched.major_frame_ticks:
            raise ConfigInvalid(f"window {i} ends after the major frame")
        prev_end = w.end_ticks
    if len({w.partition_id for w in sched.windows}) > 1:
        for i, w in enumerate(sched.windows):
            prev = sched.windows[i - 1]
            if prev.partition_id != w.partition_id and w.duration_ticks <= config.switch_cost_ticks:
                raise ConfigInvalid(
                    f"window {i} ({w.duration_ticks} ticks) cannot absorb the "
                    f"partition switch cost ({config.switch_cost_ticks} ticks)")

    names = set()
    for ch in config.channels:
        for port in (ch.source, ch.destination):
            if port in names:
                raise ConfigInvalid(f"port {port!r} appears in more than one channel")
            names.add(port)
        if ch.source == ch.destination:
            raise ConfigInvalid(f"channel {ch.source!r} connects a port to itself")


# -- text format ---------------------------------------------------------------
#
#   key = value                       top-level setting
#   partition <id> <name> [memory=N] [cap=N] [runtime_create=yes]
#   window <partition-id> <offset> <duration>
#   cost <OPERATION|process_switch|partition_switch|base> = N
#   work <kernel> = N
#   hm <ERROR_CODE> = <ACTION>
#   channel <sampling|queuing> <source-port> -> <destination-port>

_TOP_KEYS = {"major_frame", "ticks_per_us", "clock", "switch_cost"}


def _int(text: str, where: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ConfigInvalid(f"{where}: expected an integer, got {text!r}") from None


def _assignment(tokens: list[str], where: str) -> tuple[str, str]:
    if len(tokens) != 3 or tokens[1] != "=":
        raise ConfigInvalid(f"{where}: expected '<name> = <value>'")
    return tokens[0], tokens[2]


def parse_config(text: str, source: str = "<config>") -> SystemConfig:
    settings: dict[str, str] = {}
    partitions: list[PartitionDescriptor] = []
    windows: list[ScheduleWindow] = []
    costs = CostTable()
    call_overrides: dict[str, int] = {}
    cost_kwargs: dict[str, int] = {}
    work = dict(costs.work)
    hm: dict[ErrorCode, HealthAction] = {}
    channels: list[ChannelSpec] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        tokens = shlex.split(line.replace("=", " = "))
        head, rest = tokens[0], tokens[1:]
        if head == "partition":
            if len(rest) < 2:
                raise ConfigInvalid(f"{where}: partition needs an id and a name")
            merged = _merge_options(rest[2:], where)
            partitions.append(PartitionDescriptor(
                id=_int(rest[0], where),
                name=rest[1],
                memory_quota=_int(merged.get("memory", str(DEFAULT_MEMORY_QUOTA)), where),
                process_cap=_int(merged.get("cap", str(DEFAULT_PROCESS_CAP)), where),
                runtime_create=merged.get("runtime_create", "no").lower() in ("yes", "true", "1"),
            ))
        elif head == "window":
            if len(rest) != 3:
                raise ConfigInvalid(f"{where}: window needs <partition> <offset> <duration>")
            windows.append(ScheduleWindow(*(_int(t, where) for t in rest)))
        elif head == "cost":
            name, value = _assignment(rest, where)
            ticks = _int(value, where)
            if name in ("process_switch", "partition_switch", "base"):
                key = "base_cost" if name == "base" else f"{name}_cost"
                cost_kwargs[key] = ticks
            else:
                call_overrides[name.upper()] = ticks
        elif head == "work":
            name, value = _assignment(rest, where)
            work[name] = _int(value, where)
        elif head == "hm":
            name, value = _assignment(rest, where)
            try:
                hm[ErrorCode(name.upper())] = HealthAction(value.upper())
            except ValueError:
                raise ConfigInvalid(f"{where}: bad health-monitor entry {name} = {value}") from None
        elif head == "channel":
            if len(rest) != 4 or rest[2] != "->":
                raise ConfigInvalid(f"{where}: expected 'channel <kind> <src> -> <dst>'")
            try:
                kind = PortKind(rest[0].lower())
            except ValueError:
                raise ConfigInvalid(f"{where}: unknown channel kind {rest[0]!r}") from None
            channels.append(ChannelSpec(kind, rest[1], rest[3]))
        else:
            name, value = _assignment(tokens, where)
            settings[name] = value

    try:
        cost_table = costs.with_overrides(call_overrides, **cost_kwargs)
        cost_table.work = work
        cost_table.__post_init__()
    except ValueError as exc:
        raise ConfigInvalid(f"{source}: {exc}") from None

    clock = settings.get("clock", "virtual")
    try:
        clock_kind = ClockKind(clock.lower())
    except ValueError:
        raise ConfigInvalid(f"{source}: unknown clock {clock!r}") from None
    tpu = settings.get("ticks_per_us", str(DEFAULT_TICKS_PER_US))
    try:
        tpu_value = as_fraction(tpu)
    except (ValueError, ZeroDivisionError):
        raise ConfigInvalid(f"{source}: bad ticks_per_us {tpu!r}") from None

    if not partitions and not windows:
        # cost/timebase-only file: synthesize a single-partition system
        partitions = [PartitionDescriptor(1, "DEFAULT")]
        frame = _int(settings.get("major_frame", "1000000"), source)
        windows = [ScheduleWindow(1, 0, frame)]
    frame = _int(settings.get("major_frame", str(max((w.end_ticks for w in windows), default=0))), source)
    switch = settings.get("switch_cost")
    config = SystemConfig(
        partitions=partitions,
        schedule=PartitionSchedule(frame, windows, None if switch is None else _int(switch, source)),
        clock=clock_kind,
        ticks_per_us=tpu_value,
        cost_table=cost_table,
        hm_table=HealthMonitorTable(hm),
        channels=channels,
        settings={k: v for k, v in settings.items() if k not in _TOP_KEYS},
    )
    validate_config(config)
    return config


def _merge_options(tokens: list[str], where: str) -> dict[str, str]:
    out: dict[str, str] = {}
    i = 0
    while i < len(tokens):
        if i + 2 < len(tokens) and tokens[i + 1] == "=":
            out[tokens[i]] = tokens[i + 2]
            i += 3
        else:
            raise ConfigInvalid(f"{where}: bad partition option near {tokens[i]!r}")
    return out


def load_config(path: Union[str, Path]) -> SystemConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path))


def dump_config(config: SystemConfig) -> str:
    """Inverse of ``parse_config`` (entries are not serializable and are dropped)."""
    lines = [
        f"major_frame = {config.schedule.major_frame_ticks}",
        f"ticks_per_us = {as_fraction(config.ticks_per_us)}",
        f"clock = {ClockKind(config.clock).value}",
    ]
    if config.schedule.switch_cost_ticks is not None:
        lines.append(f"switch_cost = {config.schedule.switch_cost_ticks}")
    for key, value in config.settings.items():
        lines.append(f"{key} = {value}")
    for p in config.partitions:
        flag = " runtime_create=yes" if p.runtime_create else ""
        lines.append(f"partition {p.id} {p.name} memory={p.memory_quota} cap={p.process_cap}{flag}")
    for w in config.schedule.windows:
        lines.append(f"window {w.partition_id} {w.offset_ticks} {w.duration_ticks}")
    ct = config.cost_table
    lines.append(f"cost process_switch = {ct.process_switch_cost}")
    lines.append(f"cost partition_switch = {ct.partition_switch_cost}")
    lines.append(f"cost base = {ct.base_cost}")
    lines.extend(f"cost {name} = {ticks}" for name, ticks in sorted(ct.calls.items()))
    lines.extend(f"work {name} = {ticks}" for name, ticks in sorted(ct.work.items()))
    lines.extend(f"hm {code.value} = {action.value}" for code, action in config.hm_table.entries.items())
    lines.extend(f"channel {ch.kind.value} {ch.source} -> {ch.destination}" for ch in config.channels)
    return "\n".join(lines) + "\n"


def single_partition_config(entry: Callable, *, name: str = "BENCH", frame: int = 1_000_000,
                            memory_quota: int = DEFAULT_MEMORY_QUOTA, runtime_create: bool = True,
                            base: Optional[SystemConfig] = None, channels: Iterable[ChannelSpec] = ()) -> SystemConfig:
    """One partition owning the whole major frame (no partition switches)."""
    config = SystemConfig(
        partitions=[PartitionDescriptor(1, name, memory_quota, entry, runtime_create=runtime_create)],
        schedule=PartitionSchedule(frame, [ScheduleWindow(1, 0, frame)]),
        channels=list(channels),
    )
    if base is not None:
        inherit_timing(config, base)
    return config


def inherit_timing(config: SystemConfig, base: SystemConfig) -> SystemConfig:
    config.clock = base.clock
    config.ticks_per_us = base.ticks_per_us
    config.cost_table = base.cost_table
    config.hm_table = base.hm_table
    return config
