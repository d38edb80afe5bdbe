"""The partitioned executive: windows, processes, scheduling and health monitoring.

Processes are generators. Each ``yield`` hands the executive a
:class:`~apexbench.kernel.calls.Call`; the executive charges the call's
cost against the current window (splitting it across window boundaries and
timer expiries), applies the call's effect when the charge is paid, and
sends the result back. Python code between two yields takes zero virtual
time.
"""

from __future__ import annotations

import bisect
import heapq
import inspect
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Generator, NamedTuple, Optional, TextIO, Union

from ..errors import (
    ApexError,
    DuplicateName,
    IllegalRequest,
    InvalidMode,
    InvalidState,
    ProcessFault,
    ResourceExhausted,
    TimedOut,
    Underflow,
    UnknownId,
    UnknownName,
)
from ..timebase import HostClock, make_clock
from .calls import INFINITE, Call, ProcessAttributes
from .config import ErrorCode, HealthAction, PartitionDescriptor, SystemConfig, validate_config
from .ipc import BLOCKED, IpcServices


class ProcessState(str, Enum):
    DORMANT = "DORMANT"
    READY = "READY"
    RUNNING = "RUNNING"
    WAITING = "WAITING"


class PartitionMode(str, Enum):
    COLD_START = "COLD_START"
    NORMAL = "NORMAL"
    IDLE = "IDLE"


class TraceEvent(NamedTuple):
    tick: int
    kind: str
    partition: Optional[int]
    process: Optional[int]
    detail: str = ""

    def line(self) -> str:
        part = "-" if self.partition is None else self.partition
        proc = "-" if self.process is None else self.process
        return f"{self.tick} {self.kind} {part} {proc} {self.detail}".rstrip()


# Event kinds that mean "this process is executing right now".
EXECUTION_EVENTS = frozenset({"DISPATCH", "CALL", "BLOCK", "COMPLETE"})


@dataclass(frozen=True)
class SchedulingDecision:
    tick: int
    partition: Optional[int]
    process: Optional[int]
    ticks: int

    @property
    def idle(self) -> bool:
        return self.process is None


@dataclass(frozen=True)
class ProcessStatus:
    id: int
    name: str
    partition_id: int
    priority: int
    base_priority: int
    state: ProcessState
    period: Optional[int]
    deadline: Optional[int]


@dataclass(frozen=True)
class PartitionStatus:
    id: int
    name: str
    mode: PartitionMode
    lock_level: int
    window_remaining: int
    memory_used: int
    memory_quota: int


class _Marker:
    """Blocking reason that is not an IPC object (delays, periods)."""

    def __init__(self, name: str) -> None:
        self.name = name

    def remove_waiter(self, proc: "Process") -> None:
        pass

    def __repr__(self) -> str:
        return self.name


DELAY = _Marker("DELAY")
PERIOD = _Marker("PERIOD")


class _Pending:
    __slots__ = ("call", "remaining")

    def __init__(self, call: Call, remaining: int) -> None:
        self.call = call
        self.remaining = remaining


@dataclass(eq=False)
class Process:
    """Process control block."""

    id: int
    partition_id: int
    name: str
    priority: int
    entry: Callable[[], Generator]
    period: Optional[int] = None
    deadline: Optional[int] = None
    stack_budget: int = 0
    base_priority: int = 0
    state: ProcessState = ProcessState.DORMANT
    ready_since: int = 0
    seq: int = 0
    is_main: bool = False
    gen: Optional[Generator] = None
    pending: Optional[_Pending] = None
    resume: Optional[tuple] = None
    debt: int = 0
    waiting_on: Any = None
    wait_payload: Any = None
    timer: Optional["_Timer"] = None
    release_timer: Optional["_Timer"] = None
    incarnation: int = 0
    owned: list = field(default_factory=list)

    def status(self) -> ProcessStatus:
        return ProcessStatus(self.id, self.name, self.partition_id, self.priority,
                             self.base_priority, self.state, self.period, self.deadline)


class _Timer:
    __slots__ = ("due", "kind", "proc", "incarnation", "cancelled")

    def __init__(self, due: int, kind: str, proc: Process) -> None:
        self.due = due
        self.kind = kind
        self.proc = proc
        self.incarnation = proc.incarnation
        self.cancelled = False


@dataclass(eq=False)
class Partition:
    desc: PartitionDescriptor
    mode: PartitionMode = PartitionMode.COLD_START
    main: Optional[Process] = None
    processes: dict = field(default_factory=dict)    # id -> Process
    names: dict = field(default_factory=dict)        # (kind, name) -> object
    allocations: dict = field(default_factory=dict)  # handle -> bytes
    memory_used: int = 0
    lock_level: int = 0
    last_process: Optional[Process] = None
    restart_pending: bool = False
    restart_window: int = -1

    @property
    def id(self) -> int:
        return self.desc.id


_MAIN_ID = 0


class Kernel(IpcServices):
    """A booted system. Use :func:`boot_system` to build one."""

    def __init__(self, config: SystemConfig, *, trace: bool = True, strict: bool = False) -> None:
        validate_config(config)
        self.config = config
        self.clock = make_clock(config.clock, config.ticks_per_us)
        self.costs = config.cost_table
        self.charging = not isinstance(self.clock, HostClock)
        self.strict = strict
        self.tracing = trace
        self.trace: list[TraceEvent] = []
        self.partitions: dict[int, Partition] = {p.id: Partition(p) for p in config.partitions}
        self.processes: dict[int, Process] = {}
        self.objects: dict[int, Any] = {}
        self.ports: dict[str, Any] = {}
        self.faults: list[tuple[int, BaseException]] = []
        self._frame = config.schedule.major_frame_ticks
        self._windows = list(config.schedule.windows)
        self._offsets = [w.offset_ticks for w in self._windows]
        self._switch_cost = config.switch_cost_ticks
        self._next_pid = itertools.count(1)
        self._next_oid = itertools.count(1)
        self._seq = itertools.count()
        self._timers: list = []
        self._running: Optional[Process] = None
        self._active: Optional[int] = None        # partition owning the current window
        self._last_partition: Optional[int] = None
        self._window_key: Optional[tuple] = None
        self._window_serial = 0
        self._boundary = 0
        self._pending_fault: Optional[ProcessFault] = None
        self._services = self._collect_services()
        self._init_channels()
        for part in self.partitions.values():
            self._make_main(part)

    # -- tracing ---------------------------------------------------------------

    def _emit(self, kind: str, process: Optional[Process] = None, detail: str = "",
              tick: Optional[int] = None) -> None:
        if self.tracing:
            pid = None if process is None else process.id
            self.trace.append(TraceEvent(self.clock.now() if tick is None else tick,
                                         kind, self._active, pid, detail))

    def export_trace(self, out: Union[str, TextIO]) -> None:
        """Write one line per event: ``tick kind partition process detail``."""
        text = "".join(ev.line() + "\n" for ev in self.trace)
        if isinstance(out, str):
            with open(out, "w") as fh:
                fh.write(text)
        else:
            out.write(text)

    # -- schedule geometry ---------------------------------------------------

    def window_at(self, tick: int) -> tuple[Optional[int], int, int, tuple]:
        """(owner, window start, window end, key) of the window containing ``tick``.

        Gaps between windows have owner ``None``.
        """
        frame_no, t = divmod(tick, self._frame)
        base = frame_no * self._frame
        i = bisect.bisect_right(self._offsets, t) - 1
        if i >= 0 and t < self._windows[i].end_ticks:
            w = self._windows[i]
            return w.partition_id, base + w.offset_ticks, base + w.end_ticks, (frame_no, i)
        gap_start = self._windows[i].end_ticks if i >= 0 else 0
        gap_end = self._offsets[i + 1] if i + 1 < len(self._windows) else self._frame
        return None, base + gap_start, base + gap_end, (frame_no, "gap", i)

    @property
    def now(self) -> int:
        return self.clock.now()

    @property
    def active_partition(self) -> Optional[int]:
        return self._active

    @property
    def running(self) -> Optional[Process]:
        return self._running

    # -- process management (harness side) -----------------------------------

    def _make_main(self, part: Partition) -> None:
        entry = part.desc.entry
        if entry is None:
            part.main = None
            return
        main = Process(_MAIN_ID, part.id, f"{part.desc.name}.main", 0, entry, is_main=True)
        self._prepare(main)
        main.state = ProcessState.READY
        part.main = main

    def _prepare(self, proc: Process) -> None:
        gen = proc.entry()
        if not inspect.isgenerator(gen):
            raise IllegalRequest(f"entry of {proc.name!r} must be a generator function")
        proc.gen = gen
        proc.resume = ("send", None)

    def process(self, pid: int) -> Process:
        try:
            return self.processes[pid]
        except KeyError:
            raise UnknownId(f"no process {pid}") from None

    def partition_of(self, proc: Process) -> Partition:
        return self.partitions[proc.partition_id]

    def _check_creation(self, part: Partition) -> None:
        if part.mode is PartitionMode.IDLE:
            raise InvalidMode(f"partition {part.id} is stopped")
        if part.mode is PartitionMode.NORMAL and not part.desc.runtime_create:
            raise InvalidMode(f"partition {part.id} is already NORMAL")

    def _allocate(self, part: Partition, nbytes: int) -> None:
        if part.memory_used + nbytes > part.desc.memory_quota:
            raise ResourceExhausted(
                f"partition {part.id} quota {part.desc.memory_quota} exceeded "
                f"({part.memory_used} + {nbytes})")
        part.memory_used += nbytes

    def create_process(self, partition_id: int, attrs: ProcessAttributes) -> int:
        part = self.partitions.get(partition_id)
        if part is None:
            raise UnknownId(f"no partition {partition_id}")
        self._check_creation(part)
        if any(p.name == attrs.name for p in part.processes.values()):
            raise DuplicateName(attrs.name)
        if len(part.processes) >= part.desc.process_cap:
            raise ResourceExhausted(f"process cap {part.desc.process_cap} reached")
        if attrs.period is not None and attrs.period <= 0:
            raise IllegalRequest("period must be positive")
        self._allocate(part, attrs.stack_budget)
        proc = Process(next(self._next_pid), part.id, attrs.name, attrs.priority, attrs.entry,
                       attrs.period, attrs.deadline, attrs.stack_budget, base_priority=attrs.priority)
        part.processes[proc.id] = proc
        self.processes[proc.id] = proc
        self._emit("CREATE", proc, attrs.name)
        return proc.id

    def start_process(self, pid: int) -> None:
        proc = self.process(pid)
        if proc.state is not ProcessState.DORMANT:
            raise InvalidState(f"process {pid} is {proc.state.value}")
        self._start(proc)

    def _start(self, proc: Process) -> None:
        self._prepare(proc)
        proc.priority = proc.base_priority
        self._make_ready(proc, self.clock.now())
        self._emit("START", proc)
        if proc.period is not None and self.partition_of(proc).mode is PartitionMode.NORMAL:
            self._arm_release(proc)

    def stop_process(self, pid: int) -> None:
        proc = self.process(pid)
        if proc.state is ProcessState.DORMANT:
            raise InvalidState(f"process {pid} is already DORMANT")
        self._reset(proc)
        self._emit("STOP", proc)

    def _make_ready(self, proc: Process, at: int) -> None:
        proc.state = ProcessState.READY
        proc.ready_since = at
        proc.seq = next(self._seq)

    def _reset(self, proc: Process) -> None:
        """Detach a process from everything and leave it DORMANT."""
        self._cancel(proc.timer)
        self._cancel(proc.release_timer)
        proc.timer = proc.release_timer = None
        if proc.waiting_on is not None:
            proc.waiting_on.remove_waiter(proc)
            proc.waiting_on = None
        proc.wait_payload = None
        self._release_owned(proc)
        if proc.gen is not None:
            try:
                proc.gen.close()
            except Exception:
                pass
        proc.gen = None
        proc.pending = None
        proc.resume = None
        proc.debt = 0
        proc.incarnation += 1
        proc.priority = proc.base_priority
        proc.state = ProcessState.DORMANT
        if self._running is proc:
            self._running = None

    def set_priority(self, pid: int, priority: int) -> None:
        proc = self.process(pid)
        if proc.state is ProcessState.DORMANT:
            raise InvalidState(f"process {pid} is DORMANT")
        proc.priority = priority
        if proc.state is ProcessState.READY:
            self._make_ready(proc, self.clock.now())

    def get_process_status(self, pid: int) -> ProcessStatus:
        return self.process(pid).status()

    def get_partition_status(self, partition_id: int) -> PartitionStatus:
        part = self.partitions.get(partition_id)
        if part is None:
            raise UnknownId(f"no partition {partition_id}")
        now = self.clock.now()
        owner, _, end, _ = self.window_at(now)
        remaining = end - now if owner == partition_id else 0
        return PartitionStatus(part.id, part.desc.name, part.mode, part.lock_level, remaining,
                               part.memory_used, part.desc.memory_quota)

    # -- health monitor --------------------------------------------------------

    def raise_error(self, code: Union[ErrorCode, str], source: Optional[int] = None) -> HealthAction:
        code = ErrorCode(code)
        action = self.config.hm_table.action(code)
        proc = self.processes.get(source) if source else None
        self._emit("HM", proc, f"{code.value} {action.value}")
        if action is HealthAction.IGNORE or proc is None:
            return action
        part = self.partition_of(proc)
        if action is HealthAction.RESTART_PROCESS:
            self._reset(proc)
            self._start(proc)
        elif action is HealthAction.RESTART_PARTITION:
            self.restart_partition(part.id)
        else:
            self.stop_partition(part.id)
        return action

    def restart_partition(self, partition_id: int) -> None:
        part = self.partitions[partition_id]
        for proc in part.processes.values():
            self._reset(proc)
        if part.main is not None:
            self._reset(part.main)
        part.mode = PartitionMode.COLD_START
        part.lock_level = 0
        part.restart_pending = True
        part.restart_window = self._window_serial
        self._emit("MODE", None, f"{part.id} COLD_START")

    def stop_partition(self, partition_id: int) -> None:
        part = self.partitions[partition_id]
        for proc in part.processes.values():
            self._reset(proc)
        if part.main is not None:
            self._reset(part.main)
        part.mode = PartitionMode.IDLE
        part.restart_pending = False
        part.lock_level = 0
        self._emit("MODE", None, f"{part.id} IDLE")

    def _reinitialize(self, part: Partition) -> None:
        for pid in list(part.processes):
            del self.processes[pid]
        part.processes.clear()
        for obj in part.names.values():
            self._forget_object(obj)
        part.names.clear()
        part.allocations.clear()
        part.memory_used = 0
        part.last_process = None
        part.restart_pending = False
        part.mode = PartitionMode.COLD_START
        self._make_main(part)
        self._emit("RESTART", None, str(part.id))

    def _fault(self, proc: Process, exc: BaseException) -> None:
        if isinstance(exc, ArithmeticError):
            code = ErrorCode.NUMERIC_ERROR
        elif isinstance(exc, RecursionError):
            code = ErrorCode.STACK_OVERFLOW
        elif isinstance(exc, ApexError):
            code = ErrorCode.ILLEGAL_REQUEST
        else:
            code = ErrorCode.APPLICATION_ERROR
        self.faults.append((proc.id, exc))
        self._emit("FAULT", proc, f"{code.value} {type(exc).__name__}")
        part = self.partition_of(proc)
        self._reset(proc)
        if proc.is_main:
            action = self.config.hm_table.action(code)
            self._emit("HM", proc, f"{code.value} {action.value}")
            if action is HealthAction.STOP_PARTITION:
                self.stop_partition(part.id)
            elif action is not HealthAction.IGNORE:
                self.restart_partition(part.id)
            else:
                self._enter_normal(part)
        else:
            self.raise_error(code, proc.id)
        if self.strict and self._pending_fault is None:
            err = ProcessFault(f"{proc.name}: {type(exc).__name__}: {exc}")
            err.__cause__ = exc
            self._pending_fault = err

    # -- timers ----------------------------------------------------------------

    def _add_timer(self, due: int, kind: str, proc: Process) -> _Timer:
        timer = _Timer(due, kind, proc)
        heapq.heappush(self._timers, (due, next(self._seq), timer))
        return timer

    @staticmethod
    def _cancel(timer: Optional[_Timer]) -> None:
        if timer is not None:
            timer.cancelled = True

    def _next_timer_due(self) -> Optional[int]:
        timers = self._timers
        while timers and timers[0][2].cancelled:
            heapq.heappop(timers)
        return timers[0][0] if timers else None

    def _fire_timers(self, now: int) -> None:
        timers = self._timers
        while timers and timers[0][0] <= now:
            due, _, timer = heapq.heappop(timers)
            if timer.cancelled or timer.incarnation != timer.proc.incarnation:
                continue
            proc = timer.proc
            if timer.kind == "bound":
                continue
            if timer.kind == "release":
                self._release(proc, due)
                continue
            proc.timer = None
            if timer.kind == "timeout":
                self._emit("TIMEOUT", proc, tick=due)
                self._wake(proc, exc=TimedOut(f"after waiting on {proc.waiting_on!r}"), at=due)
            else:
                self._wake(proc, at=due)

    def _arm_release(self, proc: Process) -> None:
        now = self.clock.now()
        due = (now // proc.period + 1) * proc.period
        proc.release_timer = self._add_timer(due, "release", proc)

    def _release(self, proc: Process, due: int) -> None:
        proc.release_timer = None
        if proc.state is ProcessState.DORMANT:
            return
        if proc.waiting_on is PERIOD:
            self._emit("RELEASE", proc, tick=due)
            self._wake(proc, at=due)
        else:
            incarnation = proc.incarnation
            self.raise_error(ErrorCode.DEADLINE_MISS, proc.id)
            if proc.incarnation != incarnation:
                return
        proc.release_timer = self._add_timer(due + proc.period, "release", proc)

    # -- blocking primitives used by the services -----------------------------

    def _block(self, proc: Process, reason: Any, timeout: Optional[int] = INFINITE) -> None:
        proc.state = ProcessState.WAITING
        proc.waiting_on = reason
        if timeout is not None and timeout != INFINITE:
            proc.timer = self._add_timer(self.clock.now() + timeout, "timeout", proc)
        if self._running is proc:
            self._running = None
        self._emit("BLOCK", proc, repr(reason))

    def _wake(self, proc: Process, value: Any = None, exc: Optional[BaseException] = None,
              at: Optional[int] = None) -> None:
        self._cancel(proc.timer)
        proc.timer = None
        if proc.waiting_on is not None:
            proc.waiting_on.remove_waiter(proc)
        proc.waiting_on = None
        proc.wait_payload = None
        proc.resume = ("throw", exc) if exc is not None else ("send", value)
        self._make_ready(proc, self.clock.now() if at is None else at)
        self._emit("WAKE", proc, tick=at)

    # -- services --------------------------------------------------------------

    def _collect_services(self) -> dict[str, Callable]:
        services = {}
        for cls in type(self).__mro__:
            for attr, fn in vars(cls).items():
                if attr.startswith("_svc_") and attr[5:] not in services:
                    services[attr[5:]] = getattr(self, attr)
        return services

    @property
    def services(self) -> frozenset:
        return frozenset(self._services)

    def _cost_of(self, call: Call) -> int:
        if not self.charging:
            return 0
        if call.service == "WORK":
            kernel, units = call.args
            return self.costs.work_cost(kernel, units)
        return self.costs.cost(call.service)

    def _svc_CREATE_PROCESS(self, proc, attrs):
        return self.create_process(proc.partition_id, attrs)

    def _svc_START(self, proc, pid):
        target = self._own_process(proc, pid)
        if target.state is not ProcessState.DORMANT:
            raise InvalidState(f"process {pid} is {target.state.value}")
        self._start(target)

    def _svc_STOP(self, proc, pid):
        target = self._own_process(proc, pid)
        if target is proc:
            return self._svc_STOP_SELF(proc)
        self.stop_process(pid)

    def _svc_STOP_SELF(self, proc):
        self._finish(proc)
        return BLOCKED

    def _svc_SET_PRIORITY(self, proc, pid, priority):
        self._own_process(proc, pid)
        self.set_priority(pid, priority)

    def _svc_GET_MY_ID(self, proc):
        return proc.id

    def _svc_GET_PROCESS_ID(self, proc, name):
        for p in self.partition_of(proc).processes.values():
            if p.name == name:
                return p.id
        raise UnknownName(name)

    def _svc_GET_PROCESS_STATUS(self, proc, pid):
        return self._own_process(proc, pid).status()

    def _svc_GET_PARTITION_STATUS(self, proc):
        return self.get_partition_status(proc.partition_id)

    def _svc_SET_PARTITION_MODE(self, proc, mode):
        part = self.partition_of(proc)
        mode = PartitionMode(mode)
        if mode is PartitionMode.IDLE:
            self.stop_partition(part.id)
            return BLOCKED
        if mode is PartitionMode.COLD_START:
            self.restart_partition(part.id)
            return BLOCKED
        if not proc.is_main:
            raise InvalidMode("only the partition entry can enter NORMAL")
        self._enter_normal(part)
        return BLOCKED

    def _svc_LOCK_PREEMPTION(self, proc):
        part = self.partition_of(proc)
        if part.mode is not PartitionMode.NORMAL:
            raise InvalidMode("preemption lock needs NORMAL mode")
        part.lock_level += 1
        return part.lock_level

    def _svc_UNLOCK_PREEMPTION(self, proc):
        part = self.partition_of(proc)
        if part.lock_level == 0:
            raise Underflow("preemption is not locked")
        part.lock_level -= 1
        return part.lock_level

    def _svc_TIMED_WAIT(self, proc, delay):
        if delay is None or delay < 0:
            raise IllegalRequest("timed_wait needs a finite, non-negative delay")
        if delay == 0:
            if not proc.is_main:
                self._make_ready(proc, self.clock.now())
                if self._running is proc:
                    self._running = None
            return None
        self._block(proc, DELAY)
        proc.timer = self._add_timer(self.clock.now() + delay, "delay", proc)
        return BLOCKED

    def _svc_PERIODIC_WAIT(self, proc):
        if proc.period is None:
            raise InvalidMode(f"{proc.name} is not periodic")
        self._block(proc, PERIOD)
        return BLOCKED

    def _svc_GET_CURRENT_TICKS(self, proc):
        return self.clock.now()

    def _svc_RAISE_APPLICATION_ERROR(self, proc, code="APPLICATION_ERROR"):
        incarnation = proc.incarnation
        action = self.raise_error(code, proc.id)
        if proc.incarnation != incarnation:
            return BLOCKED
        return action

    def _svc_WORK(self, proc, kernel, units=1):
        return None

    def _svc_ALLOCATE(self, proc, nbytes):
        if nbytes <= 0:
            raise IllegalRequest("allocation size must be positive")
        part = self.partition_of(proc)
        self._allocate(part, nbytes)
        handle = next(self._next_oid)
        part.allocations[handle] = nbytes
        return handle

    def _svc_FREE(self, proc, handle):
        part = self.partition_of(proc)
        try:
            nbytes = part.allocations.pop(handle)
        except KeyError:
            raise UnknownId(f"no allocation {handle} in partition {part.id}") from None
        part.memory_used -= nbytes

    def _own_process(self, proc: Process, pid: int) -> Process:
        target = self.processes.get(pid)
        if target is None or target.partition_id != proc.partition_id:
            raise UnknownId(f"no process {pid} in partition {proc.partition_id}")
        return target

    # -- execution -------------------------------------------------------------

    def _finish(self, proc: Process) -> None:
        part = self.partition_of(proc)
        self._emit("COMPLETE", proc)
        if proc.is_main:
            proc.gen = None
            proc.state = ProcessState.DORMANT
            proc.resume = proc.pending = None
            if self._running is proc:
                self._running = None
            self._enter_normal(part)
        else:
            self._reset(proc)

    def _enter_normal(self, part: Partition) -> None:
        if part.mode is not PartitionMode.COLD_START:
            return
        if part.main is not None and part.main.state is not ProcessState.DORMANT:
            self._reset(part.main)
        part.mode = PartitionMode.NORMAL
        self._emit("MODE", None, f"{part.id} NORMAL")
        for proc in part.processes.values():
            if proc.period is not None and proc.state is not ProcessState.DORMANT:
                self._arm_release(proc)

    def _resume(self, proc: Process) -> None:
        kind, value = proc.resume
        proc.resume = None
        try:
            if kind == "send":
                request = proc.gen.send(value)
            else:
                request = proc.gen.throw(value)
        except StopIteration:
            self._finish(proc)
            return
        except Exception as exc:
            self._fault(proc, exc)
            return
        if not isinstance(request, Call):
            self._fault(proc, IllegalRequest(f"{proc.name} yielded {request!r}, not a Call"))
            return
        proc.pending = _Pending(request, self._cost_of(request))

    def _complete(self, proc: Process) -> None:
        call = proc.pending.call
        proc.pending = None
        self._emit("CALL", proc, call.service)
        handler = self._services.get(call.service)
        try:
            if handler is None:
                raise IllegalRequest(f"unknown service {call.service}")
            result = handler(proc, *call.args)
        except ApexError as exc:
            outcome = ("throw", exc)
        else:
            if result is BLOCKED:
                return
            outcome = ("send", result)
        if proc.state is ProcessState.DORMANT:
            return
        proc.resume = outcome
        if proc.state is ProcessState.RUNNING and not self._should_yield(proc):
            self._resume(proc)

    def _should_yield(self, proc: Process) -> bool:
        part = self.partition_of(proc)
        if part.mode is not PartitionMode.NORMAL or part.lock_level:
            return False
        best = self._best_ready(part)
        return best is not None and best.priority > proc.priority

    @staticmethod
    def _best_ready(part: Partition) -> Optional[Process]:
        best = None
        for p in part.processes.values():
            if p.state is ProcessState.READY and (
                    best is None
                    or p.priority > best.priority
                    or (p.priority == best.priority
                        and (p.ready_since, p.seq) < (best.ready_since, best.seq))):
                best = p
        return best

    def _select(self, part: Partition) -> Optional[Process]:
        if part.restart_pending:
            if part.restart_window == self._window_serial:
                return None
            self._reinitialize(part)
        if part.mode is PartitionMode.IDLE:
            return None
        if part.mode is PartitionMode.COLD_START:
            main = part.main
            if main is None:
                self._enter_normal(part)
            elif main.state in (ProcessState.READY, ProcessState.RUNNING):
                return main
            else:
                return None
        holder = part.last_process
        if part.lock_level and holder is not None and holder.state in (ProcessState.READY,
                                                                        ProcessState.RUNNING):
            return holder
        running = self._running
        if running is not None and (running.partition_id != part.id
                                    or running.state is not ProcessState.RUNNING):
            running = None
        best = self._best_ready(part)
        if running is not None and (best is None or best.priority <= running.priority):
            return running
        return best

    def _has_work(self, part: Partition) -> bool:
        if part.mode is PartitionMode.IDLE:
            return False
        if part.restart_pending:
            return True
        if part.mode is PartitionMode.COLD_START:
            return part.main is None or part.main.state in (ProcessState.READY, ProcessState.RUNNING)
        return any(p.state in (ProcessState.READY, ProcessState.RUNNING)
                   for p in part.processes.values())

    def _start_window(self, owner: Optional[int], key: tuple) -> None:
        self._window_key = key
        self._window_serial += 1
        if owner == self._active:
            return
        running = self._running
        if running is not None and running.state is ProcessState.RUNNING:
            self._emit("PREEMPT", running, "window")
            running.state = ProcessState.READY
        self._running = None
        self._active = owner
        if owner is None:
            return
        if self._last_partition is not None and owner != self._last_partition:
            self._emit("PARTITION_SWITCH", None, f"{self._last_partition}->{owner}")
            if self.charging:
                self.clock.charge(min(self._switch_cost, self._boundary - self.clock.now()))
        self._last_partition = owner
        self._emit("WINDOW", None, str(owner))

    def schedule_step(self) -> SchedulingDecision:
        """Advance the system to the next scheduling point."""
        clock = self.clock
        start = clock.now()
        self._fire_timers(start)
        owner, _, end, key = self.window_at(start)
        self._boundary = end
        if key != self._window_key:
            self._start_window(owner, key)
            return SchedulingDecision(start, owner, None, clock.now() - start)
        part = self.partitions[owner] if owner is not None else None
        proc = self._select(part) if part is not None else None
        due = self._next_timer_due()
        limit = end if due is None else min(end, due)
        if proc is None:
            clock.advance_to(limit)
            return SchedulingDecision(start, owner, None, clock.now() - start)
        self._execute(proc, part, limit)
        return SchedulingDecision(start, owner, proc.id, clock.now() - start)

    def _execute(self, proc: Process, part: Partition, limit: int) -> None:
        clock = self.clock
        if self._running is not proc:
            prev = self._running
            if prev is not None and prev.state is ProcessState.RUNNING:
                self._emit("PREEMPT", prev, f"by {proc.id}")
                prev.state = ProcessState.READY
            proc.state = ProcessState.RUNNING
            self._running = proc
            if part.last_process is not None and part.last_process is not proc and self.charging:
                proc.debt += self.costs.process_switch_cost
            part.last_process = proc
            self._emit("DISPATCH", proc)
        if proc.debt:
            paid = min(proc.debt, limit - clock.now())
            clock.charge(paid)
            proc.debt -= paid
            if proc.debt:
                return
        if proc.pending is None:
            if proc.resume is None:
                return
            self._resume(proc)
            if proc.pending is None or proc.state is not ProcessState.RUNNING:
                return
        pending = proc.pending
        if pending.remaining:
            paid = min(pending.remaining, limit - clock.now())
            clock.charge(paid)
            pending.remaining -= paid
        if not pending.remaining:
            self._complete(proc)

    def run(self, until: Optional[Callable[[], bool]] = None, max_ticks: Optional[int] = None,
            max_steps: Optional[int] = None) -> int:
        """Run until quiescent, ``until()`` holds or the clock reaches ``max_ticks``.

        Returns the clock value at exit.
        """
        steps = 0
        while True:
            if self._pending_fault is not None:
                fault, self._pending_fault = self._pending_fault, None
                raise fault
            if until is not None and until():
                break
            now = self.clock.now()
            if max_ticks is not None and now >= max_ticks:
                break
            if max_steps is not None and steps >= max_steps:
                break
            if self._next_timer_due() is None and not any(
                    self._has_work(p) for p in self.partitions.values()):
                break
            if max_ticks is not None:
                self._step_bounded(max_ticks)
            else:
                self.schedule_step()
            steps += 1
        return self.clock.now()

    def _step_bounded(self, max_ticks: int) -> None:
        # A one-shot timer keeps charges from running past max_ticks.
        sentinel = Process(-1, -1, "bound", 0, lambda: iter(()))
        timer = self._add_timer(max_ticks, "bound", sentinel)
        self.schedule_step()
        timer.cancelled = True


def boot_system(config: SystemConfig, *, trace: bool = True, strict: bool = False) -> Kernel:
    """Validate ``config`` and return a system positioned before its first window."""
    return Kernel(config, trace=trace, strict=strict)


def exclusive_execution_violations(kernel: Kernel) -> list[TraceEvent]:
    """Execution events whose partition does not own the window at that tick.

    Window ends are inclusive: a call that completes exactly at a boundary
    still belongs to the window it ran in.
    """
    bad = []
    for ev in kernel.trace:
        if ev.kind not in EXECUTION_EVENTS or ev.process is None:
            continue
        owners = {kernel.window_at(ev.tick)[0]}
        if ev.tick > 0:
            owners.add(kernel.window_at(ev.tick - 1)[0])
        proc = kernel.processes.get(ev.process)
        proc_part = proc.partition_id if proc is not None else ev.partition
        if ev.partition not in owners or proc_part != ev.partition:
            bad.append(ev)
    return bad
