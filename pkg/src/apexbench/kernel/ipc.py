"""Intra- and inter-partition communication objects and their services.

Semaphores, events, mutexes, blackboards and buffers live inside one
partition and are looked up by name within it. Sampling and queuing ports
are global endpoints joined by the channels declared in the system
configuration; a port whose name appears in no channel gets a private one.
All waiter queues are FIFO.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, NamedTuple, Optional

from ..errors import (
    DirectionMismatch,
    DuplicateName,
    IllegalRequest,
    InvalidState,
    MessageTooLong,
    NoMessage,
    NotOwner,
    Overflow,
    TimedOut,
    UnknownId,
    UnknownName,
)
from .calls import INFINITE
from .config import PortKind

_OBJECT_BYTES = 16


class _Blocked:
    def __repr__(self) -> str:
        return "BLOCKED"


# Returned by a service handler when the caller is now waiting.
BLOCKED = _Blocked()


class PortDirection(str, Enum):
    SOURCE = "SOURCE"
    DESTINATION = "DESTINATION"


class IpcObject:
    kind = "object"

    def __init__(self, name: str) -> None:
        self.id = 0
        self.name = name
        self.partition_id = 0
        self.waiters: deque = deque()

    def remove_waiter(self, proc: Any) -> None:
        try:
            self.waiters.remove(proc)
        except ValueError:
            pass

    def __repr__(self) -> str:
        return f"{self.kind}:{self.name}"


class Semaphore(IpcObject):
    kind = "semaphore"

    def __init__(self, name: str, value: int, max_value: int) -> None:
        super().__init__(name)
        self.value = value
        self.max_value = max_value


class EventObject(IpcObject):
    kind = "event"

    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.up = False


class MutexObject(IpcObject):
    kind = "mutex"

    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.owner = None


class Blackboard(IpcObject):
    kind = "blackboard"

    def __init__(self, name: str, max_size: int) -> None:
        super().__init__(name)
        self.max_size = max_size
        self.message: Optional[bytes] = None


class _Fifo:
    """A bounded message queue with FIFO sender and receiver waiters."""

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self.queue: deque = deque()
        self.senders: deque = deque()
        self.receivers: deque = deque()

    def drop(self, proc: Any) -> None:
        for waiters in (self.senders, self.receivers):
            try:
                waiters.remove(proc)
            except ValueError:
                pass


class BufferQueue(IpcObject):
    kind = "buffer"

    def __init__(self, name: str, capacity: int, max_size: int) -> None:
        super().__init__(name)
        self.fifo = _Fifo(capacity)
        self.max_size = max_size

    def remove_waiter(self, proc: Any) -> None:
        self.fifo.drop(proc)


class Channel:
    """One source-to-destination link between ports."""

    def __init__(self, kind: PortKind, source: str, destination: str) -> None:
        self.kind = kind
        self.source = source
        self.destination = destination
        self.endpoints: dict[str, "Port"] = {}
        self.fifo = _Fifo(0)
        self.message: Optional[bytes] = None
        self.stamp = 0

    def role_of(self, name: str) -> PortDirection:
        return PortDirection.SOURCE if name == self.source else PortDirection.DESTINATION

    def attach(self, port: "Port") -> None:
        self.endpoints[port.name] = port
        if self.kind is PortKind.QUEUING:
            self.fifo.capacity = min(p.capacity for p in self.endpoints.values())

    def detach(self, port: "Port") -> None:
        self.endpoints.pop(port.name, None)


class Port(IpcObject):
    def __init__(self, name: str, direction: PortDirection, max_size: int, channel: Channel) -> None:
        super().__init__(name)
        self.direction = direction
        self.max_size = max_size
        self.channel = channel


class SamplingPort(Port):
    kind = "sampling_port"

    def __init__(self, name: str, direction: PortDirection, max_size: int, refresh: int,
                 channel: Channel) -> None:
        super().__init__(name, direction, max_size, channel)
        self.refresh = refresh


class QueuingPort(Port):
    kind = "queuing_port"

    def __init__(self, name: str, direction: PortDirection, max_size: int, capacity: int,
                 channel: Channel) -> None:
        super().__init__(name, direction, max_size, channel)
        self.capacity = capacity

    def remove_waiter(self, proc: Any) -> None:
        self.channel.fifo.drop(proc)


class SamplingMessage(NamedTuple):
    message: bytes
    valid: bool


@dataclass(frozen=True)
class SemaphoreStatus:
    value: int
    max_value: int
    waiting: int


@dataclass(frozen=True)
class EventStatus:
    state: str
    waiting: int


@dataclass(frozen=True)
class BlackboardStatus:
    empty: bool
    max_size: int
    waiting: int


@dataclass(frozen=True)
class BufferStatus:
    messages: int
    capacity: int
    max_size: int
    waiting: int


@dataclass(frozen=True)
class SamplingPortStatus:
    direction: PortDirection
    max_size: int
    refresh: int
    has_message: bool
    valid: bool


@dataclass(frozen=True)
class QueuingPortStatus:
    direction: PortDirection
    messages: int
    capacity: int
    max_size: int
    waiting: int


def _check_size(message: bytes, max_size: int) -> None:
    if len(message) > max_size:
        raise MessageTooLong(f"{len(message)} bytes > {max_size}")


def _positive(**values: int) -> None:
    for name, value in values.items():
        if value <= 0:
            raise IllegalRequest(f"{name} must be positive, got {value}")


class IpcServices:
    """Service handlers mixed into the kernel.

    Relies on the kernel's ``_block``, ``_wake``, ``_check_creation`` and
    ``_allocate`` primitives.
    """

    # -- registry --------------------------------------------------------------

    def _init_channels(self) -> None:
        self.channels: dict[str, Channel] = {}
        for spec in self.config.channels:
            channel = Channel(PortKind(spec.kind), spec.source, spec.destination)
            self.channels[spec.source] = channel
            self.channels[spec.destination] = channel

    def _register(self, proc, obj: IpcObject, nbytes: int) -> int:
        part = self.partition_of(proc)
        self._check_creation(part)
        key = (obj.kind, obj.name)
        if key in part.names or (isinstance(obj, Port) and obj.name in self.ports):
            raise DuplicateName(obj.name)
        self._allocate(part, nbytes)
        obj.id = next(self._next_oid)
        obj.partition_id = part.id
        part.names[key] = obj
        self.objects[obj.id] = obj
        if isinstance(obj, Port):
            self.ports[obj.name] = obj
            obj.channel.attach(obj)
        return obj.id

    def _forget_object(self, obj: IpcObject) -> None:
        self.objects.pop(obj.id, None)
        if isinstance(obj, Port):
            self.ports.pop(obj.name, None)
            obj.channel.detach(obj)

    def _lookup(self, proc, cls: type, oid: int) -> Any:
        obj = self.objects.get(oid)
        if not isinstance(obj, cls) or obj.partition_id != proc.partition_id:
            raise UnknownId(f"no {cls.kind} with id {oid} in partition {proc.partition_id}")
        return obj

    def _by_name(self, proc, cls: type, name: str) -> int:
        obj = self.partition_of(proc).names.get((cls.kind, name))
        if obj is None:
            raise UnknownName(f"no {cls.kind} named {name!r}")
        return obj.id

    def _wait_on(self, proc, obj: IpcObject, waiters: deque, timeout: Optional[int]) -> Any:
        if timeout == 0:
            raise TimedOut(f"{obj!r} not available")
        if timeout is not None and timeout < 0 and timeout != INFINITE:
            raise IllegalRequest(f"bad timeout {timeout}")
        waiters.append(proc)
        self._block(proc, obj, timeout)
        return BLOCKED

    # -- semaphores ------------------------------------------------------------

    def _svc_CREATE_SEMAPHORE(self, proc, name, initial, maximum):
        if maximum <= 0 or not 0 <= initial <= maximum:
            raise IllegalRequest(f"bad semaphore bounds {initial}/{maximum}")
        return self._register(proc, Semaphore(name, initial, maximum), _OBJECT_BYTES)

    def _svc_WAIT_SEMAPHORE(self, proc, sid, timeout=INFINITE):
        sem = self._lookup(proc, Semaphore, sid)
        if sem.value > 0:
            sem.value -= 1
            return None
        return self._wait_on(proc, sem, sem.waiters, timeout)

    def _svc_SIGNAL_SEMAPHORE(self, proc, sid):
        sem = self._lookup(proc, Semaphore, sid)
        if sem.waiters:
            self._wake(sem.waiters.popleft())
        elif sem.value >= sem.max_value:
            raise Overflow(f"{sem!r} already at {sem.max_value}")
        else:
            sem.value += 1

    def _svc_GET_SEMAPHORE_ID(self, proc, name):
        return self._by_name(proc, Semaphore, name)

    def _svc_GET_SEMAPHORE_STATUS(self, proc, sid):
        sem = self._lookup(proc, Semaphore, sid)
        return SemaphoreStatus(sem.value, sem.max_value, len(sem.waiters))

    # -- events ----------------------------------------------------------------

    def _svc_CREATE_EVENT(self, proc, name):
        return self._register(proc, EventObject(name), _OBJECT_BYTES)

    def _svc_SET_EVENT(self, proc, eid):
        event = self._lookup(proc, EventObject, eid)
        event.up = True
        while event.waiters:
            self._wake(event.waiters.popleft())

    def _svc_RESET_EVENT(self, proc, eid):
        self._lookup(proc, EventObject, eid).up = False

    def _svc_WAIT_EVENT(self, proc, eid, timeout=INFINITE):
        event = self._lookup(proc, EventObject, eid)
        if event.up:
            return None
        return self._wait_on(proc, event, event.waiters, timeout)

    def _svc_GET_EVENT_ID(self, proc, name):
        return self._by_name(proc, EventObject, name)

    def _svc_GET_EVENT_STATUS(self, proc, eid):
        event = self._lookup(proc, EventObject, eid)
        return EventStatus("UP" if event.up else "DOWN", len(event.waiters))

    # -- mutexes ---------------------------------------------------------------

    def _svc_CREATE_MUTEX(self, proc, name):
        return self._register(proc, MutexObject(name), _OBJECT_BYTES)

    def _svc_ACQUIRE_MUTEX(self, proc, mid, timeout=INFINITE):
        mutex = self._lookup(proc, MutexObject, mid)
        if mutex.owner is None:
            mutex.owner = proc
            proc.owned.append(mutex)
            return None
        if mutex.owner is proc:
            raise InvalidState(f"{mutex!r} already held by the caller")
        return self._wait_on(proc, mutex, mutex.waiters, timeout)

    def _svc_RELEASE_MUTEX(self, proc, mid):
        mutex = self._lookup(proc, MutexObject, mid)
        if mutex.owner is not proc:
            raise NotOwner(f"{mutex!r} is not held by the caller")
        self._hand_off(mutex)

    def _svc_GET_MUTEX_ID(self, proc, name):
        return self._by_name(proc, MutexObject, name)

    def _hand_off(self, mutex: MutexObject) -> None:
        mutex.owner.owned.remove(mutex)
        if mutex.waiters:
            heir = mutex.waiters.popleft()
            mutex.owner = heir
            heir.owned.append(mutex)
            self._wake(heir)
        else:
            mutex.owner = None

    def _release_owned(self, proc) -> None:
        for mutex in list(proc.owned):
            self._hand_off(mutex)

    # -- blackboards -----------------------------------------------------------

    def _svc_CREATE_BLACKBOARD(self, proc, name, max_size):
        _positive(max_size=max_size)
        return self._register(proc, Blackboard(name, max_size), max_size)

    def _svc_DISPLAY_BLACKBOARD(self, proc, bid, message):
        board = self._lookup(proc, Blackboard, bid)
        _check_size(message, board.max_size)
        board.message = message
        while board.waiters:
            self._wake(board.waiters.popleft(), message)

    def _svc_READ_BLACKBOARD(self, proc, bid, timeout=INFINITE):
        board = self._lookup(proc, Blackboard, bid)
        if board.message is not None:
            return board.message
        return self._wait_on(proc, board, board.waiters, timeout)

    def _svc_CLEAR_BLACKBOARD(self, proc, bid):
        self._lookup(proc, Blackboard, bid).message = None

    def _svc_GET_BLACKBOARD_ID(self, proc, name):
        return self._by_name(proc, Blackboard, name)

    def _svc_GET_BLACKBOARD_STATUS(self, proc, bid):
        board = self._lookup(proc, Blackboard, bid)
        return BlackboardStatus(board.message is None, board.max_size, len(board.waiters))

    # -- buffers and queuing ports share the FIFO logic --------------------------

    def _fifo_send(self, proc, obj: IpcObject, fifo: _Fifo, message: bytes, timeout):
        if fifo.receivers:
            self._wake(fifo.receivers.popleft(), message)
        elif len(fifo.queue) < fifo.capacity:
            fifo.queue.append(message)
        else:
            result = self._wait_on(proc, obj, fifo.senders, timeout)
            proc.wait_payload = message
            return result
        return None

    def _fifo_receive(self, proc, obj: IpcObject, fifo: _Fifo, timeout):
        if fifo.queue:
            message = fifo.queue.popleft()
            if fifo.senders:
                sender = fifo.senders.popleft()
                fifo.queue.append(sender.wait_payload)
                self._wake(sender)
            return message
        return self._wait_on(proc, obj, fifo.receivers, timeout)

    def _svc_CREATE_BUFFER(self, proc, name, capacity, max_size):
        _positive(capacity=capacity, max_size=max_size)
        return self._register(proc, BufferQueue(name, capacity, max_size), capacity * max_size)

    def _svc_SEND_BUFFER(self, proc, bid, message, timeout=INFINITE):
        buf = self._lookup(proc, BufferQueue, bid)
        _check_size(message, buf.max_size)
        return self._fifo_send(proc, buf, buf.fifo, message, timeout)

    def _svc_RECEIVE_BUFFER(self, proc, bid, timeout=INFINITE):
        buf = self._lookup(proc, BufferQueue, bid)
        return self._fifo_receive(proc, buf, buf.fifo, timeout)

    def _svc_GET_BUFFER_ID(self, proc, name):
        return self._by_name(proc, BufferQueue, name)

    def _svc_GET_BUFFER_STATUS(self, proc, bid):
        buf = self._lookup(proc, BufferQueue, bid)
        fifo = buf.fifo
        return BufferStatus(len(fifo.queue), fifo.capacity, buf.max_size,
                            len(fifo.senders) + len(fifo.receivers))

    # -- ports -----------------------------------------------------------------

    def _channel_for(self, name: str, kind: PortKind, direction: PortDirection) -> Channel:
        channel = self.channels.get(name)
        if channel is None:
            # unwired port: a private channel nobody else can reach
            return Channel(kind, name if direction is PortDirection.SOURCE else "",
                           name if direction is PortDirection.DESTINATION else "")
        if channel.kind is not kind:
            raise IllegalRequest(f"port {name!r} is wired as a {channel.kind.value} channel")
        if channel.role_of(name) is not direction:
            raise DirectionMismatch(f"port {name!r} is a {channel.role_of(name).value} endpoint")
        return channel

    def _port(self, proc, cls: type, pid: int, direction: PortDirection) -> Port:
        port = self._lookup(proc, cls, pid)
        if port.direction is not direction:
            raise DirectionMismatch(f"{port!r} is a {port.direction.value} port")
        return port

    def _svc_CREATE_SAMPLING_PORT(self, proc, name, max_size, direction, refresh):
        _positive(max_size=max_size)
        if refresh < 0:
            raise IllegalRequest("refresh period must be non-negative")
        direction = PortDirection(direction)
        channel = self._channel_for(name, PortKind.SAMPLING, direction)
        port = SamplingPort(name, direction, max_size, refresh, channel)
        return self._register(proc, port, max_size)

    def _svc_WRITE_SAMPLING_MESSAGE(self, proc, pid, message):
        port = self._port(proc, SamplingPort, pid, PortDirection.SOURCE)
        _check_size(message, port.max_size)
        port.channel.message = message
        port.channel.stamp = self.clock.now()

    def _svc_READ_SAMPLING_MESSAGE(self, proc, pid):
        port = self._port(proc, SamplingPort, pid, PortDirection.DESTINATION)
        channel = port.channel
        if channel.message is None:
            raise NoMessage(f"{port!r} has never been written")
        return SamplingMessage(channel.message, self.clock.now() - channel.stamp <= port.refresh)

    def _svc_GET_SAMPLING_PORT_ID(self, proc, name):
        return self._by_name(proc, SamplingPort, name)

    def _svc_GET_SAMPLING_PORT_STATUS(self, proc, pid):
        port = self._lookup(proc, SamplingPort, pid)
        channel = port.channel
        has = channel.message is not None
        valid = has and self.clock.now() - channel.stamp <= port.refresh
        return SamplingPortStatus(port.direction, port.max_size, port.refresh, has, valid)

    def _svc_CREATE_QUEUING_PORT(self, proc, name, capacity, max_size, direction):
        _positive(capacity=capacity, max_size=max_size)
        direction = PortDirection(direction)
        channel = self._channel_for(name, PortKind.QUEUING, direction)
        port = QueuingPort(name, direction, max_size, capacity, channel)
        return self._register(proc, port, capacity * max_size)

    def _svc_SEND_QUEUING_MESSAGE(self, proc, pid, message, timeout=INFINITE):
        port = self._port(proc, QueuingPort, pid, PortDirection.SOURCE)
        _check_size(message, port.max_size)
        return self._fifo_send(proc, port, port.channel.fifo, message, timeout)

    def _svc_RECEIVE_QUEUING_MESSAGE(self, proc, pid, timeout=INFINITE):
        port = self._port(proc, QueuingPort, pid, PortDirection.DESTINATION)
        return self._fifo_receive(proc, port, port.channel.fifo, timeout)

    def _svc_GET_QUEUING_PORT_ID(self, proc, name):
        return self._by_name(proc, QueuingPort, name)

    def _svc_GET_QUEUING_PORT_STATUS(self, proc, pid):
        port = self._lookup(proc, QueuingPort, pid)
        fifo = port.channel.fifo
        waiting = len(fifo.senders) if port.direction is PortDirection.SOURCE else len(fifo.receivers)
        return QueuingPortStatus(port.direction, len(fifo.queue), fifo.capacity, port.max_size, waiting)
