"""Requests a process yields to the executive.

A process body is a generator; every APEX service is invoked by yielding
the :class:`Call` built here and receiving the service's result back::

    def body():
        sem = yield calls.get_semaphore_id("S1")
        yield calls.wait_semaphore(sem, timeout=50)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Generator, Optional

INFINITE = -1


@dataclass(frozen=True)
class Call:
    service: str
    args: tuple = ()


@dataclass(frozen=True)
class ProcessAttributes:
    name: str
    entry: Callable[[], Generator[Call, Any, Any]]
    priority: int = 1
    period: Optional[int] = None
    deadline: Optional[int] = None
    stack_budget: int = 4096


# -- process management -------------------------------------------------------

def create_process(attrs: ProcessAttributes) -> Call:
    return Call("CREATE_PROCESS", (attrs,))


def start(pid: int) -> Call:
    return Call("START", (pid,))


def stop(pid: int) -> Call:
    return Call("STOP", (pid,))


def stop_self() -> Call:
    return Call("STOP_SELF")


def set_priority(pid: int, priority: int) -> Call:
    return Call("SET_PRIORITY", (pid, priority))


def get_my_id() -> Call:
    return Call("GET_MY_ID")


def get_process_id(name: str) -> Call:
    return Call("GET_PROCESS_ID", (name,))


def get_process_status(pid: int) -> Call:
    return Call("GET_PROCESS_STATUS", (pid,))


def get_partition_status() -> Call:
    return Call("GET_PARTITION_STATUS")


def set_partition_mode(mode: str) -> Call:
    return Call("SET_PARTITION_MODE", (mode,))


def lock_preemption() -> Call:
    return Call("LOCK_PREEMPTION")


def unlock_preemption() -> Call:
    return Call("UNLOCK_PREEMPTION")


def timed_wait(delay: int) -> Call:
    """Suspend for ``delay`` ticks; ``0`` yields to equal-priority peers."""
    return Call("TIMED_WAIT", (delay,))


def periodic_wait() -> Call:
    return Call("PERIODIC_WAIT")


def get_current_ticks() -> Call:
    return Call("GET_CURRENT_TICKS")


def raise_application_error(code: str = "APPLICATION_ERROR") -> Call:
    return Call("RAISE_APPLICATION_ERROR", (code,))


def work(kernel: str, units: int = 1) -> Call:
    """Charge the virtual cost of ``units`` of a workload kernel."""
    return Call("WORK", (kernel, units))


def allocate(nbytes: int) -> Call:
    return Call("ALLOCATE", (nbytes,))


def free(handle: int) -> Call:
    return Call("FREE", (handle,))


# -- semaphores ---------------------------------------------------------------

def create_semaphore(name: str, initial: int, maximum: int) -> Call:
    return Call("CREATE_SEMAPHORE", (name, initial, maximum))


def wait_semaphore(sid: int, timeout: int = INFINITE) -> Call:
    return Call("WAIT_SEMAPHORE", (sid, timeout))


def signal_semaphore(sid: int) -> Call:
    return Call("SIGNAL_SEMAPHORE", (sid,))


def get_semaphore_id(name: str) -> Call:
    return Call("GET_SEMAPHORE_ID", (name,))


def get_semaphore_status(sid: int) -> Call:
    return Call("GET_SEMAPHORE_STATUS", (sid,))


# -- events -------------------------------------------------------------------

def create_event(name: str) -> Call:
    return Call("CREATE_EVENT", (name,))


def set_event(eid: int) -> Call:
    return Call("SET_EVENT", (eid,))


def reset_event(eid: int) -> Call:
    return Call("RESET_EVENT", (eid,))


def wait_event(eid: int, timeout: int = INFINITE) -> Call:
    return Call("WAIT_EVENT", (eid, timeout))


def get_event_id(name: str) -> Call:
    return Call("GET_EVENT_ID", (name,))


def get_event_status(eid: int) -> Call:
    return Call("GET_EVENT_STATUS", (eid,))


# -- mutexes ------------------------------------------------------------------

def create_mutex(name: str) -> Call:
    return Call("CREATE_MUTEX", (name,))


def acquire_mutex(mid: int, timeout: int = INFINITE) -> Call:
    return Call("ACQUIRE_MUTEX", (mid, timeout))


def release_mutex(mid: int) -> Call:
    return Call("RELEASE_MUTEX", (mid,))


def get_mutex_id(name: str) -> Call:
    return Call("GET_MUTEX_ID", (name,))


# -- blackboards --------------------------------------------------------------

def create_blackboard(name: str, max_size: int) -> Call:
    return Call("CREATE_BLACKBOARD", (name, max_size))


def display_blackboard(bid: int, message: bytes) -> Call:
    return Call("DISPLAY_BLACKBOARD", (bid, bytes(message)))


def read_blackboard(bid: int, timeout: int = INFINITE) -> Call:
    return Call("READ_BLACKBOARD", (bid, timeout))


def clear_blackboard(bid: int) -> Call:
    return Call("CLEAR_BLACKBOARD", (bid,))


def get_blackboard_id(name: str) -> Call:
    return Call("GET_BLACKBOARD_ID", (name,))


# -- buffers ------------------------------------------------------------------

def create_buffer(name: str, capacity: int, max_size: int) -> Call:
    return Call("CREATE_BUFFER", (name, capacity, max_size))


def send_buffer(bid: int, message: bytes, timeout: int = INFINITE) -> Call:
    return Call("SEND_BUFFER", (bid, bytes(message), timeout))


def receive_buffer(bid: int, timeout: int = INFINITE) -> Call:
    return Call("RECEIVE_BUFFER", (bid, timeout))


def get_buffer_id(name: str) -> Call:
    return Call("GET_BUFFER_ID", (name,))


def get_buffer_status(bid: int) -> Call:
    return Call("GET_BUFFER_STATUS", (bid,))


# -- ports --------------------------------------------------------------------

def create_sampling_port(name: str, max_size: int, direction: str, refresh: int) -> Call:
    return Call("CREATE_SAMPLING_PORT", (name, max_size, direction, refresh))


def write_sampling_message(pid: int, message: bytes) -> Call:
    return Call("WRITE_SAMPLING_MESSAGE", (pid, bytes(message)))


def read_sampling_message(pid: int) -> Call:
    return Call("READ_SAMPLING_MESSAGE", (pid,))


def get_sampling_port_id(name: str) -> Call:
    return Call("GET_SAMPLING_PORT_ID", (name,))


def get_sampling_port_status(pid: int) -> Call:
    return Call("GET_SAMPLING_PORT_STATUS", (pid,))


def create_queuing_port(name: str, capacity: int, max_size: int, direction: str) -> Call:
    return Call("CREATE_QUEUING_PORT", (name, capacity, max_size, direction))


def send_queuing_message(pid: int, message: bytes, timeout: int = INFINITE) -> Call:
    return Call("SEND_QUEUING_MESSAGE", (pid, bytes(message), timeout))


def receive_queuing_message(pid: int, timeout: int = INFINITE) -> Call:
    return Call("RECEIVE_QUEUING_MESSAGE", (pid, timeout))


def get_queuing_port_id(name: str) -> Call:
    return Call("GET_QUEUING_PORT_ID", (name,))


def get_queuing_port_status(pid: int) -> Call:
    return Call("GET_QUEUING_PORT_STATUS", (pid,))
