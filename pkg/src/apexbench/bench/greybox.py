"""Grey-box applications: one executive mechanism per test.

Every runner takes a porting-layer backend and an iteration count, runs
its scenario and returns the measured series keyed by row name. In virtual
mode each sample is an exact sum of cost-table entries (see the notes on
each runner).
"""

from __future__ import annotations

from typing import Optional

from ..porting import PartitionLayout, SystemLayout, TaskSpec
from .datasets import BLOCK_SIZE, synthetic_block
from .workloads import checksum

WORKER_PRIORITY = 10


def _collect(perf, *names: str) -> dict:
    return {name: perf.series[name] for name in names}


def _metric(perf, name: str):
    ctx = perf.declare()
    perf.initialize(ctx, name)
    return ctx


def _single(perf, label: str, init, runtime_create: bool = False, until=None) -> None:
    perf.run(SystemLayout([PartitionLayout(label, init, runtime_create=runtime_create)],
                          until=until, label=label))


def run_process_switch(perf, iterations: int, n: int = 4) -> dict:
    """Sample = end of one process to the first instruction of the next.

    ``n`` equal-priority workers run back to back; a lowest-priority
    controller restarts them under a preemption lock for every further
    loop. Virtual value: the process switch cost.
    """
    if n < 2:
        raise ValueError("process switch needs at least two processes")
    ctx = _metric(perf, "Process Switch")
    handles: list[int] = []

    def worker(i: int):
        def body():
            if i > 0:
                perf.end(ctx)
            if i < n - 1:
                perf.start(ctx)
            return
            yield
        return body

    def controller():
        for _ in range(iterations - 1):
            yield from perf.lock_preemption()
            for h in handles:
                yield from perf.start_task(h)
            yield from perf.unlock_preemption()

    def init():
        for i in range(n):
            handles.append((yield from perf.create_task(
                TaskSpec(f"SWITCH_{i + 1}", worker(i), WORKER_PRIORITY))))
        yield from perf.create_task(TaskSpec("SWITCH_CTL", controller, 1))

    _single(perf, "PROCESS_SWITCH", init)
    perf.validate(ctx)
    return _collect(perf, "Process Switch")


def run_mutex_acquire_release(perf, iterations: int) -> dict:
    """Uncontended acquire and release timed separately.

    Two equal-priority processes take turns (each yields after releasing),
    so ownership alternates strictly. Virtual values: the acquire and
    release call costs.
    """
    acq = _metric(perf, "Mutex Acquire")
    rel = _metric(perf, "Mutex Release")
    owners: list[int] = []
    state = {}

    def measured():
        me = yield from perf.get_my_id()
        for _ in range(iterations):
            perf.start(acq)
            yield from perf.acquire_mutex(state["m"])
            perf.end(acq)
            owners.append(me)
            perf.start(rel)
            yield from perf.release_mutex(state["m"])
            perf.end(rel)
            yield from perf.yield_and_wait("delay", 0)

    def peer():
        me = yield from perf.get_my_id()
        for _ in range(iterations):
            yield from perf.acquire_mutex(state["m"])
            owners.append(me)
            yield from perf.release_mutex(state["m"])
            yield from perf.yield_and_wait("delay", 0)

    def init():
        state["m"] = yield from perf.create_mutex("MUTEX")
        yield from perf.create_task(TaskSpec("MUTEX_A", measured, WORKER_PRIORITY))
        yield from perf.create_task(TaskSpec("MUTEX_B", peer, WORKER_PRIORITY))

    _single(perf, "MUTEX", init)
    perf.validate(acq)
    perf.validate(rel)
    out = _collect(perf, "Mutex Acquire", "Mutex Release")
    out["owners"] = owners
    return out


def _mutex_round_trip(perf, iterations: int, name: str, anchor: str) -> dict:
    """Blocking hand-off loop between two equal-priority processes.

    A releases the mutex to B (who is blocked on it) and then blocks
    acquiring it back; B releases and blocks again. With ``anchor`` =
    "acquire" the sample spans A's blocked acquire
    (2 acquire + release + 2 switches); with "release" it spans the whole
    release-acquire loop (2 acquire + 2 release + 2 switches).
    """
    ctx = _metric(perf, name)
    total = iterations + 1  # first loop is a warm-up
    state = {}

    def measured():
        m = state["m"]
        yield from perf.acquire_mutex(m)
        yield from perf.yield_and_wait("delay", 0)  # let the peer block on m
        for i in range(total):
            timed = i > 0
            if timed and anchor == "release":
                perf.start(ctx)
            yield from perf.release_mutex(m)
            if timed and anchor == "acquire":
                perf.start(ctx)
            yield from perf.acquire_mutex(m)
            if timed:
                perf.end(ctx)
        yield from perf.release_mutex(m)

    def peer():
        m = state["m"]
        for _ in range(total + 1):
            yield from perf.acquire_mutex(m)
            yield from perf.release_mutex(m)

    def init():
        state["m"] = yield from perf.create_mutex("MUTEX")
        yield from perf.create_task(TaskSpec("LOOP_A", measured, WORKER_PRIORITY))
        yield from perf.create_task(TaskSpec("LOOP_B", peer, WORKER_PRIORITY))

    _single(perf, name.upper().replace(" ", "_"), init)
    perf.validate(ctx)
    return _collect(perf, name)


def run_mutex_acquire_2(perf, iterations: int) -> dict:
    return _mutex_round_trip(perf, iterations, "Mutex Acquire 2", "acquire")


def run_mutex_release_2(perf, iterations: int) -> dict:
    return _mutex_round_trip(perf, iterations, "Mutex Release 2", "release")


def run_mutex_workload(perf, iterations: int, block: Optional[bytes] = None) -> dict:
    """Critical section = acquire, checksum over a 1 KiB block, release."""
    ctx = _metric(perf, "Mutex Workload")
    block = block if block is not None else synthetic_block(0, BLOCK_SIZE)
    results: list[int] = []
    state = {}

    def section(timed: bool):
        def body():
            for _ in range(iterations):
                if timed:
                    perf.start(ctx)
                yield from perf.acquire_mutex(state["m"])
                value = checksum(block)
                yield from perf.work("checksum", len(block))
                yield from perf.release_mutex(state["m"])
                if timed:
                    perf.end(ctx)
                    results.append(value)
                yield from perf.yield_and_wait("delay", 0)
        return body

    def init():
        state["m"] = yield from perf.create_mutex("MUTEX")
        yield from perf.create_task(TaskSpec("WORK_A", section(True), WORKER_PRIORITY))
        yield from perf.create_task(TaskSpec("WORK_B", section(False), WORKER_PRIORITY))

    _single(perf, "MUTEX_WORKLOAD", init)
    perf.validate(ctx)
    out = _collect(perf, "Mutex Workload")
    out["checksums"] = results
    return out


def run_sem_wait_signal(perf, iterations: int) -> dict:
    """A high-priority signaller and a low-priority waiter in lock step.

    The waiter always finds the semaphore signalled, so neither timed call
    blocks. Virtual values: the wait and signal call costs.
    """
    wait = _metric(perf, "Sem Wait")
    signal = _metric(perf, "Sem Signal")
    state = {}

    def signaller():
        for _ in range(iterations):
            perf.start(signal)
            yield from perf.signal_semaphore(state["go"])
            perf.end(signal)
            yield from perf.yield_and_wait("semaphore", state["back"])

    def waiter():
        for _ in range(iterations):
            perf.start(wait)
            yield from perf.yield_and_wait("semaphore", state["go"])
            perf.end(wait)
            yield from perf.signal_semaphore(state["back"])

    def init():
        state["go"] = yield from perf.create_semaphore("GO", 0, 1)
        state["back"] = yield from perf.create_semaphore("BACK", 0, 1)
        yield from perf.create_task(TaskSpec("SEM_SIGNAL", signaller, 20))
        yield from perf.create_task(TaskSpec("SEM_WAIT", waiter, 10))

    _single(perf, "SEM", init)
    perf.validate(wait)
    perf.validate(signal)
    return _collect(perf, "Sem Wait", "Sem Signal")


PRIORITY_SEM_WAITERS = (3, 7, 5)


def run_priority_sem(perf, iterations: int, priorities=PRIORITY_SEM_WAITERS) -> dict:
    """Waiters of different priorities queue on one semaphore.

    A lowest-priority signaller releases them one at a time; the sample
    spans the signal up to the woken waiter's first instruction
    (signal + process switch). The wake order is the blocking order.
    """
    if len(priorities) < 3 or len(set(priorities)) != len(priorities):
        raise ValueError("priority sem needs at least three distinct priorities")
    ctx = _metric(perf, "Priority Sem")
    wake_order: list[int] = []
    state = {}

    def waiter(prio: int):
        def body():
            while True:
                yield from perf.yield_and_wait("semaphore", state["s"])
                perf.end(ctx)
                wake_order.append(prio)
        return body

    def signaller():
        for i, prio in enumerate(priorities):
            yield from perf.create_task(TaskSpec(f"WAITER_{i + 1}", waiter(prio), prio))
        for _ in range(iterations):
            perf.start(ctx)
            yield from perf.signal_semaphore(state["s"])

    def init():
        state["s"] = yield from perf.create_semaphore("PRIO", 0, len(priorities))
        yield from perf.create_task(TaskSpec("SIGNALLER", signaller, 1))

    _single(perf, "PRIORITY_SEM", init, runtime_create=True)
    perf.validate(ctx)
    out = _collect(perf, "Priority Sem")
    out["wake_order"] = wake_order
    return out


def _sem_round_trip(perf, iterations: int, name: str, anchor: str) -> dict:
    """Two equal-priority processes ping-pong over a pair of semaphores.

    Anchored at "signal" the sample is a full loop
    (2 signal + 2 wait + 2 switches); anchored at "wait" it spans the
    blocked wait (2 wait + signal + 2 switches).
    """
    ctx = _metric(perf, name)
    total = iterations + 1
    state = {}

    def measured():
        for i in range(total):
            timed = i > 0
            if timed and anchor == "signal":
                perf.start(ctx)
            yield from perf.signal_semaphore(state["ping"])
            if timed and anchor == "wait":
                perf.start(ctx)
            yield from perf.yield_and_wait("semaphore", state["pong"])
            if timed:
                perf.end(ctx)

    def peer():
        # never returns: its last wait must block like every other one
        while True:
            yield from perf.yield_and_wait("semaphore", state["ping"])
            yield from perf.signal_semaphore(state["pong"])

    def init():
        state["ping"] = yield from perf.create_semaphore("PING", 0, 1)
        state["pong"] = yield from perf.create_semaphore("PONG", 0, 1)
        yield from perf.create_task(TaskSpec("PING_A", measured, WORKER_PRIORITY))
        yield from perf.create_task(TaskSpec("PONG_B", peer, WORKER_PRIORITY))

    _single(perf, name.upper().replace(" ", "_"), init)
    perf.validate(ctx)
    return _collect(perf, name)


def run_sem_signal_2(perf, iterations: int) -> dict:
    return _sem_round_trip(perf, iterations, "Sem Signal 2", "signal")


def run_sem_wait_2(perf, iterations: int) -> dict:
    return _sem_round_trip(perf, iterations, "Sem Wait 2", "wait")


def run_sem_workload(perf, iterations: int, block: Optional[bytes] = None) -> dict:
    """Once past the (already signalled) wait, checksum a 1 KiB block."""
    ctx = _metric(perf, "Sem Workload")
    block = block if block is not None else synthetic_block(0, BLOCK_SIZE)
    results: list[int] = []
    state = {}

    def producer():
        for _ in range(iterations):
            yield from perf.signal_semaphore(state["data"])
            yield from perf.yield_and_wait("semaphore", state["done"])

    def consumer():
        for _ in range(iterations):
            perf.start(ctx)
            yield from perf.yield_and_wait("semaphore", state["data"])
            value = checksum(block)
            yield from perf.work("checksum", len(block))
            perf.end(ctx)
            results.append(value)
            yield from perf.signal_semaphore(state["done"])

    def init():
        state["data"] = yield from perf.create_semaphore("DATA", 0, 1)
        state["done"] = yield from perf.create_semaphore("DONE", 0, 1)
        yield from perf.create_task(TaskSpec("PRODUCER", producer, 20))
        yield from perf.create_task(TaskSpec("CONSUMER", consumer, 10))

    _single(perf, "SEM_WORKLOAD", init)
    perf.validate(ctx)
    out = _collect(perf, "Sem Workload")
    out["checksums"] = results
    return out


def run_partition_switch(perf, iterations: int) -> dict:
    """Gap between the last instruction of one window and the first of the next.

    A spinner in partition A restamps the sample start after every unit of
    work, so the open stamp is always its latest instruction. A periodic
    probe in partition B (period = major frame) closes the sample as soon
    as its window begins. Virtual value: the partition switch cost.
    """
    ctx = _metric(perf, "Partition Switch")
    done = {"n": 0}

    def spinner():
        while True:
            yield from perf.work("spin", 1)
            perf.restart(ctx)

    def probe():
        yield from perf.yield_and_wait("period")
        while done["n"] < iterations:
            # on a host clock partition A may not have run since the last sample
            if perf.is_open(ctx):
                perf.end(ctx)
                done["n"] += 1
            yield from perf.yield_and_wait("period")

    def init_a():
        yield from perf.create_task(TaskSpec("SPINNER", spinner, WORKER_PRIORITY))

    def init_b():
        frame = yield from perf.major_frame()
        yield from perf.create_task(TaskSpec("PROBE", probe, WORKER_PRIORITY, period=frame))

    perf.run(SystemLayout([PartitionLayout("PART_A", init_a), PartitionLayout("PART_B", init_b)],
                          until=lambda: done["n"] >= iterations, label="PARTITION_SWITCH"))
    perf.validate(ctx)
    return _collect(perf, "Partition Switch")
