"""Randomized executive scenarios checked against reference models.

Every scenario takes a ``random.Random`` and returns ``(observed, expected)``
so the same generators back the hypothesis tests and the acceptance sweep.
Arrival order is made unambiguous by spacing start delays further apart
than any single call costs under ``flat_costs``.
"""

from __future__ import annotations

import random

from apexbench.errors import TimedOut
from apexbench.kernel import calls
from apexbench.kernel.config import (
    ChannelSpec,
    PartitionDescriptor,
    PartitionSchedule,
    PortKind,
    ScheduleWindow,
    SystemConfig,
)
from apexbench.kernel.core import boot_system

from kit import flat_costs, single, spawn
from oracles import FifoReference, OneSlotReference

SPACING = 10
# absolute tick by which every scenario's init phase has finished
SETTLED = 200


def _arrivals(rng: random.Random, n: int) -> list[int]:
    slots = rng.sample(range(1, 4 * n + 1), n)
    return [SETTLED + s * SPACING for s in slots]


def _sleep_until(tick: int):
    now = yield calls.get_current_ticks()
    yield calls.timed_wait(max(0, tick - now))


def _wakes_from(kernel, obj: str) -> list:
    """WAKE events of processes whose last BLOCK was on ``obj`` (e.g. ``semaphore:S``)."""
    blocked_on = {}
    out = []
    for ev in kernel.trace:
        if ev.kind == "BLOCK":
            blocked_on[ev.process] = ev.detail
        elif ev.kind == "WAKE" and blocked_on.get(ev.process) == obj:
            out.append(ev)
    return out


def semaphore_scenario(rng: random.Random):
    """Waiters queue on an empty semaphore and are signalled one by one."""
    n = rng.randint(2, 6)
    delays = _arrivals(rng, n)
    pids = {}
    waiting_after_signal = []

    def waiter(i):
        def body():
            sid = yield calls.get_semaphore_id("S")
            yield from _sleep_until(delays[i])
            yield calls.wait_semaphore(sid)
        return body

    def signaller():
        sid = yield calls.get_semaphore_id("S")
        yield from _sleep_until(max(delays) + SPACING)
        for _ in range(n):
            yield calls.signal_semaphore(sid)
            waiting_after_signal.append((yield calls.get_semaphore_status(sid)).waiting)

    def init():
        yield calls.create_semaphore("S", 0, n)
        for i in range(n):
            pids[i] = yield from spawn(f"W{i}", waiter(i), rng.randint(2, 9))
        yield from spawn("SIG", signaller, 1)

    kernel = single(init, costs=flat_costs())
    kernel.run()
    ref = FifoReference()
    for i in sorted(range(n), key=delays.__getitem__):
        ref.push(pids[i])
    expected = [ref.pop() for _ in range(n)]
    observed = [ev.process for ev in _wakes_from(kernel, "semaphore:S")]
    return (observed, waiting_after_signal), (expected, list(range(n - 1, -1, -1)))


def mutex_scenario(rng: random.Random):
    """Contenders queue behind a holder; ownership passes in arrival order."""
    n = rng.randint(2, 6)
    delays = _arrivals(rng, n)
    hold = max(delays) + SPACING
    owners = []

    def holder():
        mid = yield calls.get_mutex_id("M")
        yield calls.acquire_mutex(mid)
        owners.append("H")
        yield from _sleep_until(hold)
        yield calls.release_mutex(mid)

    def contender(i):
        def body():
            mid = yield calls.get_mutex_id("M")
            yield from _sleep_until(delays[i])
            yield calls.acquire_mutex(mid)
            owners.append(i)
            yield calls.work("spin", rng.randint(1, 5))
            yield calls.release_mutex(mid)
        return body

    def init():
        yield calls.create_mutex("M")
        yield from spawn("H", holder, 10)
        for i in range(n):
            yield from spawn(f"C{i}", contender(i), rng.randint(1, 9))

    single(init, costs=flat_costs()).run()
    ref = FifoReference()
    ref.push("H")
    for i in sorted(range(n), key=delays.__getitem__):
        ref.push(i)
    return owners, [ref.pop() for _ in range(n + 1)]


def event_scenario(rng: random.Random):
    """One SET_EVENT releases every waiter at the same tick."""
    n = rng.randint(1, 6)
    delays = _arrivals(rng, n)
    pids = []
    seen = {}

    def waiter(i):
        def body():
            eid = yield calls.get_event_id("E")
            yield from _sleep_until(delays[i])
            yield calls.wait_event(eid)
        return body

    def setter():
        eid = yield calls.get_event_id("E")
        yield from _sleep_until(max(delays) + SPACING)
        seen["before"] = (yield calls.get_event_status(eid)).waiting
        yield calls.lock_preemption()
        yield calls.set_event(eid)
        seen["after"] = (yield calls.get_event_status(eid)).waiting
        yield calls.unlock_preemption()

    def init():
        yield calls.create_event("E")
        for i in range(n):
            pids.append((yield from spawn(f"W{i}", waiter(i), rng.randint(2, 9))))
        yield from spawn("SET", setter, 1)

    kernel = single(init, costs=flat_costs())
    kernel.run()
    wakes = _wakes_from(kernel, "event:E")
    wake_ticks = {ev.tick for ev in wakes}
    woken = sorted(ev.process for ev in wakes)
    return ((seen["before"], seen["after"]), len(wake_ticks), woken), ((n, 0), 1, sorted(pids))


def buffer_scenario(rng: random.Random):
    """Senders overflow a small buffer; delivery follows send order."""
    n = rng.randint(2, 8)
    capacity = rng.randint(1, 3)
    delays = _arrivals(rng, n)
    received = []

    def sender(i):
        def body():
            bid = yield calls.get_buffer_id("B")
            yield from _sleep_until(delays[i])
            yield calls.send_buffer(bid, bytes([i]))
        return body

    def receiver():
        bid = yield calls.get_buffer_id("B")
        yield from _sleep_until(max(delays) + SPACING)
        for _ in range(n):
            received.append((yield calls.receive_buffer(bid))[0])
            yield calls.work("spin", rng.randint(1, 3))

    def init():
        yield calls.create_buffer("B", capacity, 4)
        for i in range(n):
            yield from spawn(f"S{i}", sender(i), rng.randint(1, 9))
        yield from spawn("R", receiver, rng.randint(1, 9))

    single(init, costs=flat_costs()).run()
    ref = FifoReference()
    for i in sorted(range(n), key=delays.__getitem__):
        ref.push(i)
    return received, [ref.pop() for _ in range(n)]


def _two_partition_config(entry1, entry2, kind: PortKind, window: int = 400) -> SystemConfig:
    return SystemConfig(
        partitions=[PartitionDescriptor(1, "SRC", entry=entry1), PartitionDescriptor(2, "DST", entry=entry2)],
        schedule=PartitionSchedule(2 * window, [ScheduleWindow(1, 0, window), ScheduleWindow(2, window, window)]),
        cost_table=flat_costs(partition_switch_cost=5),
        channels=[ChannelSpec(kind, "OUT", "IN")],
    )


def queuing_scenario(rng: random.Random):
    """Cross-partition queue with non-blocking sends; full sends are dropped."""
    capacity = rng.randint(1, 4)
    frames = rng.randint(2, 5)
    batches = [[rng.randrange(256) for _ in range(rng.randint(0, 6))] for _ in range(frames)]
    accepted, received = [], []

    def producer():
        port = yield calls.get_queuing_port_id("OUT")
        for batch in batches:
            for value in batch:
                try:
                    yield calls.send_queuing_message(port, bytes([value]), 0)
                    accepted.append(value)
                except TimedOut:
                    pass
            yield calls.periodic_wait()

    def consumer():
        port = yield calls.get_queuing_port_id("IN")
        for _ in range(frames):
            while True:
                try:
                    received.append((yield calls.receive_queuing_message(port, 0))[0])
                except TimedOut:
                    break
            yield calls.periodic_wait()

    def init1():
        yield calls.create_queuing_port("OUT", capacity, 1, "SOURCE")
        yield from spawn("PROD", producer, period=800)

    def init2():
        yield calls.create_queuing_port("IN", capacity, 1, "DESTINATION")
        yield from spawn("CONS", consumer, period=800)

    kernel = boot_system(_two_partition_config(init1, init2, PortKind.QUEUING))
    kernel.run(max_ticks=800 * (frames + 1))
    ref = FifoReference()
    for value in accepted:
        ref.push(value)
    expected = [ref.pop() for _ in range(len(accepted))]
    # the consumer drains every frame, so a batch that fits is never refused
    dropped = sum(len(b) for b in batches) - len(accepted)
    fits = all(len(b) <= capacity for b in batches)
    return (received, fits and dropped > 0), (expected, False)


def sampling_scenario(rng: random.Random):
    """Source overwrites a sampling port; each read sees the latest write."""
    frames = rng.randint(2, 6)
    batches = [[rng.randrange(1, 256) for _ in range(rng.randint(0, 4))] for _ in range(frames)]
    reads = []

    def writer():
        port = yield calls.get_sampling_port_id("OUT")
        for batch in batches:
            for value in batch:
                yield calls.write_sampling_message(port, bytes([value]))
            yield calls.periodic_wait()

    def reader():
        port = yield calls.get_sampling_port_id("IN")
        for _ in range(frames):
            status = yield calls.get_sampling_port_status(port)
            if status.has_message:
                reads.append((yield calls.read_sampling_message(port)).message[0])
            else:
                reads.append(None)
            yield calls.periodic_wait()

    def init1():
        yield calls.create_sampling_port("OUT", 1, "SOURCE", 10**6)
        yield from spawn("W", writer, period=800)

    def init2():
        yield calls.create_sampling_port("IN", 1, "DESTINATION", 10**6)
        yield from spawn("R", reader, period=800)

    boot = boot_system(_two_partition_config(init1, init2, PortKind.SAMPLING))
    boot.run(max_ticks=800 * (frames + 1))
    slot = OneSlotReference()
    expected = []
    for batch in batches:
        for value in batch:
            slot.write(value)
        expected.append(slot.read())
    return reads, expected


def blackboard_scenario(rng: random.Random):
    """Random display/clear/read script against a one-slot model."""
    script = [rng.choice(["display", "display", "read", "clear"]) for _ in range(rng.randint(1, 20))]
    payloads = [bytes([rng.randrange(256)]) * rng.randint(1, 8) for _ in script]
    observed = []

    def body():
        bid = yield calls.get_blackboard_id("BB")
        for op, payload in zip(script, payloads):
            if op == "display":
                yield calls.display_blackboard(bid, payload)
            elif op == "clear":
                yield calls.clear_blackboard(bid)
            else:
                try:
                    observed.append((yield calls.read_blackboard(bid, 0)))
                except TimedOut:
                    observed.append(None)

    def init():
        yield calls.create_blackboard("BB", 8)
        yield from spawn("P", body)

    single(init, costs=flat_costs()).run()
    slot = OneSlotReference()
    expected = []
    for op, payload in zip(script, payloads):
        if op == "display":
            slot.write(payload)
        elif op == "clear":
            slot.write(None)
        else:
            expected.append(slot.read())
    return observed, expected


IPC_SCENARIOS = {
    "semaphore FIFO wake order": semaphore_scenario,
    "mutex handoff order": mutex_scenario,
    "event broadcast": event_scenario,
    "buffer FIFO": buffer_scenario,
    "queuing FIFO": queuing_scenario,
    "sampling overwrite": sampling_scenario,
    "blackboard overwrite": blackboard_scenario,
}


# -- partition isolation ----------------------------------------------------------

def random_schedule(rng: random.Random, switch_cost: int = 50) -> SystemConfig:
    """2-4 partitions, windows of random length with optional gaps, busy processes."""
    n_parts = rng.randint(2, 4)
    windows, t = [], 0
    order = [rng.randint(1, n_parts) for _ in range(rng.randint(n_parts, 2 * n_parts))]
    order[:n_parts] = rng.sample(range(1, n_parts + 1), n_parts)
    for pid in order:
        t += rng.choice([0, 0, rng.randint(1, 200)])
        length = rng.randint(switch_cost + 50, 1500)
        windows.append(ScheduleWindow(pid, t, length))
        t += length
    frame = t + rng.choice([0, rng.randint(1, 300)])

    def entry(part_id):
        def init():
            for k in range(rng.randint(1, 3)):
                style = rng.choice(["spin", "sleep", "periodic", "pingpong"])
                yield from spawn(f"T{part_id}_{k}", _process_body(style, rng.randint(1, 400), frame),
                                 rng.randint(1, 9), period=frame if style == "periodic" else None)
        return init

    partitions = [PartitionDescriptor(i, f"P{i}", entry=entry(i)) for i in range(1, n_parts + 1)]
    return SystemConfig(partitions, PartitionSchedule(frame, windows),
                        cost_table=flat_costs(partition_switch_cost=switch_cost, process_switch_cost=3))


def _process_body(style: str, amount: int, frame: int):
    def body():
        if style == "pingpong":
            try:
                sid = yield calls.create_semaphore("PP", 0, 1)
            except Exception:
                sid = yield calls.get_semaphore_id("PP")
        while True:
            if style == "spin":
                yield calls.work("spin", amount)
            elif style == "sleep":
                yield calls.work("spin", amount // 4 + 1)
                yield calls.timed_wait(amount)
            elif style == "periodic":
                yield calls.work("spin", min(amount, frame // 8 + 1))
                yield calls.periodic_wait()
            else:
                try:
                    yield calls.wait_semaphore(sid, amount)
                except TimedOut:
                    pass
                yield calls.work("spin", amount // 2 + 1)
                try:
                    yield calls.signal_semaphore(sid)
                except Exception:
                    pass
    return body


def isolation_violations(kernel, frames: int) -> list[str]:
    """Events outside their owner's window, plus frames whose window pattern drifts."""
    problems = []
    for ev in kernel.trace:
        if ev.partition is None:
            continue
        owners = {kernel.window_at(ev.tick)[0]}
        if ev.tick > 0:
            owners.add(kernel.window_at(ev.tick - 1)[0])
        if ev.partition not in owners:
            problems.append(f"{ev.line()} outside window")
        if ev.kind in ("DISPATCH", "CALL", "BLOCK", "COMPLETE") and ev.process is not None:
            proc = kernel.processes.get(ev.process)
            if proc is not None and proc.partition_id != ev.partition:
                problems.append(f"{ev.line()} runs foreign process")
    frame = kernel.config.schedule.major_frame_ticks
    patterns = [[] for _ in range(frames)]
    prev = None
    for ev in kernel.trace:
        if ev.kind != "WINDOW":
            prev = ev
            continue
        # a switched-to window opens where the switch started, before its cost is paid
        opened = prev.tick if prev is not None and prev.kind == "PARTITION_SWITCH" else ev.tick
        prev = ev
        k, offset = divmod(opened, frame)
        if k >= frames:
            break
        patterns[k].append((offset, int(ev.detail)))
    # a frame that opens in the partition the previous one ended in emits no WINDOW at 0
    for k in range(1, frames):
        starts_at_zero = patterns[k] and patterns[k][0][0] == 0
        if not starts_at_zero and patterns[0] and patterns[0][0][0] == 0 and patterns[k - 1]:
            patterns[k].insert(0, (0, patterns[k - 1][-1][1]))
    for k in range(1, frames):
        if patterns[k] != patterns[0]:
            problems.append(f"frame {k} windows {patterns[k]} != frame 0 {patterns[0]}")
    return problems


def isolation_scenario(rng: random.Random, frames: int = 10) -> list[str]:
    config = random_schedule(rng)
    kernel = boot_system(config)
    kernel.run(max_ticks=config.schedule.major_frame_ticks * frames)
    return isolation_violations(kernel, frames)
