import random

import pytest
from hypothesis import given, settings, strategies as st

from apexbench.errors import (
    DirectionMismatch,
    MessageTooLong,
    NoMessage,
    NotOwner,
    Overflow,
    TimedOut,
    UnknownId,
)
from apexbench.kernel import calls
from apexbench.kernel.config import ChannelSpec, PortKind
from apexbench.kernel.core import TraceEvent, boot_system

from kit import events, flat_costs, single, spawn
from scenarios import IPC_SCENARIOS, _two_partition_config, isolation_scenario, isolation_violations, random_schedule


def run_single(body, costs=None, **kw):
    def init():
        yield from spawn("P", body)

    kernel = single(init, costs=costs or flat_costs(), **kw)
    kernel.run()
    return kernel


# -- semaphores ---------------------------------------------------------------------

def test_semaphore_wait_decrements():
    log = []

    def body():
        sid = yield calls.create_semaphore("S", 1, 1)
        yield calls.wait_semaphore(sid)
        log.append((yield calls.get_semaphore_status(sid)).value)
        with pytest.raises(Overflow):
            yield calls.signal_semaphore(sid)
            yield calls.signal_semaphore(sid)
        log.append("done")

    run_single(body)
    assert log == [0, "done"]


def test_semaphore_wakes_in_block_order():
    woke = []

    def waiter(tag):
        def run():
            sid = yield calls.get_semaphore_id("S")
            yield calls.wait_semaphore(sid)
            woke.append(tag)
        return run

    def signaller():
        sid = yield calls.get_semaphore_id("S")
        for _ in range(3):
            yield calls.signal_semaphore(sid)

    def init():
        yield calls.create_semaphore("S", 0, 3)
        for tag in "ABC":
            yield from spawn(tag, waiter(tag), 5)
        yield from spawn("SIG", signaller, 1)

    single(init).run()
    assert woke == ["A", "B", "C"]


def test_semaphore_timeout_after_exact_ticks():
    out = {}

    def body():
        sid = yield calls.create_semaphore("S", 0, 1)
        out["start"] = yield calls.get_current_ticks()
        try:
            yield calls.wait_semaphore(sid, 50)
        except TimedOut:
            out["end"] = yield calls.get_current_ticks()

    kernel = run_single(body, costs=flat_costs(base_cost=0))
    assert out["end"] - out["start"] == 50
    assert len(events(kernel, "TIMEOUT")) == 1


def test_unknown_semaphore_id():
    seen = []

    def body():
        try:
            yield calls.wait_semaphore(42)
        except UnknownId:
            seen.append(True)

    run_single(body)
    assert seen == [True]


@given(st.lists(st.sampled_from(["wait", "signal"]), max_size=30), st.integers(0, 3))
def test_semaphore_conservation(ops, initial):
    """Successful non-blocking waits minus signals equals the drop in value."""
    record = {"waits": 0, "signals": 0}

    def body():
        sid = yield calls.create_semaphore("S", initial, 3)
        for op in ops:
            try:
                if op == "wait":
                    yield calls.wait_semaphore(sid, 0)
                    record["waits"] += 1
                else:
                    yield calls.signal_semaphore(sid)
                    record["signals"] += 1
            except (TimedOut, Overflow):
                pass
        record["value"] = (yield calls.get_semaphore_status(sid)).value

    run_single(body)
    assert record["waits"] - record["signals"] == initial - record["value"]


# -- events --------------------------------------------------------------------

def test_event_up_returns_immediately_and_reset_blocks():
    log = []

    def body():
        eid = yield calls.create_event("E")
        yield calls.set_event(eid)
        yield calls.wait_event(eid)
        log.append((yield calls.get_event_status(eid)).state)
        yield calls.reset_event(eid)
        try:
            yield calls.wait_event(eid, 5)
        except TimedOut:
            log.append("blocked")

    run_single(body)
    assert log == ["UP", "blocked"]


def test_event_releases_all_waiters_at_one_tick():
    def waiter():
        eid = yield calls.get_event_id("E")
        yield calls.wait_event(eid)

    def setter():
        eid = yield calls.get_event_id("E")
        yield calls.set_event(eid)

    def init():
        yield calls.create_event("E")
        for i in range(3):
            yield from spawn(f"W{i}", waiter, 5)
        yield from spawn("SET", setter, 1)

    kernel = single(init)
    kernel.run()
    wakes = events(kernel, "WAKE")
    assert len(wakes) == 3 and len({ev.tick for ev in wakes}) == 1


# -- mutexes ----------------------------------------------------------------------

def test_mutex_handoff_and_foreign_release():
    log = []

    def a():
        mid = yield calls.get_mutex_id("M")
        yield calls.acquire_mutex(mid)
        yield calls.timed_wait(1000)
        yield calls.release_mutex(mid)

    def b():
        mid = yield calls.get_mutex_id("M")
        try:
            yield calls.release_mutex(mid)
        except NotOwner:
            log.append("not owner")
        yield calls.acquire_mutex(mid)
        c_pid = yield calls.get_process_id("C")
        log.append(("B owns", (yield calls.get_process_status(c_pid)).state.name))
        yield calls.release_mutex(mid)

    def c():
        mid = yield calls.get_mutex_id("M")
        yield calls.timed_wait(100)
        yield calls.acquire_mutex(mid)
        log.append("C owns")

    def init():
        yield calls.create_mutex("M")
        yield from spawn("A", a, 9)
        yield from spawn("B", b, 5)
        yield from spawn("C", c, 7)

    single(init, costs=flat_costs()).run()
    assert log == ["not owner", ("B owns", "WAITING"), "C owns"]


# -- blackboards --------------------------------------------------------------------

def test_blackboard_read_is_non_consuming_and_overwritten():
    log = []

    def body():
        bid = yield calls.create_blackboard("BB", 4)
        yield calls.display_blackboard(bid, b"x")
        log.append((yield calls.read_blackboard(bid)))
        log.append((yield calls.read_blackboard(bid)))
        yield calls.display_blackboard(bid, b"a")
        yield calls.display_blackboard(bid, b"b")
        log.append((yield calls.read_blackboard(bid)))
        with pytest.raises(MessageTooLong):
            yield calls.display_blackboard(bid, b"12345")
        yield calls.clear_blackboard(bid)
        try:
            yield calls.read_blackboard(bid, 10)
        except TimedOut:
            log.append("timeout")

    run_single(body)
    assert log == [b"x", b"x", b"b", "timeout"]


def test_blackboard_display_releases_readers():
    got = []

    def reader():
        bid = yield calls.get_blackboard_id("BB")
        got.append((yield calls.read_blackboard(bid)))

    def writer():
        bid = yield calls.get_blackboard_id("BB")
        yield calls.display_blackboard(bid, b"hi")

    def init():
        yield calls.create_blackboard("BB", 8)
        yield from spawn("R1", reader, 5)
        yield from spawn("R2", reader, 5)
        yield from spawn("W", writer, 1)

    single(init).run()
    assert got == [b"hi", b"hi"]


# -- buffers ---------------------------------------------------------------------------

def test_buffer_fifo_and_blocked_sender():
    log = []

    def body():
        bid = yield calls.create_buffer("B", 3, 4)
        for m in (b"m1", b"m2", b"m3"):
            yield calls.send_buffer(bid, m)
        for _ in range(3):
            log.append((yield calls.receive_buffer(bid)))
        try:
            yield calls.receive_buffer(bid, 0)
        except TimedOut:
            log.append("empty")

    run_single(body)
    assert log == [b"m1", b"m2", b"m3", "empty"]


def test_full_buffer_sender_unblocked_by_receive():
    log = []

    def sender():
        bid = yield calls.get_buffer_id("B")
        yield calls.send_buffer(bid, b"m1")
        yield calls.send_buffer(bid, b"m2")
        log.append("sender resumed")

    def receiver():
        bid = yield calls.get_buffer_id("B")
        log.append((yield calls.receive_buffer(bid)))
        log.append((yield calls.get_buffer_status(bid)).messages)
        log.append((yield calls.receive_buffer(bid)))

    def init():
        yield calls.create_buffer("B", 1, 4)
        yield from spawn("S", sender, 5)
        yield from spawn("R", receiver, 1)

    single(init).run()
    # the woken sender outranks the receiver and runs first
    assert log == ["sender resumed", b"m1", 1, b"m2"]


# -- ports -------------------------------------------------------------------------------

def _port_system(entry1, entry2, kind):
    return boot_system(_two_partition_config(entry1, entry2, kind))


def test_sampling_port_latest_value_and_validity():
    reads = []

    def writer():
        port = yield calls.get_sampling_port_id("OUT")
        yield calls.write_sampling_message(port, b"1")
        yield calls.write_sampling_message(port, b"2")

    def reader():
        port = yield calls.get_sampling_port_id("IN")
        reads.append((yield calls.read_sampling_message(port)))
        yield calls.timed_wait(800)
        reads.append((yield calls.read_sampling_message(port)).valid)

    def init1():
        yield calls.create_sampling_port("OUT", 4, "SOURCE", 500)
        yield from spawn("W", writer)

    def init2():
        yield calls.create_sampling_port("IN", 4, "DESTINATION", 500)
        yield from spawn("R", reader)

    _port_system(init1, init2, PortKind.SAMPLING).run(max_ticks=4000)
    assert reads[0].message == b"2" and reads[0].valid
    assert reads[1] is False


def test_sampling_validity_boundary():
    out = {}

    def body():
        src = yield calls.create_sampling_port("LOOP_OUT", 4, "SOURCE", 0)
        dst = yield calls.create_sampling_port("LOOP_IN", 4, "DESTINATION", 20)
        try:
            yield calls.read_sampling_message(dst)
        except NoMessage:
            out["none"] = True
        try:
            yield calls.read_sampling_message(src)
        except DirectionMismatch:
            out["direction"] = True
        yield calls.write_sampling_message(src, b"v")
        stamp = yield calls.get_current_ticks()
        out["fresh"] = (yield calls.read_sampling_message(dst)).valid
        now = yield calls.get_current_ticks()
        # the read completes one tick after the wait, at stamp + refresh + 1
        yield calls.timed_wait(stamp + 20 - now)
        out["stale"] = (yield calls.read_sampling_message(dst)).valid

    run_single(body, channels=[ChannelSpec(PortKind.SAMPLING, "LOOP_OUT", "LOOP_IN")])
    assert out == {"none": True, "direction": True, "fresh": True, "stale": False}


def test_queuing_port_order_full_and_status():
    got = []
    status = {}

    def producer():
        port = yield calls.get_queuing_port_id("OUT")
        for m in (b"1", b"2"):
            yield calls.send_queuing_message(port, m)
        status["after two"] = (yield calls.get_queuing_port_status(port)).messages
        for m in (b"3", b"4"):
            yield calls.send_queuing_message(port, m)
        try:
            yield calls.send_queuing_message(port, b"5", 0)
        except TimedOut:
            status["full"] = True

    def consumer():
        port = yield calls.get_queuing_port_id("IN")
        for _ in range(4):
            got.append((yield calls.receive_queuing_message(port)))

    def init1():
        yield calls.create_queuing_port("OUT", 4, 1, "SOURCE")
        yield from spawn("PROD", producer)

    def init2():
        yield calls.create_queuing_port("IN", 4, 1, "DESTINATION")
        yield from spawn("CONS", consumer)

    kernel = _port_system(init1, init2, PortKind.QUEUING)
    kernel.run(max_ticks=4000)
    assert got == [b"1", b"2", b"3", b"4"]
    assert status == {"after two": 2, "full": True}
    receives = [ev for ev in kernel.trace if ev.kind == "CALL" and ev.detail == "RECEIVE_QUEUING_MESSAGE"]
    assert all(kernel.window_at(ev.tick)[0] == 2 for ev in receives)


# -- randomized scenarios against reference models -------------------------------------

@pytest.mark.parametrize("name", sorted(IPC_SCENARIOS))
@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1))
def test_randomized_against_reference(name, seed):
    observed, expected = IPC_SCENARIOS[name](random.Random(seed))
    assert observed == expected


@settings(max_examples=15)
@given(seed=st.integers(0, 2**32 - 1))
def test_partition_isolation(seed):
    assert isolation_scenario(random.Random(seed), frames=4) == []


def test_isolation_checker_notices_a_stray_event():
    config = random_schedule(random.Random(3))
    kernel = boot_system(config)
    kernel.run(max_ticks=config.schedule.major_frame_ticks * 2)
    assert isolation_violations(kernel, 2) == []
    owner, start, _, _ = kernel.window_at(0)
    intruder = next(p for p in kernel.partitions if p != owner)
    kernel.trace.append(TraceEvent(start + 1, "CALL", intruder, None, "SPY"))
    assert isolation_violations(kernel, 2)
