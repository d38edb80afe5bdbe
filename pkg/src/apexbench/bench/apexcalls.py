"""APEX API application: the latency of each covered executive call.

Every call is timed on its own, start/end tags placed right around it.
Calls that could block are set up so they return at once (a token is
posted before a wait, a message is queued before a receive), and calls
that create objects get a freshly named object every iteration. In
virtual mode each series is therefore constant at the call's cost-table
entry.
"""

from __future__ import annotations

from typing import Iterable, Optional

from ..errors import UnknownCall
from ..porting import PartitionLayout, SystemLayout, TaskSpec

APP_NAME = "APEX API"

# The covered calls, in the order of the coverage table.
COVERED_CALLS = (
    "GET_PARTITION_STATUS", "CREATE_SEMAPHORE", "CREATE_BUFFER", "CREATE_BLACKBOARD",
    "READ_BLACKBOARD", "GET_BUFFER_ID", "SEND_BUFFER", "RECEIVE_BUFFER",
    "DISPLAY_BLACKBOARD", "WAIT_SEMAPHORE", "SET_PRIORITY", "GET_MY_ID",
    "GET_SEMAPHORE_STATUS", "CREATE_EVENT", "SET_EVENT", "GET_EVENT_ID",
    "GET_CURRENT_TICKS", "CREATE_QUEUING_PORT", "GET_QUEUING_PORT_ID", "GET_QUEUING_PORT_STATUS",
    "SEND_QUEUING_MESSAGE", "RECEIVE_QUEUING_MESSAGE", "WRITE_SAMPLING_MESSAGE", "READ_SAMPLING_MESSAGE",
    "SIGNAL_SEMAPHORE", "GET_PROCESS_STATUS", "WAIT_EVENT", "GET_SAMPLING_PORT_ID",
    "GET_SEMAPHORE_ID", "GET_PROCESS_ID", "GET_EVENT_STATUS", "CREATE_SAMPLING_PORT",
    "UNLOCK_PREEMPTION", "LOCK_PREEMPTION",
)

# Calls whose latency depends on the message size get one row per size.
PAYLOAD_SIZES = (16, 64)
SIZED_CALLS = frozenset({"DISPLAY_BLACKBOARD", "READ_BLACKBOARD", "SEND_BUFFER", "RECEIVE_BUFFER"})

# Calls timed more than once per loop.
SAMPLES_PER_LOOP = {"CREATE_BLACKBOARD": 2}

PROCESS_NAME = "APEX_CALLS"
PRIORITY = 10
MEMORY = 1 << 24
MAX_MESSAGE = max(PAYLOAD_SIZES)


def row_names(call: str) -> list[str]:
    if call not in COVERED_CALLS:
        raise UnknownCall(f"{call!r} is not a covered APEX call")
    if call in SIZED_CALLS:
        return [f"{call}({size})" for size in PAYLOAD_SIZES]
    return [call]


def all_rows(selected: Optional[Iterable[str]] = None) -> list[str]:
    return [row for call in (selected or COVERED_CALLS) for row in row_names(call)]


class _Fixture:
    """Long-lived objects the steady-state calls operate on."""

    sem = event = buffer = board = None
    sp_src = sp_dst = qp_src = qp_dst = None
    me = None


def run_apex_latency(perf, iterations: int, calls: Optional[Iterable[str]] = None) -> dict:
    selected = list(calls) if calls is not None else list(COVERED_CALLS)
    rows = all_rows(selected)  # validates names before anything runs
    ctxs = {}
    for row in rows:
        ctx = perf.declare()
        perf.initialize(ctx, row)
        ctxs[row] = ctx
    fx = _Fixture()

    def timed(row, service, *args):
        perf.start(ctxs[row])
        result = yield from perf.apex(service, *args)
        perf.end(ctxs[row])
        return result

    def payload(size: int) -> bytes:
        return bytes(range(size))

    def step(call: str, i: int):
        if call == "GET_PARTITION_STATUS":
            yield from timed(call, call)
        elif call == "CREATE_SEMAPHORE":
            yield from timed(call, call, f"SEM_{i}", 0, 1)
        elif call == "WAIT_SEMAPHORE":
            yield from perf.signal_semaphore(fx.sem)
            yield from timed(call, call, fx.sem)
        elif call == "SIGNAL_SEMAPHORE":
            yield from timed(call, call, fx.sem)
            yield from perf.yield_and_wait("semaphore", fx.sem)
        elif call == "GET_SEMAPHORE_ID":
            yield from timed(call, call, "SEM")
        elif call == "GET_SEMAPHORE_STATUS":
            yield from timed(call, call, fx.sem)
        elif call == "CREATE_BUFFER":
            yield from timed(call, call, f"BUF_{i}", 1, MAX_MESSAGE)
        elif call == "GET_BUFFER_ID":
            yield from timed(call, call, "BUF")
        elif call == "SEND_BUFFER":
            for size in PAYLOAD_SIZES:
                yield from timed(f"{call}({size})", call, fx.buffer, payload(size))
                yield from perf.apex("RECEIVE_BUFFER", fx.buffer)
        elif call == "RECEIVE_BUFFER":
            for size in PAYLOAD_SIZES:
                yield from perf.apex("SEND_BUFFER", fx.buffer, payload(size))
                yield from timed(f"{call}({size})", call, fx.buffer)
        elif call == "CREATE_BLACKBOARD":
            for k in range(SAMPLES_PER_LOOP[call]):
                yield from timed(call, call, f"BB_{i}_{k}", MAX_MESSAGE)
        elif call == "DISPLAY_BLACKBOARD":
            for size in PAYLOAD_SIZES:
                yield from timed(f"{call}({size})", call, fx.board, payload(size))
        elif call == "READ_BLACKBOARD":
            for size in PAYLOAD_SIZES:
                yield from perf.apex("DISPLAY_BLACKBOARD", fx.board, payload(size))
                yield from timed(f"{call}({size})", call, fx.board)
        elif call == "SET_PRIORITY":
            yield from timed(call, call, fx.me, PRIORITY)
        elif call == "GET_MY_ID":
            yield from timed(call, call)
        elif call == "GET_PROCESS_ID":
            yield from timed(call, call, PROCESS_NAME)
        elif call == "GET_PROCESS_STATUS":
            yield from timed(call, call, fx.me)
        elif call == "CREATE_EVENT":
            yield from timed(call, call, f"EVT_{i}")
        elif call == "SET_EVENT":
            yield from timed(call, call, fx.event)
            yield from perf.reset_event(fx.event)
        elif call == "WAIT_EVENT":
            yield from perf.set_event(fx.event)
            yield from timed(call, call, fx.event)
            yield from perf.reset_event(fx.event)
        elif call == "GET_EVENT_ID":
            yield from timed(call, call, "EVT")
        elif call == "GET_EVENT_STATUS":
            yield from timed(call, call, fx.event)
        elif call == "GET_CURRENT_TICKS":
            yield from timed(call, call)
        elif call == "CREATE_QUEUING_PORT":
            yield from timed(call, call, f"QP_{i}", 1, MAX_MESSAGE, "SOURCE")
        elif call == "GET_QUEUING_PORT_ID":
            yield from timed(call, call, "QP_OUT")
        elif call == "GET_QUEUING_PORT_STATUS":
            yield from timed(call, call, fx.qp_src)
        elif call == "SEND_QUEUING_MESSAGE":
            yield from timed(call, call, fx.qp_src, payload(MAX_MESSAGE))
            yield from perf.apex("RECEIVE_QUEUING_MESSAGE", fx.qp_dst)
        elif call == "RECEIVE_QUEUING_MESSAGE":
            yield from perf.apex("SEND_QUEUING_MESSAGE", fx.qp_src, payload(MAX_MESSAGE))
            yield from timed(call, call, fx.qp_dst)
        elif call == "CREATE_SAMPLING_PORT":
            yield from timed(call, call, f"SP_{i}", MAX_MESSAGE, "SOURCE", 0)
        elif call == "WRITE_SAMPLING_MESSAGE":
            yield from timed(call, call, fx.sp_src, payload(MAX_MESSAGE))
        elif call == "READ_SAMPLING_MESSAGE":
            yield from timed(call, call, fx.sp_dst)
        elif call == "GET_SAMPLING_PORT_ID":
            yield from timed(call, call, "SP_OUT")

    def plain_or_timed(call: str):
        if call in selected:
            yield from timed(call, call)
        else:
            yield from perf.apex(call)

    def body():
        fx.me = yield from perf.get_my_id()
        for i in range(iterations):
            paired = False
            for call in selected:
                if call in ("LOCK_PREEMPTION", "UNLOCK_PREEMPTION"):
                    # always run as a pair so the lock level returns to zero
                    if not paired:
                        paired = True
                        yield from plain_or_timed("LOCK_PREEMPTION")
                        yield from plain_or_timed("UNLOCK_PREEMPTION")
                    continue
                yield from step(call, i)

    def init():
        fx.sem = yield from perf.create_semaphore("SEM", 0, 1)
        fx.event = yield from perf.create_event("EVT")
        fx.buffer = yield from perf.apex("CREATE_BUFFER", "BUF", 1, MAX_MESSAGE)
        fx.board = yield from perf.apex("CREATE_BLACKBOARD", "BB", MAX_MESSAGE)
        fx.sp_src = yield from perf.create_sampling_port("SP_OUT", MAX_MESSAGE, "SOURCE", 0)
        fx.sp_dst = yield from perf.create_sampling_port("SP_IN", MAX_MESSAGE, "DESTINATION", 1 << 40)
        fx.qp_src = yield from perf.apex("CREATE_QUEUING_PORT", "QP_OUT", 1, MAX_MESSAGE, "SOURCE")
        fx.qp_dst = yield from perf.apex("CREATE_QUEUING_PORT", "QP_IN", 1, MAX_MESSAGE, "DESTINATION")
        yield from perf.write_sampling_message(fx.sp_src, payload(MAX_MESSAGE))
        yield from perf.create_task(TaskSpec(PROCESS_NAME, body, PRIORITY))

    perf.run(SystemLayout(
        [PartitionLayout("APEX_API", init, memory=MEMORY, runtime_create=True)],
        channels=[("sampling", "SP_OUT", "SP_IN"), ("queuing", "QP_OUT", "QP_IN")],
        label=APP_NAME))
    for row in rows:
        perf.validate(ctxs[row])
    return {row: perf.series[row] for row in rows}
