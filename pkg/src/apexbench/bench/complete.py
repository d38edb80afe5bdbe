"""Complete applications: real workloads run under the executive.

SOBEL, ADPCM and DIJKSTRA time one pass of their kernel per iteration.
The three APEX APPs time multi-process pipelines end to end. Kernel
outputs are computed in Python and never depend on the measurement
calls; the matching ``work`` charge models their cost in virtual time.
"""

from __future__ import annotations

import random
import struct
from typing import Optional

from ..errors import NoMessage
from ..porting import PartitionLayout, SystemLayout, TaskSpec
from ..timebase import MeasurementSeries
from .datasets import DEFAULT_SEED, MATRIX_SIZE, WorkloadData, synthetic_block
from .workloads import (
    adpcm_codec,
    checksum,
    crc32,
    dijkstra_shortest_paths,
    matrices_from_bytes,
    matrix_multiply,
    sobel_pipeline,
)

WORKER_PRIORITY = 10
APP3_WINDOW = 20_000
APP3_DATA_BYTES = 2 * MATRIX_SIZE * MATRIX_SIZE
APP3_HEADER = struct.Struct("<II")  # sequence number, CRC-32 of the data bytes
STAGE_BLOCK_SIZE = 256


def _metric(perf, name: str):
    ctx = perf.declare()
    perf.initialize(ctx, name)
    return ctx


def _kernel_app(perf, iterations: int, name: str, process: str, compute, kernel: str, units: int) -> dict:
    ctx = _metric(perf, name)
    outputs: list = []

    def body():
        for _ in range(iterations):
            perf.start(ctx)
            result = compute()
            yield from perf.work(kernel, units)
            perf.end(ctx)
            outputs.append(result)

    def init():
        yield from perf.create_task(TaskSpec(process, body, WORKER_PRIORITY))

    perf.run(SystemLayout([PartitionLayout(name, init)], label=name))
    perf.validate(ctx)
    return {name: perf.series[name], "outputs": outputs}


def run_sobel(perf, iterations: int, data: Optional[WorkloadData] = None) -> dict:
    """Gaussian blur plus Sobel magnitude over the dataset image."""
    image = (data or WorkloadData.generate()).image
    pixels = len(image) * len(image[0])
    return _kernel_app(perf, iterations, "SOBEL", "RunSobelTests",
                       lambda: sobel_pipeline(image), "sobel", pixels)


def run_adpcm(perf, iterations: int, data: Optional[WorkloadData] = None) -> dict:
    signal = (data or WorkloadData.generate()).signal
    return _kernel_app(perf, iterations, "ADPCM", "RunAdpcmTests",
                       lambda: adpcm_codec(signal), "adpcm", len(signal))


def run_dijkstra(perf, iterations: int, data: Optional[WorkloadData] = None) -> dict:
    """Shortest paths from node 0; charged per node pair."""
    graph = (data or WorkloadData.generate()).graph
    return _kernel_app(perf, iterations, "DIJKSTRA", "RunDijkstraTests",
                       lambda: dijkstra_shortest_paths(graph, 0), "dijkstra", graph.nodes ** 2)


# -- APEX APP 1 / 2 -----------------------------------------------------------------

STAGES = 4


def _stage_work(perf, stage: int, block: bytes):
    """What each pipeline stage does once unblocked. Stage 2 makes service calls."""
    if stage == 1:
        value = checksum(block)
        yield from perf.work("checksum", len(block))
    elif stage == 2:
        me = yield from perf.get_my_id()
        yield from perf.apex("GET_PROCESS_STATUS", me)
        yield from perf.apex("GET_PARTITION_STATUS")
        value = me
    elif stage == 3:
        value = crc32(block)
        yield from perf.work("crc32", len(block))
    else:
        value = checksum(block[::-1]) ^ crc32(block[:16])
        yield from perf.work("checksum", len(block))
        yield from perf.work("crc32", 16)
    return value


def _chain_app(perf, iterations: int, name: str, sync: str, preset: bool, seed: int) -> dict:
    """Four processes P1..P4, each released by its predecessor.

    ``sync`` is "semaphore" (APP 1) or "event" (APP 2). The sample spans
    P1's first instruction to P4's last, per iteration. With ``preset``
    every event starts set and is never reset, so no stage ever blocks
    and the processes simply take turns.
    """
    ctx = _metric(perf, name)
    block = synthetic_block(seed, STAGE_BLOCK_SIZE)
    completions: list[tuple[int, int]] = []
    values: list[tuple[int, int]] = []
    gates: dict[int, int] = {}

    def wait(stage: int):
        if sync == "semaphore":
            yield from perf.yield_and_wait("semaphore", gates[stage])
        else:
            yield from perf.yield_and_wait("event", gates[stage])
            if not preset:
                yield from perf.reset_event(gates[stage])

    def release(stage: int):
        if sync == "semaphore":
            yield from perf.signal_semaphore(gates[stage])
        elif not preset:
            yield from perf.set_event(gates[stage])
        else:
            yield from perf.yield_and_wait("delay", 0)

    def stage_body(stage: int):
        def body():
            for i in range(iterations):
                if stage > 1 or i > 0:
                    yield from wait(stage)
                if stage == 1:
                    perf.start(ctx)
                value = yield from _stage_work(perf, stage, block)
                if stage == STAGES:
                    perf.end(ctx)
                completions.append((i, stage))
                values.append((stage, value))
                yield from release(stage % STAGES + 1)
        return body

    def init():
        for stage in range(1, STAGES + 1):
            if sync == "semaphore":
                gates[stage] = yield from perf.create_semaphore(f"STAGE_{stage}", 0, 1)
            else:
                gates[stage] = yield from perf.create_event(f"STAGE_{stage}")
                if preset:
                    yield from perf.set_event(gates[stage])
        for stage in range(1, STAGES + 1):
            yield from perf.create_task(TaskSpec(f"P{stage}", stage_body(stage), WORKER_PRIORITY))

    perf.run(SystemLayout([PartitionLayout(name.replace(" ", "_"), init)], label=name))
    perf.validate(ctx)
    return {name: perf.series[name], "completions": completions, "values": values}


def run_apex_app_1(perf, iterations: int, seed: int = DEFAULT_SEED) -> dict:
    return _chain_app(perf, iterations, "APEX APP 1", "semaphore", False, seed)


def run_apex_app_2(perf, iterations: int, seed: int = DEFAULT_SEED, preset: bool = False) -> dict:
    return _chain_app(perf, iterations, "APEX APP 2", "event", preset, seed)


# -- APEX APP 3 -----------------------------------------------------------------------

def app3_payload(seq: int, data: bytes) -> bytes:
    return APP3_HEADER.pack(seq, crc32(data)) + data


def app3_unpack(message: bytes) -> tuple[int, int, bytes]:
    seq, crc = APP3_HEADER.unpack_from(message)
    return seq, crc, message[APP3_HEADER.size:]


def run_apex_app_3(perf, iterations: int, seed: int = DEFAULT_SEED) -> dict:
    """CRC producer and matrix consumer in two partitions.

    Partition 1's periodic process draws a random block, computes its
    CRC-32 and publishes sequence number, CRC and data on a sampling
    port. Partition 2's periodic process reads each new message, builds
    two 8x8 matrices from the data and multiplies them. Each partition
    also has a sporadic process that checks the periodic one's result.
    Rows: A (producer job), B (consumer job) and TOTAL (A + B).
    """
    row_a, row_b, row_total = "APEX APP 3 A", "APEX APP 3 B", "APEX APP 3 TOTAL"
    ctx_a = _metric(perf, row_a)
    ctx_b = _metric(perf, row_b)
    rng = random.Random(seed)
    blocks = [rng.randbytes(APP3_DATA_BYTES) for _ in range(iterations)]
    ports: dict[str, int] = {}
    sems: dict[str, int] = {}
    sent: list[tuple[int, int]] = []
    products: list = []
    crc_failures: list[int] = []
    traces: list[int] = []
    pending: list = []

    def producer():
        for seq, data in enumerate(blocks):
            perf.start(ctx_a)
            message = app3_payload(seq, data)
            yield from perf.work("crc32", len(data))
            yield from perf.write_sampling_message(ports["out"], message)
            perf.end(ctx_a)
            sent.append((seq, APP3_HEADER.unpack_from(message)[1]))
            yield from perf.signal_semaphore(sems["audit"])
            yield from perf.yield_and_wait("period")

    def auditor():
        while True:
            yield from perf.yield_and_wait("semaphore", sems["audit"])
            seq, crc = sent[-1]
            if crc32(blocks[seq]) != crc:
                crc_failures.append(seq)

    def consumer():
        last = -1
        while len(products) < iterations:
            # a frame with nothing new leaves this stamp open; the next restart drops it
            perf.restart(ctx_b)
            try:
                sample = yield from perf.read_sampling_message(ports["in"])
                seq, crc, data = app3_unpack(sample.message)
            except NoMessage:  # producer has not run yet (host clock)
                seq = last
            if seq == last:
                yield from perf.yield_and_wait("period")
                continue
            a, b = matrices_from_bytes(data, MATRIX_SIZE)
            product = matrix_multiply(a, b)
            yield from perf.work("matmul", MATRIX_SIZE ** 3)
            perf.end(ctx_b)
            last = seq
            products.append(product)
            pending.append((seq, crc, data, product))
            yield from perf.signal_semaphore(sems["check"])
            yield from perf.yield_and_wait("period")

    def checker():
        while True:
            yield from perf.yield_and_wait("semaphore", sems["check"])
            seq, crc, data, product = pending.pop(0)
            if crc32(data) != crc:
                crc_failures.append(seq)
            traces.append(sum(product[k][k] for k in range(MATRIX_SIZE)))

    def init_crc():
        frame = yield from perf.major_frame()
        ports["out"] = yield from perf.create_sampling_port("CRC_OUT", APP3_HEADER.size + APP3_DATA_BYTES,
                                                            "SOURCE", 0)
        sems["audit"] = yield from perf.create_semaphore("AUDIT", 0, iterations)
        yield from perf.create_task(TaskSpec("CRC_PERIODIC", producer, WORKER_PRIORITY, period=frame))
        yield from perf.create_task(TaskSpec("CRC_SPORADIC", auditor, WORKER_PRIORITY - 1))

    def init_matrix():
        frame = yield from perf.major_frame()
        ports["in"] = yield from perf.create_sampling_port("MATRIX_IN", APP3_HEADER.size + APP3_DATA_BYTES,
                                                           "DESTINATION", frame)
        sems["check"] = yield from perf.create_semaphore("CHECK", 0, iterations)
        yield from perf.create_task(TaskSpec("MATRIX_PERIODIC", consumer, WORKER_PRIORITY, period=frame))
        yield from perf.create_task(TaskSpec("MATRIX_SPORADIC", checker, WORKER_PRIORITY - 1))

    layout = SystemLayout(
        [PartitionLayout("CRC", init_crc), PartitionLayout("MATRIX", init_matrix)],
        windows=[("CRC", 0, APP3_WINDOW), ("MATRIX", APP3_WINDOW, APP3_WINDOW)],
        channels=[("sampling", "CRC_OUT", "MATRIX_IN")],
        until=lambda: len(traces) >= iterations,
        label="APEX APP 3",
    )
    perf.run(layout)
    perf.validate(ctx_a)
    perf.validate(ctx_b)
    # TOTAL pairs the k-th producer and consumer samples; derived, not measured
    total = MeasurementSeries(row_total, [a + b for a, b in zip(perf.series[row_a].samples,
                                                                perf.series[row_b].samples)])
    return {row_a: perf.series[row_a], row_b: perf.series[row_b], row_total: total,
            "products": products, "traces": traces, "crc_failures": crc_failures, "sent": sent}
