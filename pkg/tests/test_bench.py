import random

import pytest

from apexbench.bench import CATALOG, WorkloadData, catalog, complete, greybox
from apexbench.bench.apexcalls import COVERED_CALLS, SAMPLES_PER_LOOP, all_rows, row_names, run_apex_latency
from apexbench.bench.workloads import (
    adpcm_codec,
    crc32,
    dijkstra_shortest_paths,
    matrices_from_bytes,
    matrix_multiply,
    sobel_pipeline,
)
from apexbench.errors import UnknownCall
from apexbench.porting import ApexBackend
from apexbench.timebase import CostTable

from oracles import crc32_bitwise

ITERS = 12
C = CostTable()
SW = C.process_switch_cost

# Each grey-box sample in virtual time is a fixed sum of cost-table entries.
GREY_EXPECTED = {
    "Process Switch": SW,
    "Mutex Acquire": C.cost("ACQUIRE_MUTEX"),
    "Mutex Release": C.cost("RELEASE_MUTEX"),
    "Mutex Acquire 2": 2 * C.cost("ACQUIRE_MUTEX") + C.cost("RELEASE_MUTEX") + 2 * SW,
    "Mutex Release 2": 2 * C.cost("ACQUIRE_MUTEX") + 2 * C.cost("RELEASE_MUTEX") + 2 * SW,
    "Mutex Workload": C.cost("ACQUIRE_MUTEX") + C.work_cost("checksum", 1024) + C.cost("RELEASE_MUTEX"),
    "Sem Wait": C.cost("WAIT_SEMAPHORE"),
    "Sem Signal": C.cost("SIGNAL_SEMAPHORE"),
    "Priority Sem": C.cost("SIGNAL_SEMAPHORE") + SW,
    "Sem Signal 2": 2 * C.cost("SIGNAL_SEMAPHORE") + 2 * C.cost("WAIT_SEMAPHORE") + 2 * SW,
    "Sem Wait 2": 2 * C.cost("WAIT_SEMAPHORE") + C.cost("SIGNAL_SEMAPHORE") + 2 * SW,
    "Sem Workload": C.cost("WAIT_SEMAPHORE") + C.work_cost("checksum", 1024),
    "Partition Switch": C.partition_switch_cost,
}


def test_frozen_grey_values():
    # the same numbers written out, so a silent change to the cost table shows up
    assert [GREY_EXPECTED[k] for k in GREY_EXPECTED] == [
        113, 76, 79, 457, 536, 1179, 119, 42, 155, 548, 506, 1143, 1682]


def test_registry_has_all_eighteen_applications():
    assert len(CATALOG) == 18
    assert catalog.names() == [
        "Process Switch", "Mutex Acquire/Release", "Mutex Acquire 2", "Mutex Release 2",
        "Mutex Workload", "Sem Wait/Signal", "Priority Sem", "Sem Signal 2", "Sem Wait 2",
        "Sem Workload", "Partition Switch", "APEX API", "SOBEL", "ADPCM", "DIJKSTRA",
        "APEX APP 1", "APEX APP 2", "APEX APP 3"]
    grey_rows = [r for b in catalog.in_group("grey") for r in b.rows]
    assert grey_rows == list(GREY_EXPECTED)


def test_resolve_accepts_row_names_and_ignores_case():
    assert catalog.resolve("sem signal").name == "Sem Wait/Signal"
    assert catalog.resolve("apex app 3 total").name == "APEX APP 3"
    with pytest.raises(KeyError):
        catalog.resolve("NoSuch")


@pytest.mark.parametrize("bench", catalog.in_group("grey"), ids=lambda b: b.name)
def test_grey_virtual_values(bench):
    series = bench.run(ApexBackend(), ITERS)
    # process switch takes n - 1 samples per loop, with n = 4 by default
    per_loop = 3 if bench.name == "Process Switch" else 1
    for row, s in series.items():
        assert len(s) == ITERS * per_loop
        assert set(s.samples) == {GREY_EXPECTED[row]}, row


def test_process_switch_sample_counts():
    assert len(greybox.run_process_switch(ApexBackend(), 1, n=4)["Process Switch"]) == 3
    assert len(greybox.run_process_switch(ApexBackend(), 500, n=2)["Process Switch"]) == 500
    with pytest.raises(ValueError):
        greybox.run_process_switch(ApexBackend(), 5, n=1)


def test_mutex_owners_alternate():
    owners = greybox.run_mutex_acquire_release(ApexBackend(), 20)["owners"]
    assert len(owners) == 40
    assert all(a != b for a, b in zip(owners, owners[1:]))


@pytest.mark.parametrize("runner", [greybox.run_mutex_workload, greybox.run_sem_workload])
def test_workload_result_constant(runner):
    sums = runner(ApexBackend(), 10)["checksums"]
    assert len(sums) == 10 and len(set(sums)) == 1


def test_priority_sem_wakes_in_block_order():
    out = greybox.run_priority_sem(ApexBackend(), 9)
    assert out["wake_order"] == [3, 7, 5] * 3


def test_partition_switch_counts():
    assert len(greybox.run_partition_switch(ApexBackend(), 10)["Partition Switch"]) == 10


def test_partition_switch_on_host_clock():
    s = greybox.run_partition_switch(ApexBackend("host"), 5)["Partition Switch"]
    assert len(s) == 5 and min(s.samples) <= sum(s.samples) / 5 <= max(s.samples)


# -- APEX call latency ------------------------------------------------------------------

def test_coverage_of_call_table():
    assert len(set(COVERED_CALLS)) == 34
    rows = all_rows()
    assert len(rows) == 38
    assert "SEND_BUFFER(16)" in rows and "READ_BLACKBOARD(64)" in rows
    with pytest.raises(UnknownCall):
        row_names("FORMAT_DISK")


def test_apex_latency_constant_at_cost_table():
    out = run_apex_latency(ApexBackend(), 5)
    assert set(out) == set(all_rows())
    for row, s in out.items():
        call = row.split("(")[0]
        assert len(s) == 5 * SAMPLES_PER_LOOP.get(call, 1), row
        assert set(s.samples) == {C.cost(call)}, row


def test_apex_latency_subset():
    out = run_apex_latency(ApexBackend(), 3, calls=["CREATE_BLACKBOARD", "SEND_BUFFER"])
    assert sorted(out) == ["CREATE_BLACKBOARD", "SEND_BUFFER(16)", "SEND_BUFFER(64)"]
    assert len(out["CREATE_BLACKBOARD"]) == 6


# -- complete applications ----------------------------------------------------------------

DATA = WorkloadData.generate(11)


def test_kernel_apps_virtual_cost_and_outputs():
    sobel = complete.run_sobel(ApexBackend(), 2, DATA)
    pixels = len(DATA.image) * len(DATA.image[0])
    assert set(sobel["SOBEL"].samples) == {C.work_cost("sobel", pixels)}
    assert sobel["outputs"] == [sobel_pipeline(DATA.image)] * 2

    adpcm = complete.run_adpcm(ApexBackend(), 2, DATA)
    assert set(adpcm["ADPCM"].samples) == {C.work_cost("adpcm", len(DATA.signal))}
    assert adpcm["outputs"][0] == adpcm_codec(DATA.signal)

    dijkstra = complete.run_dijkstra(ApexBackend(), 2, DATA)
    assert set(dijkstra["DIJKSTRA"].samples) == {C.work_cost("dijkstra", DATA.graph.nodes ** 2)}
    assert dijkstra["outputs"][0] == dijkstra_shortest_paths(DATA.graph, 0)


def test_kernel_outputs_do_not_depend_on_measurement():
    host = complete.run_sobel(ApexBackend("host"), 1, DATA)["outputs"]
    virtual = complete.run_sobel(ApexBackend(), 1, DATA)["outputs"]
    assert host == virtual


def test_app1_completes_stages_in_order():
    out = complete.run_apex_app_1(ApexBackend(), 8)
    assert out["completions"] == [(i, s) for i in range(8) for s in (1, 2, 3, 4)]
    assert len(out["APEX APP 1"]) == 8


def _event_blocks(perf):
    return [ev for _, trace in perf.traces for ev in trace if ev.kind == "BLOCK" and "event:" in ev.detail]


def test_app2_gates_on_events_and_preset_never_blocks():
    gated = ApexBackend(trace=True)
    out = complete.run_apex_app_2(gated, 6)
    assert out["completions"] == [(i, s) for i in range(6) for s in (1, 2, 3, 4)]
    assert _event_blocks(gated)

    preset = ApexBackend(trace=True)
    out = complete.run_apex_app_2(preset, 6, preset=True)
    assert _event_blocks(preset) == []
    assert len(set(out["APEX APP 2"].samples)) == 1


def test_app_values_are_seeded():
    a = complete.run_apex_app_1(ApexBackend(), 3, seed=1)["values"]
    b = complete.run_apex_app_1(ApexBackend(), 3, seed=1)["values"]
    c = complete.run_apex_app_1(ApexBackend(), 3, seed=2)["values"]
    assert a == b != c


def test_app3_payload_crc():
    assert crc32(b"123456789") == crc32_bitwise(b"123456789") == 0xCBF43926
    message = complete.app3_payload(7, b"123456789")
    assert complete.app3_unpack(message) == (7, 0xCBF43926, b"123456789")


def test_app3_end_to_end():
    out = complete.run_apex_app_3(ApexBackend(), 5, seed=4)
    a, b, total = out["APEX APP 3 A"], out["APEX APP 3 B"], out["APEX APP 3 TOTAL"]
    assert len(a) == len(b) == len(total) == 5
    assert total.samples == [x + y for x, y in zip(a.samples, b.samples)]
    assert out["crc_failures"] == []
    # rebuild the producer's blocks from the seed and recompute every product
    rng = random.Random(4)
    blocks = [rng.randbytes(complete.APP3_DATA_BYTES) for _ in range(5)]
    assert [seq for seq, _ in out["sent"]] == list(range(5))
    assert [crc for _, crc in out["sent"]] == [crc32_bitwise(d) for d in blocks]
    expected = [matrix_multiply(*matrices_from_bytes(d, complete.MATRIX_SIZE)) for d in blocks]
    assert out["products"] == expected
    assert out["traces"] == [sum(p[k][k] for k in range(complete.MATRIX_SIZE)) for p in expected]


def test_iterations_must_be_positive():
    with pytest.raises(ValueError):
        catalog.resolve("SOBEL").run(ApexBackend(), 0)
