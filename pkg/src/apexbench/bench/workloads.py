"""Computational kernels run by the benchmark applications.

All kernels are pure integer code so results are bit-exact across hosts.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import DimensionMismatch, ImageTooSmall, NegativeWeight

Image = list[list[int]]
Matrix = list[list[int]]


# -- checksum / CRC ----------------------------------------------------------

def checksum(block: bytes) -> int:
    """Additive 32-bit checksum; the critical-section workload."""
    return sum(block) & 0xFFFFFFFF


def _crc_table() -> tuple[int, ...]:
    table = []
    for n in range(256):
        c = n
        for _ in range(8):
            c = (c >> 1) ^ 0xEDB88320 if c & 1 else c >> 1
        table.append(c)
    return tuple(table)


CRC_TABLE = _crc_table()


def crc32(data: bytes, crc: int = 0) -> int:
    """Reflected CRC-32 (polynomial 0xEDB88320), same as zlib's."""
    crc ^= 0xFFFFFFFF
    table = CRC_TABLE
    for byte in data:
        crc = table[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFF


# -- IMA ADPCM -----------------------------------------------------------------

INDEX_TABLE = (-1, -1, -1, -1, 2, 4, 6, 8) * 2

STEP_TABLE = (
    7, 8, 9, 10, 11, 12, 13, 14, 16, 17, 19, 21, 23, 25, 28, 31, 34, 37, 41, 45,
    50, 55, 60, 66, 73, 80, 88, 97, 107, 118, 130, 143, 157, 173, 190, 209, 230,
    253, 279, 307, 337, 371, 408, 449, 494, 544, 598, 658, 724, 796, 876, 963,
    1060, 1166, 1282, 1411, 1552, 1707, 1878, 2066, 2272, 2499, 2749, 3024, 3327,
    3660, 4026, 4428, 4871, 5358, 5894, 6484, 7132, 7845, 8630, 9493, 10442,
    11487, 12635, 13899, 15289, 16818, 18500, 20350, 22385, 24623, 27086, 29794,
    32767,
)


def _clamp16(v: int) -> int:
    return -32768 if v < -32768 else 32767 if v > 32767 else v


def _step(code: int, predicted: int, index: int) -> tuple[int, int]:
    step = STEP_TABLE[index]
    diff = step >> 3
    if code & 4:
        diff += step
    if code & 2:
        diff += step >> 1
    if code & 1:
        diff += step >> 2
    predicted = _clamp16(predicted - diff if code & 8 else predicted + diff)
    index = min(max(index + INDEX_TABLE[code], 0), 88)
    return predicted, index


def adpcm_encode(samples: Sequence[int]) -> bytes:
    """Encode 16-bit samples to 4-bit codes, two per byte, low nibble first."""
    predicted = index = 0
    codes = []
    for sample in samples:
        step = STEP_TABLE[index]
        diff = sample - predicted
        code = 0
        if diff < 0:
            code = 8
            diff = -diff
        if diff >= step:
            code |= 4
            diff -= step
        if diff >= step >> 1:
            code |= 2
            diff -= step >> 1
        if diff >= step >> 2:
            code |= 1
        codes.append(code)
        predicted, index = _step(code, predicted, index)
    if len(codes) % 2:
        codes.append(0)
    return bytes(lo | hi << 4 for lo, hi in zip(codes[::2], codes[1::2]))


def adpcm_decode(encoded: bytes, count: int) -> list[int]:
    predicted = index = 0
    out = []
    for byte in encoded:
        for code in (byte & 0x0F, byte >> 4):
            if len(out) == count:
                break
            predicted, index = _step(code, predicted, index)
            out.append(predicted)
    return out


@dataclass(frozen=True)
class AdpcmResult:
    encoded: bytes
    decoded: list[int]


def adpcm_codec(samples: Sequence[int]) -> AdpcmResult:
    if not samples:
        raise ValueError("ADPCM needs at least one sample")
    encoded = adpcm_encode(samples)
    return AdpcmResult(encoded, adpcm_decode(encoded, len(samples)))


# -- Dijkstra ------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """Directed weighted graph on nodes ``0..nodes-1``."""

    nodes: int
    edges: tuple[tuple[int, int, int], ...]

    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.nodes)]
        for u, v, w in self.edges:
            adj[u].append((v, w))
        return adj


def dijkstra_shortest_paths(graph: Graph, source: int) -> list[float]:
    """Single-source distances; unreachable nodes are ``math.inf``."""
    for u, v, w in graph.edges:
        if w < 0:
            raise NegativeWeight(f"edge {u}->{v} has weight {w}")
    dist = [math.inf] * graph.nodes
    dist[source] = 0
    adj = graph.adjacency()
    heap = [(0, source)]
    done = [False] * graph.nodes
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


# -- Gaussian + Sobel ------------------------------------------------------------

GAUSS = ((1, 2, 1), (2, 4, 2), (1, 2, 1))
SOBEL_X = ((-1, 0, 1), (-2, 0, 2), (-1, 0, 1))
SOBEL_Y = ((-1, -2, -1), (0, 0, 0), (1, 2, 1))


def _check_image(image: Image) -> tuple[int, int]:
    h = len(image)
    w = len(image[0]) if h else 0
    if h < 3 or w < 3:
        raise ImageTooSmall(f"image is {h}x{w}, need at least 3x3")
    if any(len(row) != w for row in image):
        raise ValueError("ragged image")
    return h, w


def _padded(image: Image) -> Image:
    rows = [[row[0]] + list(row) + [row[-1]] for row in image]
    return [rows[0]] + rows + [rows[-1]]


def gaussian_blur(image: Image) -> Image:
    h, w = _check_image(image)
    p = _padded(image)
    out = []
    for y in range(h):
        r0, r1, r2 = p[y], p[y + 1], p[y + 2]
        out.append([
            (r0[x] + 2 * r0[x + 1] + r0[x + 2]
             + 2 * r1[x] + 4 * r1[x + 1] + 2 * r1[x + 2]
             + r2[x] + 2 * r2[x + 1] + r2[x + 2] + 8) >> 4
            for x in range(w)
        ])
    return out


def sobel_magnitude(image: Image) -> Image:
    h, w = _check_image(image)
    p = _padded(image)
    out = []
    for y in range(h):
        r0, r1, r2 = p[y], p[y + 1], p[y + 2]
        row = []
        for x in range(w):
            gx = (r0[x + 2] - r0[x]) + 2 * (r1[x + 2] - r1[x]) + (r2[x + 2] - r2[x])
            gy = (r2[x] + 2 * r2[x + 1] + r2[x + 2]) - (r0[x] + 2 * r0[x + 1] + r0[x + 2])
            row.append(min(abs(gx) + abs(gy), 255))
        out.append(row)
    return out


def sobel_pipeline(image: Image) -> Image:
    """Gaussian blur followed by Sobel edge magnitude, same size as the input."""
    return sobel_magnitude(gaussian_blur(image))


# -- matrices --------------------------------------------------------------------

def matrix_multiply(a: Matrix, b: Matrix) -> Matrix:
    if not a or not b or len(a[0]) != len(b) or any(len(r) != len(a[0]) for r in a) \
            or any(len(r) != len(b[0]) for r in b):
        raise DimensionMismatch("operands are not conformable")
    cols = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in cols] for row in a]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matrices_from_bytes(data: bytes, n: int) -> tuple[Matrix, Matrix]:
    """Two n-by-n matrices filled row-major from consecutive payload bytes."""
    need = 2 * n * n
    if len(data) < need:
        raise DimensionMismatch(f"payload of {len(data)} bytes cannot fill two {n}x{n} matrices")
    a = [list(data[i * n:(i + 1) * n]) for i in range(n)]
    off = n * n
    b = [list(data[off + i * n:off + (i + 1) * n]) for i in range(n)]
    return a, b


def flatten(values: Iterable[Iterable[int]]) -> list[int]:
    return [v for row in values for v in row]
