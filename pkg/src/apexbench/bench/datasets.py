"""Seeded synthetic datasets and the file formats that can replace them."""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

from .workloads import Graph, Image, Matrix

DEFAULT_SEED = 653
IMAGE_SIZE = 64
GRAPH_NODES = 16
GRAPH_EDGES = 40
SIGNAL_LENGTH = 4096
MATRIX_SIZE = 8
BLOCK_SIZE = 1024


def synthetic_image(seed: int, size: int = IMAGE_SIZE) -> Image:
    """Gradient background with a few bright rectangles and mild noise."""
    rng = random.Random(seed)
    img = [[(x + y) * 96 // (2 * size) for x in range(size)] for y in range(size)]
    for _ in range(4):
        x0, y0 = rng.randrange(size - 8), rng.randrange(size - 8)
        w, h = rng.randrange(4, size - x0), rng.randrange(4, size - y0)
        level = rng.randrange(128, 256)
        for y in range(y0, y0 + h):
            for x in range(x0, x0 + w):
                img[y][x] = level
    return [[min(255, max(0, p + rng.randrange(-6, 7))) for p in row] for row in img]


def synthetic_graph(seed: int, nodes: int = GRAPH_NODES, edges: int = GRAPH_EDGES) -> Graph:
    """A directed ring (so every node is reachable) plus random chords."""
    if edges < nodes or edges > nodes * (nodes - 1):
        raise ValueError(f"cannot build {edges} edges on {nodes} nodes")
    rng = random.Random(seed)
    chosen = {(u, (u + 1) % nodes) for u in range(nodes)}
    while len(chosen) < edges:
        u, v = rng.randrange(nodes), rng.randrange(nodes)
        if u != v:
            chosen.add((u, v))
    return Graph(nodes, tuple((u, v, rng.randint(1, 100)) for u, v in sorted(chosen)))


def synthetic_signal(seed: int, length: int = SIGNAL_LENGTH) -> list[int]:
    rng = random.Random(seed)
    out = []
    for k in range(length):
        v = 9000 * math.sin(2 * math.pi * k / 64) + 3000 * math.sin(2 * math.pi * k / 9)
        out.append(max(-32768, min(32767, round(v + rng.gauss(0, 400)))))
    return out


def synthetic_matrices(seed: int, n: int = MATRIX_SIZE) -> tuple[Matrix, Matrix]:
    rng = random.Random(seed)
    make = lambda: [[rng.randint(-50, 50) for _ in range(n)] for _ in range(n)]
    return make(), make()


def synthetic_block(seed: int, size: int = BLOCK_SIZE) -> bytes:
    return random.Random(seed).randbytes(size)


# -- file formats --------------------------------------------------------------

def load_pgm(path: Union[str, Path]) -> Image:
    """Read a binary (P5) or ASCII (P2) PGM, scaling to 0..255 when needed."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == b"P5":
        pos += 1
        if maxval < 256:
            raw = list(data[pos:pos + width * height])
        else:
            raw = list(struct.unpack(f">{width * height}H", data[pos:pos + 2 * width * height]))
    elif magic == b"P2":
        raw = [int(t) for t in data[pos:].split()][:width * height]
    else:
        raise ValueError(f"{path}: not a PGM file")
    if len(raw) != width * height:
        raise ValueError(f"{path}: truncated pixel data")
    if maxval != 255:
        raw = [v * 255 // maxval for v in raw]
    return [raw[r * width:(r + 1) * width] for r in range(height)]


def save_pgm(path: Union[str, Path], image: Image) -> None:
    h, w = len(image), len(image[0])
    body = bytes(v for row in image for v in row)
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + body)


def load_edge_list(path: Union[str, Path]) -> Graph:
    """``u v w`` per line (directed); ``#`` starts a comment."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'u v w'")
        edges.append(tuple(int(p) for p in parts))
    if not edges:
        raise ValueError(f"{path}: no edges")
    nodes = 1 + max(max(u, v) for u, v, _ in edges)
    return Graph(nodes, tuple(edges))


def load_signal(path: Union[str, Path]) -> list[int]:
    """Raw signed 16-bit little-endian samples."""
    data = Path(path).read_bytes()
    if len(data) % 2:
        raise ValueError(f"{path}: odd byte count for 16-bit samples")
    return list(struct.unpack(f"<{len(data) // 2}h", data))


@dataclass(frozen=True)
class WorkloadData:
    seed: int
    image: Image
    graph: Graph
    signal: list[int]
    matrices: tuple[Matrix, Matrix]
    block: bytes

    @classmethod
    def generate(cls, seed: int = DEFAULT_SEED, image: Optional[Image] = None,
                 graph: Optional[Graph] = None, signal: Optional[list[int]] = None) -> "WorkloadData":
        data = cls(seed, synthetic_image(seed), synthetic_graph(seed), synthetic_signal(seed),
                   synthetic_matrices(seed), synthetic_block(seed))
        return replace(data,
                       image=image if image is not None else data.image,
                       graph=graph if graph is not None else data.graph,
                       signal=signal if signal is not None else data.signal)
