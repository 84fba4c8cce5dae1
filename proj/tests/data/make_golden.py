"""Builds the reference PICB files used by the output tests.

Written against the byte layout only, without the C++ library.
"""
import struct
import sys
from pathlib import Path


def header(kind, dims, origin, step, time, file_index, file_count, blocks, comps, quantity):
    q = quantity.encode().ljust(32, b"\0")
    h = b"PICB" + struct.pack("<III", 1, 0x01020304, kind)
    h += struct.pack("<3Q", *dims) + struct.pack("<3q", *origin)
    h += struct.pack("<Qd", step, time)
    h += struct.pack("<IIII", file_index, file_count, blocks, comps) + q
    assert len(h) == 128
    return h


def grid_value(c, i, j, k):
    return c * 100.0 + i * 10.0 + j + 0.5 * k


def grid_block(rank, group, lo, count, comps):
    b = b"PGRD" + struct.pack("<III", 0, rank, group)
    b += struct.pack("<3q", *lo) + struct.pack("<3Q", *count) + struct.pack("<II", comps, 0)
    assert len(b) == 72
    for c in range(comps):
        for i in range(lo[0], lo[0] + count[0]):
            for j in range(lo[1], lo[1] + count[1]):
                for k in range(lo[2], lo[2] + count[2]):
                    b += struct.pack("<d", grid_value(c, i, j, k))
    return b


def particle_block(rank, group, species, records):
    b = b"PPRT" + struct.pack("<IIIIIQ", 1, rank, group, species, 0, len(records))
    assert len(b) == 32
    for r in records:
        b += struct.pack("<7d", *r)
    return b


PARTICLES = [
    [(0.25, 0.5, 0.75, 0.1, -0.2, 0.3, 1.0)],
    [(2.5, 1.5, 0.5, -0.1, 0.0, 0.05, 2.0), (2.75, 0.25, 1.25, 0.0, 0.5, -0.5, 0.5)],
]


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    g = header(0, (3, 2, 2), (0, 0, 0), 7, 0.35, 0, 1, 2, 3, "E")
    g += grid_block(0, 0, (0, 0, 0), (2, 2, 2), 3)
    g += grid_block(1, 1, (2, 0, 0), (1, 2, 2), 3)
    (out / "golden_grid.0.picb").write_bytes(g)
    p = header(1, (3, 2, 2), (0, 0, 0), 7, 0.35, 0, 1, 2, 7, "phase_space:ions")
    p += particle_block(0, 0, 0, PARTICLES[0])
    p += particle_block(1, 1, 0, PARTICLES[1])
    (out / "golden_particles.0.picb").write_bytes(p)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
