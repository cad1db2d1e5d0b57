"""Writes the golden byte fixtures with struct only, independent of the C++ encoder."""

import pathlib
import struct

HERE = pathlib.Path(__file__).parent

features = [[0.5, -1.25, 3.0], [0.0, 2.5, -0.125]]
probs = [[0.25, 0.75], [1.0, 0.0]]
ids = [b"a", b"bc"]


def f32s(rows):
    return b"".join(struct.pack("<f", v) for row in rows for v in row)


def feature_file():
    n, d, c = 2, 3, 2
    out = b"FIDL" + struct.pack("<I", 1)
    out += struct.pack("<7Q", 1, n, d, c, 0, 0, 0b101)
    out += struct.pack("<Q", n * d * 4) + f32s(features)
    out += struct.pack("<Q", n * c * 4) + f32s(probs)
    id_block = b"".join(struct.pack("<Q", len(i)) + i for i in ids)
    out += struct.pack("<Q", len(id_block)) + id_block
    return out


def stats_file():
    mean = [1.5, -2.0]
    cov = [[2.0, 0.25], [0.25, 0.5]]
    out = b"FIDS" + struct.pack("<I", 1) + struct.pack("<3Q", 0, 10, 2)
    out += struct.pack("<2d", *mean)
    out += b"".join(struct.pack("<d", v) for row in cov for v in row)
    return out


(HERE / "golden.fidl").write_bytes(feature_file())
(HERE / "golden.fids").write_bytes(stats_file())
