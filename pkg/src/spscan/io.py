"""File formats: 16-bit PGM, raw binary matrix cache, headed CSV."""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

MATRIX_MAGIC = b"SPSCNMAT"
# magic, version, kind, rows, cols, width, height, mu, svd_rel_cutoff, weight law
_HEADER = struct.Struct("<8sII QQ II dd I")
LAW_CODES = {"": 0, "half_angle": 1, "mixed": 2}
KIND_MEASUREMENT = 1
KIND_RECONSTRUCTION = 2


def write_pgm(path, values) -> None:
    """Write a binary P5 PGM with maxval 65535 (big-endian samples)."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    if values.min(initial=0) < 0 or values.max(initial=0) > 65535:
        raise ValueError("PGM samples must lie in [0, 65535]")
    h, w = values.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        f.write(values.astype(">u2").tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    pos += 1
    if tokens[0] != "P5":
        raise ValueError(f"not a binary PGM: {tokens[0]!r}")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w).astype(np.uint16)


def write_matrix(path, matrix, kind, width, height, mu=float("nan"), svd_rel_cutoff=float("nan"), law="") -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    rows, cols = matrix.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MATRIX_MAGIC, 1, kind, rows, cols, width, height, mu, svd_rel_cutoff, LAW_CODES[law]))
        f.write(matrix.tobytes())


def read_matrix(path) -> dict:
    data = Path(path).read_bytes()
    magic, version, kind, rows, cols, width, height, mu, cutoff, law = _HEADER.unpack_from(data)
    if magic != MATRIX_MAGIC or version != 1:
        raise ValueError(f"{path}: not a matrix cache file")
    matrix = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=_HEADER.size)
    return {
        "kind": kind,
        "matrix": matrix.reshape(rows, cols).copy(),
        "width": width,
        "height": height,
        "mu": mu,
        "svd_rel_cutoff": cutoff,
        "law": {v: k for k, v in LAW_CODES.items()}[law],
    }


def fmt(x) -> str:
    """Stable float formatting for byte-reproducible CSVs."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header: str, columns, rows) -> str:
    """CSV text with a leading ``# `` comment line."""
    buf = io.StringIO()
    buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: str, columns, rows) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, columns, rows))
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))
