"""File formats: the binary dense-tensor container and CSV helpers.

Tensor container layout (all little-endian):

    magic   4 bytes  b"PMTC"
    version u32      currently 1
    order   u32      number of modes K
    dims    u64[K]
    data    f64[prod(dims)] in canonical order (first index fastest)

Matrices travel as CSV (row-major, optional header row); memberships as
``id,cluster`` CSV with 1-based cluster labels; loadings as cluster-by-factor
CSV with an optional per-asset expansion.
"""

from __future__ import annotations

import struct

import numpy as np

from .membership import Membership

__all__ = [
    "write_tensor",
    "read_tensor",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_membership_csv",
    "read_membership_csv",
    "write_loadings_csv",
]

_MAGIC = b"PMTC"
_VERSION = 1


def write_tensor(path, x: np.ndarray) -> None:
    x = np.asarray(x, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, x.ndim))
        fh.write(struct.pack(f"<{x.ndim}Q", *x.shape))
        fh.write(x.flatten(order="F").tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a tensor container (bad magic {magic!r})")
        version, order = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported container version {version}")
        dims = struct.unpack(f"<{order}Q", fh.read(8 * order))
        count = int(np.prod(dims)) if order else 1
        data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
        if data.size != count:
            raise ValueError(f"{path}: truncated payload")
    return np.asfortranarray(data.reshape(dims, order="F"))


def write_matrix_csv(path, a: np.ndarray, header: list[str] | None = None) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    with open(path, "w", newline="") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in a:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    """Read a numeric CSV matrix; a non-numeric first row is treated as a header."""
    with open(path, "r", newline="") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    start = 0
    try:
        [float(v) for v in lines[0].split(",")]
    except ValueError:
        start = 1
    rows = [[float(v) for v in ln.split(",")] for ln in lines[start:]]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows (widths {sorted(widths)})")
    return np.asarray(rows, dtype=float)


def write_membership_csv(path, m: Membership) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("id,cluster\n")
        for j, a in enumerate(m.labels):
            fh.write(f"{j + 1},{int(a) + 1}\n")


def read_membership_csv(path) -> Membership:
    with open(path, "r", newline="") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].lower() != "id,cluster":
        raise ValueError(f"{path}: expected an 'id,cluster' membership file")
    pairs = [tuple(int(v) for v in ln.split(",")) for ln in lines[1:]]
    labels = np.empty(len(pairs), dtype=np.int64)
    for j, (ident, cluster) in enumerate(pairs):
        if ident != j + 1:
            raise ValueError(f"{path}: ids must be 1..p in order")
        labels[j] = cluster - 1
    return Membership(labels, int(labels.max()) + 1)


def write_loadings_csv(path, loadings: np.ndarray, m: Membership | None = None) -> None:
    """Cluster-by-factor loading table; pass a membership for per-asset rows."""
    loadings = np.atleast_2d(np.asarray(loadings, dtype=float))
    cols = [f"factor_{k + 1}" for k in range(loadings.shape[1])]
    with open(path, "w", newline="") as fh:
        if m is None:
            fh.write(",".join(["cluster"] + cols) + "\n")
            for a, row in enumerate(loadings):
                fh.write(",".join([str(a + 1)] + [repr(float(v)) for v in row]) + "\n")
        else:
            fh.write(",".join(["id", "cluster"] + cols) + "\n")
            for j, a in enumerate(m.labels):
                vals = [repr(float(v)) for v in loadings[a]]
                fh.write(",".join([str(j + 1), str(int(a) + 1)] + vals) + "\n")
