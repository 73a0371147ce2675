"""Binary field snapshots.

Layout: the 6 magic bytes ``ELGL1\\n``, then newline-terminated ASCII
header lines ``n=<int>``, ``eps=<float>``, ``t=<float>``,
``fields=v1,v2,d1,d2,d3``, ``end``, followed by five contiguous row-major
n x n little-endian float64 arrays in the listed order.  Floats in the
header are rendered with 17 significant digits so that write/read/write
round trips are byte-identical.
"""

from __future__ import annotations

import numpy as np

from .spectral import Field, make_grid
from .state import SimState

MAGIC = b"ELGL1\n"
FIELD_ORDER = ("v1", "v2", "d1", "d2", "d3")


class SnapshotError(ValueError):
    """Malformed snapshot file."""


def write_snapshot(state: SimState, epsilon: float, path) -> None:
    n = state.grid.n
    header = (
        MAGIC
        + f"n={n}\n".encode()
        + f"eps={epsilon:.17g}\n".encode()
        + f"t={state.t:.17g}\n".encode()
        + b"fields=" + ",".join(FIELD_ORDER).encode() + b"\n"
        + b"end\n"
    )
    vp = state.v.physical
    dp = state.d.physical
    planes = (vp[:, :, 0], vp[:, :, 1], dp[:, :, 0], dp[:, :, 1], dp[:, :, 2])
    with open(path, "wb") as fh:
        fh.write(header)
        for plane in planes:
            fh.write(np.ascontiguousarray(plane, dtype="<f8").tobytes())


def read_snapshot(path):
    """Read a snapshot; returns (state, epsilon).

    The returned state carries no parameter binding (``params`` is None):
    only (t, v, d) are stored in the file.
    """
    with open(path, "rb") as fh:
        blob = fh.read()

    if blob[: len(MAGIC)] != MAGIC:
        raise SnapshotError(f"bad magic in {path!s}: expected {MAGIC!r}")
    cursor = len(MAGIC)
    header = {}
    while True:
        end = blob.find(b"\n", cursor)
        if end < 0:
            raise SnapshotError(f"unterminated header in {path!s}")
        line = blob[cursor:end].decode("ascii", errors="replace")
        cursor = end + 1
        if line == "end":
            break
        if "=" not in line:
            raise SnapshotError(f"malformed header line {line!r} in {path!s}")
        key, value = line.split("=", 1)
        header[key] = value

    for key in ("n", "eps", "t", "fields"):
        if key not in header:
            raise SnapshotError(f"missing header field {key!r} in {path!s}")
    if tuple(header["fields"].split(",")) != FIELD_ORDER:
        raise SnapshotError(
            f"unexpected field list {header['fields']!r} in {path!s}"
        )
    n = int(header["n"])
    eps = float(header["eps"])
    t = float(header["t"])

    expected = 5 * n * n * 8
    payload = blob[cursor:]
    if len(payload) < expected:
        raise SnapshotError(
            f"truncated payload in {path!s}: expected {expected} bytes, "
            f"got {len(payload)} (missing {expected - len(payload)})"
        )
    if len(payload) > expected:
        raise SnapshotError(
            f"header/payload mismatch in {path!s}: n={n} implies {expected} "
            f"bytes, found {len(payload)}"
        )

    data = np.frombuffer(payload, dtype="<f8").reshape(5, n, n)
    grid = make_grid(n)
    v = np.empty((n, n, 2))
    v[:, :, 0] = data[0]
    v[:, :, 1] = data[1]
    d = np.empty((n, n, 3))
    d[:, :, 0] = data[2]
    d[:, :, 1] = data[3]
    d[:, :, 2] = data[4]
    state = SimState(
        t=t,
        v=Field.from_physical(grid, v),
        d=Field.from_physical(grid, d),
        step=0,
        params=None,
    )
    return state, eps
