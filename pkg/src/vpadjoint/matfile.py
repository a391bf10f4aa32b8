"""Text matrix files.

Line 1 is ``rows cols complex`` or ``rows cols real``; then one line per
entry in row-major order, ``re im`` or ``re``.  Numbers are written with
``repr``, the shortest decimal that parses back to the same double, so a
write/read round trip is exact.
"""
from pathlib import Path

import numpy as np


class MatrixFormatError(ValueError):
    pass


def format_matrix(x, kind=None):
    x = np.asarray(x)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("only 2-D matrices can be written")
    if kind is None:
        kind = "complex" if np.iscomplexobj(x) and np.any(x.imag != 0) else "real"
    if kind not in ("real", "complex"):
        raise ValueError(f"kind must be real or complex, not {kind!r}")
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix has non-finite entries")
    rows, cols = x.shape
    lines = [f"{rows} {cols} {kind}"]
    if kind == "real":
        if np.iscomplexobj(x) and np.any(x.imag != 0):
            raise ValueError("complex data cannot be written as real")
        lines += [repr(float(v)) for v in np.real(x).ravel()]
    else:
        lines += [f"{float(v.real)!r} {float(v.imag)!r}" for v in x.astype(complex).ravel()]
    return "\n".join(lines) + "\n"


def write_matrix(path, x, kind=None):
    Path(path).write_text(format_matrix(x, kind))


def parse_matrix(text):
    lines = text.splitlines()
    if not lines:
        raise MatrixFormatError("empty matrix file")
    head = lines[0].split()
    if len(head) != 3 or head[2] not in ("real", "complex"):
        raise MatrixFormatError(f"bad header {lines[0]!r}")
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError:
        raise MatrixFormatError(f"bad header {lines[0]!r}") from None
    if rows <= 0 or cols <= 0:
        raise MatrixFormatError("dimensions must be positive")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != rows * cols:
        raise MatrixFormatError(f"expected {rows * cols} entries, found {len(body)}")
    width = 2 if head[2] == "complex" else 1
    try:
        vals = np.array([[float(t) for t in ln.split()] for ln in body])
    except ValueError as exc:
        raise MatrixFormatError(str(exc)) from None
    if vals.shape != (rows * cols, width):
        raise MatrixFormatError(f"each entry line needs {width} number(s)")
    if not np.all(np.isfinite(vals)):
        raise MatrixFormatError("non-finite entry")
    if width == 2:
        out = vals[:, 0] + 1j * vals[:, 1]
    else:
        out = vals[:, 0]
    return out.reshape(rows, cols)


def read_matrix(path):
    return parse_matrix(Path(path).read_text())
