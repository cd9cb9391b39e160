"""On-disk formats shared by the library and the CLI.

* flat binary matrix: 16-byte header of two little-endian uint64
  ``(row_len, n_rows)`` followed by ``n_rows * row_len`` little-endian
  float64 values, row-major.  Used for point sets, Gram matrices and
  design matrices.
* CSV point sets, one point per row, 17 significant digits.
* JSON reports with sorted keys.
"""
import csv
import hashlib
import io
import json
import struct

import numpy as np

HEADER = struct.Struct("<QQ")


class FormatError(ValueError):
    pass


def write_matrix(path, A):
    A = np.atleast_2d(np.asarray(A, dtype="<f8"))
    n, m = A.shape
    with open(path, "wb") as f:
        f.write(HEADER.pack(m, n))
        f.write(np.ascontiguousarray(A).tobytes())


def read_matrix(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < HEADER.size:
        raise FormatError(f"{path}: header truncated")
    m, n = HEADER.unpack_from(raw)
    body = raw[HEADER.size:]
    if len(body) != 8 * m * n:
        raise FormatError(f"{path}: expected {8 * m * n} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(n, m).astype(float)


def fmt(x):
    """Float to text with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


def write_points_csv(path, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        for row in X:
            w.writerow([fmt(v) for v in row])


def read_points_csv(path):
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    return np.array([[float(v) for v in r] for r in rows])


def read_points(path):
    """Load points from ``.csv`` or the flat binary format."""
    return read_points_csv(path) if str(path).endswith(".csv") else read_matrix(path)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def config_hash(cfg):
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps_report(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def csv_text(columns, rows, header_comment=None):
    """Render rows as CSV; floats use :func:`fmt`."""
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])
    return buf.getvalue()
