"""File formats: exact text matrices, 16-bit PGM previews, key=value metadata, CSV tables."""

import csv

import numpy as np

from .grid import as_image


def write_matrix(path, x):
    """``rows cols`` header then one row per line, 17 significant digits."""
    x = as_image(x)
    with open(path, "w") as fh:
        fh.write(f"{x.shape[0]} {x.shape[1]}\n")
        np.savetxt(fh, x, fmt="%.17g")


def read_matrix(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected a 'rows cols' header")
        rows, cols = int(header[0]), int(header[1])
        data = np.array(fh.read().split(), dtype=np.float64)
    if data.size != rows * cols:
        raise ValueError(f"{path}: header says {rows}x{cols} but found {data.size} values")
    return data.reshape(rows, cols)


def write_pgm(path, x, lo=None, hi=None):
    """Binary 16-bit PGM (P5, big-endian), linearly mapping [lo, hi] to [0, 65535]."""
    x = as_image(x)
    lo = float(x.min()) if lo is None else float(lo)
    hi = float(x.max()) if hi is None else float(hi)
    scale = 65535.0 / (hi - lo) if hi > lo else 0.0
    q = np.clip(np.rint((x - lo) * scale), 0, 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{x.shape[1]} {x.shape[0]}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())


def read_pgm(path):
    """Raw integer samples of a binary PGM written by :func:`write_pgm` (8- or 16-bit)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    fields, pos = [], 0
    while len(fields) < 4:
        while raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end : end + 1].isspace():
            end += 1
        fields.append(raw[pos:end].decode("ascii"))
        pos = end
    if fields[0] != "P5":
        raise ValueError(f"{path}: not a binary PGM")
    cols, rows, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    dtype = ">u2" if maxval > 255 else "u1"
    data = np.frombuffer(raw[pos + 1 :], dtype=dtype, count=rows * cols)
    return data.reshape(rows, cols).astype(np.int64)


def write_metadata(path, record):
    """Flat ``key=value`` lines in insertion order; values go through ``str``."""
    with open(path, "w") as fh:
        for key, value in record.items():
            if "=" in key or "\n" in key:
                raise ValueError(f"bad metadata key {key!r}")
            fh.write(f"{key}={value}\n")


def read_metadata(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}: malformed metadata line {line!r}")
            out[key] = value
    return out


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_points_csv(path, x, points):
    """Detected points as ``row,col,intensity``."""
    x = as_image(x)
    write_csv(path, ["row", "col", "intensity"], [(int(r), int(c), x[r, c]) for r, c in points])
