"""Artifact writers: RFC-4180 CSV and binary PPM, written atomically."""

from __future__ import annotations

import os
import tempfile

import numpy as np

__all__ = ["atomic_write_bytes", "format_value", "write_csv", "write_ppm"]


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-artifact-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}i"
    s = str(v)
    if any(c in s for c in ",\"\n"):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv(path: str, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def write_ppm(path: str, rgb: np.ndarray, comments=()) -> None:
    """Binary P6, row-major from the top-left; comments go in the header."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, depth = rgb.shape
    if depth != 3:
        raise ValueError("rgb array must have 3 channels")
    head = ["P6"]
    for c in comments:
        head.append("# " + c)
    head.append(f"{w} {h}")
    head.append("255")
    atomic_write_bytes(path, ("\n".join(head) + "\n").encode("ascii") + rgb.tobytes())
