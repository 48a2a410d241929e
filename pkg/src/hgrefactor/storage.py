"""Progressive ``.hg`` container: coefficient classes stored coarsest first.

Layout (all little-endian)::

    0   4s   magic b"HGRF"
    4   u16  format version
    6   u8   bytes per value (4 or 8)
    7   u8   number of dimensions d
    8   u32  number of classes (levels + 1)
    12  u32  reserved, zero
    16  d x u64                 finest size per dimension
        sum(sizes) x f64        node coordinates, dimension by dimension
        classes x (u64, u64)    byte offset and byte length of each class
        payloads                class 0, 1, ..., L as raw floats

Class ``l`` holds the values at the finest-grid indices first present at level
``l``, in row-major order.  Everything before the class-0 payload is the
header; a prefix read of classes ``0..m`` touches one contiguous range.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .grid import build_hierarchy
from .refactor import RefactoredArray

MAGIC = b"HGRF"
VERSION = 1
_FIXED = struct.Struct("<4sHBBII")
_DTYPES = {4: np.dtype("<f4"), 8: np.dtype("<f8")}


class FormatError(ValueError):
    """Raised for malformed, truncated, or unsupported ``.hg`` files."""


def _header_bytes(r: RefactoredArray) -> tuple[bytes, list[tuple[int, int]]]:
    hier = r.hier
    ncls = hier.class_count()
    head = _FIXED.pack(MAGIC, VERSION, r.precision, hier.ndim, ncls, 0)
    head += struct.pack(f"<{hier.ndim}Q", *hier.shape)
    head += b"".join(np.asarray(c, dtype="<f8").tobytes() for c in hier.coords)
    offset = len(head) + 16 * ncls
    table = []
    for l in range(ncls):
        length = hier.class_size(l) * r.precision
        table.append((offset, length))
        offset += length
    head += b"".join(struct.pack("<QQ", o, n) for o, n in table)
    return head, table


def write_file(r: RefactoredArray, path) -> int:
    """Write ``r`` to ``path``; returns the number of bytes written."""
    head, _ = _header_bytes(r)
    dtype = _DTYPES[r.precision]
    try:
        with open(path, "wb") as fh:
            fh.write(head)
            total = len(head)
            for l in range(r.hier.class_count()):
                payload = r.class_values(l).astype(dtype, copy=False).tobytes()
                fh.write(payload)
                total += len(payload)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return total


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated file while reading {what}")
    return buf


def _read_header(fh, file_size: int) -> dict:
    buf = fh.read(_FIXED.size)
    if len(buf) < _FIXED.size:
        raise FormatError("file too short for header")
    magic, version, precision, ndim, ncls, _ = _FIXED.unpack(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")
    if precision not in _DTYPES:
        raise FormatError(f"bad precision code {precision}")
    if not 1 <= ndim <= 3:
        raise FormatError(f"bad dimension count {ndim}")
    sizes = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim, "sizes"))
    if sum(sizes) * 8 > file_size:
        raise FormatError("truncated file while reading coordinates")
    coords = [np.frombuffer(_read_exact(fh, 8 * n, "coordinates"), dtype="<f8") for n in sizes]
    try:
        hier = build_hierarchy(coords)
    except ValueError as exc:
        raise FormatError(f"invalid grid in header: {exc}") from exc
    if ncls != hier.class_count():
        raise FormatError(f"class count {ncls} does not match grid ({hier.class_count()})")
    raw = _read_exact(fh, 16 * ncls, "class table")
    table = [struct.unpack_from("<QQ", raw, 16 * l) for l in range(ncls)]
    header_size = fh.tell()
    expected = header_size
    for l, (off, length) in enumerate(table):
        if off != expected or length != hier.class_size(l) * precision:
            raise FormatError(f"inconsistent offset table entry for class {l}")
        expected += length
    if file_size < expected:
        raise FormatError(f"truncated file: {file_size} bytes, expected {expected}")
    return {
        "precision": precision,
        "hier": hier,
        "table": table,
        "header_size": header_size,
        "file_size": file_size,
    }


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        return _read_header(fh, os.fstat(fh.fileno()).st_size)


def read_prefix(path, m: int | None = None) -> tuple[RefactoredArray, int]:
    """Read classes ``0..m`` of a file; higher classes are zero-filled.

    Returns the array and the number of bytes read (header plus the
    requested class payloads).
    """
    with open(path, "rb") as fh:
        hdr = _read_header(fh, os.fstat(fh.fileno()).st_size)
        hier = hdr["hier"]
        m = hier.levels if m is None else int(m)
        if not 0 <= m <= hier.levels:
            raise ValueError(f"class cutoff {m} out of range [0, {hier.levels}]")
        table = hdr["table"]
        start = table[0][0]
        end = table[m][0] + table[m][1]
        fh.seek(start)
        payload = _read_exact(fh, end - start, "class payloads")
    dtype = _DTYPES[hdr["precision"]]
    classes = []
    for off, length in table[: m + 1]:
        lo = off - start
        classes.append(np.frombuffer(payload, dtype=dtype, count=length // dtype.itemsize, offset=lo))
    r = RefactoredArray.from_classes(classes, hier, dtype=dtype.newbyteorder("="))
    return r, hdr["header_size"] + (end - start)


def info(path) -> dict:
    """Summary of a ``.hg`` file read from its header only."""
    hdr = read_header(path)
    hier = hdr["hier"]
    total = hier.size
    classes = []
    for l, (off, length) in enumerate(hdr["table"]):
        n = hier.class_size(l)
        classes.append({
            "class": l,
            "elements": n,
            "offset": off,
            "bytes": length,
            "element_fraction": n / total,
            "byte_fraction": length / hdr["file_size"],
        })
    return {
        "dims": list(hier.shape),
        "precision": hdr["precision"],
        "levels": hier.levels,
        "class_count": hier.class_count(),
        "header_bytes": hdr["header_size"],
        "file_bytes": hdr["file_size"],
        "classes": classes,
    }


def format_info(summary: dict) -> str:
    lines = [
        f"dims: {'x'.join(str(n) for n in summary['dims'])}",
        f"precision: {summary['precision'] * 8}-bit",
        f"classes: {summary['class_count']}",
        f"header: {summary['header_bytes']} bytes, file: {summary['file_bytes']} bytes",
        f"{'class':>5} {'elements':>12} {'bytes':>14} {'elem frac':>10} {'byte frac':>10}",
    ]
    for c in summary["classes"]:
        lines.append(
            f"{c['class']:>5} {c['elements']:>12} {c['bytes']:>14} "
            f"{c['element_fraction']:>10.6f} {c['byte_fraction']:>10.6f}"
        )
    return "\n".join(lines)
