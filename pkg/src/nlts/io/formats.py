"""Series CSV and NLTS binary snapshot formats.

NLTS layout (little-endian): magic ``b"NLTS"``, ``u32`` version, ``u32`` n,
``u32`` N, ``f64`` L, ``f64`` t, then ``N^n`` ``f64`` samples in row-major
(C) order. Total size is ``32 + 8 N^n`` bytes.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from ..diagnostics.records import SERIES_FIELDS, DiagnosticsRecord
from ..spectral.grid import Grid, PhysicalField

MAGIC = b"NLTS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


class SnapshotFormatError(ValueError):
    """Malformed NLTS file."""


def format_float(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def emit_series(records: Iterable[DiagnosticsRecord], path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SERIES_FIELDS)
            for r in records:
                w.writerow([format_float(v) for v in r.as_tuple()])
    except OSError as exc:
        raise OSError(f"cannot write series to {path}: {exc}") from exc
    return path


class SeriesWriter:
    """Streams records to CSV as they are produced."""

    def __init__(self, path):
        self.path = Path(path)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("w", newline="")
        except OSError as exc:
            raise OSError(f"cannot write series to {self.path}: {exc}") from exc
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(SERIES_FIELDS)

    def __call__(self, rec: DiagnosticsRecord) -> None:
        self._w.writerow([format_float(v) for v in rec.as_tuple()])

    def close(self) -> None:
        self._fh.close()


def read_series(path) -> list[DiagnosticsRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SERIES_FIELDS:
        raise ValueError(f"{path}: header must be {','.join(SERIES_FIELDS)}")
    return [DiagnosticsRecord(*(float(v) for v in row)) for row in rows[1:] if row]


def emit_snapshot(field: PhysicalField, t: float, path) -> Path:
    path = Path(path)
    g = field.grid
    data = np.ascontiguousarray(field.values, dtype="<f8")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, g.n, g.N, float(g.L), float(t)))
            fh.write(data.tobytes(order="C"))
    except OSError as exc:
        raise OSError(f"cannot write snapshot to {path}: {exc}") from exc
    return path


def read_snapshot(path) -> tuple[float, PhysicalField]:
    """Return ``(t, field)``; raises :class:`SnapshotFormatError` on any mismatch."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, N, L, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"{path}: unsupported version {version}")
    count = N ** n
    payload = len(raw) - _HEADER.size
    if payload != 8 * count:
        raise SnapshotFormatError(f"{path}: expected {count} samples, found {payload / 8:g}")
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape((N,) * n)
    return t, PhysicalField(Grid(n, N, L), vals.astype(np.float64))


def snapshot_name(index: int) -> str:
    return f"snap_{index:06d}.nlts"


def read_snapshot_dir(directory) -> list[tuple[float, PhysicalField]]:
    files = sorted(Path(directory).glob("*.nlts"))
    if not files:
        raise FileNotFoundError(f"no .nlts snapshots in {directory}")
    return sorted((read_snapshot(f) for f in files), key=lambda s: s[0])
