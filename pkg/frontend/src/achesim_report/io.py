"""Readers for the simulator's published file formats.

Implemented independently from the simulator package against the declared
external interfaces: header-row CSV files and the ACHE-SNAPSHOT v1 binary
format (five ASCII header lines followed by a row-major little-endian
float64 payload).
"""
from __future__ import annotations

import csv

import numpy as np

SNAPSHOT_MAGIC = b"ACHE-SNAPSHOT v1"


class CsvFormatError(ValueError):
    pass


class SnapshotFormatError(ValueError):
    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


def read_series(path) -> dict[str, np.ndarray]:
    """Time-series CSV -> {column: float array}; columns from the header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty CSV")
        rows = list(reader)
    if not rows:
        raise CsvFormatError(f"{path}: CSV has a header but no data rows")
    cols = {name: np.empty(len(rows)) for name in header}
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}: row {i + 2} has {len(row)} fields, "
                                 f"expected {len(header)}")
        for name, text in zip(header, row):
            try:
                cols[name][i] = float(text)
            except ValueError:
                raise CsvFormatError(f"{path}: row {i + 2}, column {name!r}: "
                                     f"not a number: {text!r}")
    return cols


def read_summary(path) -> list[dict]:
    """Summary CSV -> list of row dicts (floats where parseable)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CsvFormatError(f"{path}: empty CSV")
        out = []
        for row in reader:
            parsed = {}
            for key, text in row.items():
                try:
                    parsed[key] = float(text)
                except (TypeError, ValueError):
                    parsed[key] = text
            out.append(parsed)
    if not out:
        raise CsvFormatError(f"{path}: CSV has a header but no data rows")
    return out


def read_report(path) -> dict:
    """report.txt "key = value" lines -> dict with floats/bools parsed."""
    out: dict = {}
    with open(path) as fh:
        for line in fh:
            if " = " not in line:
                continue
            key, _, text = line.strip().partition(" = ")
            if text in ("True", "False"):
                out[key] = text == "True"
            elif text == "None":
                out[key] = None
            else:
                try:
                    out[key] = float(text)
                except ValueError:
                    out[key] = text
    return out


def read_snapshot(path):
    """ACHE-SNAPSHOT v1 -> (values array (ny, nx), time, mu, nu)."""
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0

    def next_line():
        nonlocal offset
        end = data.find(b"\n", offset)
        if end < 0:
            raise SnapshotFormatError("truncated header", offset)
        line = data[offset:end]
        start = offset
        offset = end + 1
        return line, start

    line, at = next_line()
    if line != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"bad magic {line[:32]!r}", at)
    line, at = next_line()
    try:
        fields = dict(kv.split("=") for kv in line.decode().split())
        nx, ny = int(fields["nx"]), int(fields["ny"])
    except (ValueError, KeyError, UnicodeDecodeError):
        raise SnapshotFormatError(f"bad dimensions line {line!r}", at)
    line, at = next_line()
    try:
        time = float(line.decode().split("=", 1)[1])
    except (IndexError, ValueError, UnicodeDecodeError):
        raise SnapshotFormatError(f"bad time line {line!r}", at)
    line, at = next_line()
    try:
        fields = dict(kv.split("=") for kv in line.decode().split())
        mu, nu = float(fields["mu"]), float(fields["nu"])
    except (ValueError, KeyError, UnicodeDecodeError):
        raise SnapshotFormatError(f"bad parameters line {line!r}", at)
    line, at = next_line()
    if not line.startswith(b"layout=row-major float64 little-endian"):
        raise SnapshotFormatError(f"unsupported layout {line!r}", at)

    expected = ny * nx * 8
    payload = data[offset:]
    if len(payload) != expected:
        raise SnapshotFormatError(
            f"payload has {len(payload)} bytes, expected {expected}",
            offset + min(len(payload), expected))
    values = np.frombuffer(payload, dtype="<f8").reshape(ny, nx)
    return values, time, mu, nu
