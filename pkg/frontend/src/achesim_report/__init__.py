"""Offline figure generation from achesim CSV and snapshot outputs.

This package is strictly downstream of the simulator: it consumes the
published CSV schemas and the snapshot file format and never recomputes
any physics. Every number annotated on a figure is read from the input
files (or is a presentation-level line fit of the plotted data itself).
"""
from achesim_report.io import (
    CsvFormatError,
    SnapshotFormatError,
    read_report,
    read_series,
    read_snapshot,
    read_summary,
)
from achesim_report.plots import plot_decay, plot_fields, plot_scaling

__all__ = [
    "CsvFormatError",
    "SnapshotFormatError",
    "plot_decay",
    "plot_fields",
    "plot_scaling",
    "read_report",
    "read_series",
    "read_snapshot",
    "read_summary",
]
