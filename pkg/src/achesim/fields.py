"""Scalar fields on the torus, the streamwise-average decomposition and norms.

A 2D field f splits into f_par(x2), the mean over each x1 row, and
f_perp = f - f_par, which has zero x1 average on every row. The split is
orthogonal in L^2 and both pieces are used throughout the diagnostics.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from achesim import spectral
from achesim.spectral import GridSpec, NonFiniteFieldError

SNAPSHOT_MAGIC = "ACHE-SNAPSHOT v1"


@dataclass(frozen=True)
class Field1D:
    """Samples of a function of x2 alone on ny uniform points."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteFieldError("non-finite field")
        object.__setattr__(self, "values", vals)

    @property
    def ny(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Field2D:
    """Real concentration samples on a GridSpec, shape (ny, nx)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteFieldError("non-finite field")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class DecompositionPair:
    parallel: Field1D
    perp: Field2D


def average(f: Field2D) -> float:
    return float(np.mean(f.values))


def lift(par: Field1D, nx: int) -> Field2D:
    """Extend a function of x2 to the 2D grid (constant in x1)."""
    grid = GridSpec(nx=nx, ny=par.ny)
    return Field2D(grid, np.broadcast_to(par.values[:, None], grid.shape).copy())


def decompose(f: Field2D) -> DecompositionPair:
    par = np.mean(f.values, axis=1)
    perp = f.values - par[:, None]
    return DecompositionPair(Field1D(par), Field2D(f.grid, perp))


def _values(f) -> np.ndarray:
    return f.values


def l2_norm(f) -> float:
    return float(np.sqrt(np.mean(_values(f) ** 2)))


def l4_norm(f) -> float:
    return float(np.mean(_values(f) ** 4) ** 0.25)


def l6_norm(f) -> float:
    return float(np.mean(_values(f) ** 6) ** (1.0 / 6.0))


def linf_norm(f) -> float:
    return float(np.max(np.abs(_values(f))))


def _gradient_sq_mean(f) -> float:
    if isinstance(f, Field1D):
        hat = np.fft.fft(f.values) / f.ny
        sym = spectral.derivative_symbol(f.ny, 1)
        df = np.fft.ifft(hat * sym) * f.ny
        return float(np.mean(df.real**2))
    dx1 = spectral.derivative(f.values, "x1", 1)
    dx2 = spectral.derivative(f.values, "x2", 1)
    return float(np.mean(dx1**2 + dx2**2))


def h1_seminorm(f) -> float:
    """L^2 norm of the gradient, computed spectrally."""
    return float(np.sqrt(_gradient_sq_mean(f)))


def laplacian_l2(f) -> float:
    if isinstance(f, Field1D):
        hat = np.fft.fft(f.values) / f.ny
        sym = spectral.derivative_symbol(f.ny, 2)
        d2 = np.fft.ifft(hat * sym) * f.ny
        return float(np.sqrt(np.mean(d2.real**2)))
    return float(np.sqrt(np.mean(spectral.laplacian(f.values) ** 2)))


GN_INEQUALITIES = ("linf-1d", "l4-2d", "l6-2d", "linf-2d")


def gn_ratio(f, inequality_id: str) -> float:
    """Empirical constant LHS / (norm product) for one functional inequality.

    Inequalities (mean-zero f):
      linf-1d : ||f||_inf      <= C ||f'||^(1/2)  ||f||^(1/2)   on T
      l4-2d   : ||f||_L4       <= C ||grad f||^(1/2) ||f||^(1/2) on T^2
      l6-2d   : ||f||_L6       <= C ||grad f||^(2/3) ||f||^(1/3) on T^2
      linf-2d : ||f||_inf      <= C ||lap f||^(1/2) ||f||^(1/2)  on T^2
    """
    l2 = l2_norm(f)
    if l2 == 0.0:
        raise ValueError("degenerate ratio: zero field")
    if inequality_id == "linf-1d":
        if not isinstance(f, Field1D):
            raise ValueError("linf-1d applies to Field1D")
        return linf_norm(f) / (h1_seminorm(f) ** 0.5 * l2**0.5)
    if not isinstance(f, Field2D):
        raise ValueError(f"{inequality_id} applies to Field2D")
    if inequality_id == "l4-2d":
        return l4_norm(f) / (h1_seminorm(f) ** 0.5 * l2**0.5)
    if inequality_id == "l6-2d":
        return l6_norm(f) / (h1_seminorm(f) ** (2.0 / 3.0) * l2 ** (1.0 / 3.0))
    if inequality_id == "linf-2d":
        return linf_norm(f) / (laplacian_l2(f) ** 0.5 * l2**0.5)
    raise ValueError(f"unknown inequality id {inequality_id!r}")


def write_snapshot(path: str | os.PathLike, f: Field2D, time: float, mu: float, nu: float) -> None:
    """Write the v1 snapshot format: 5-line text header + raw float64 data.

    Writes to a temp name and renames, so readers never see partial files.
    """
    header = (
        f"{SNAPSHOT_MAGIC}\n"
        f"nx={f.grid.nx} ny={f.grid.ny}\n"
        f"time={time!r}\n"
        f"mu={mu!r} nu={nu!r}\n"
        f"layout=row-major float64 little-endian\n"
    )
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(f.values.astype("<f8").tobytes())
    os.replace(tmp, path)


class SnapshotFormatError(ValueError):
    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


def read_snapshot(path: str | os.PathLike):
    """Read a v1 snapshot; returns (Field2D, time, mu, nu)."""
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0
    lines = []
    for _ in range(5):
        end = data.find(b"\n", offset)
        if end < 0:
            raise SnapshotFormatError("truncated snapshot header", offset)
        lines.append(data[offset:end].decode("ascii", errors="replace"))
        offset = end + 1
    if lines[0] != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"bad magic line {lines[0]!r}", 0)
    try:
        nx = int(lines[1].split()[0].split("=")[1])
        ny = int(lines[1].split()[1].split("=")[1])
    except (IndexError, ValueError):
        raise SnapshotFormatError(f"bad dimensions line {lines[1]!r}", len(lines[0]) + 1)
    try:
        time = float(lines[2].split("=")[1])
        mu = float(lines[3].split()[0].split("=")[1])
        nu = float(lines[3].split()[1].split("=")[1])
    except (IndexError, ValueError):
        raise SnapshotFormatError("bad time/parameter header lines", len(lines[0]) + len(lines[1]) + 2)
    if lines[4] != "layout=row-major float64 little-endian":
        raise SnapshotFormatError(f"bad layout line {lines[4]!r}", offset - len(lines[4]) - 1)
    expected = nx * ny * 8
    payload = data[offset:]
    if len(payload) != expected:
        raise SnapshotFormatError(
            f"payload is {len(payload)} bytes, expected {expected}", offset
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(ny, nx).copy()
    return Field2D(GridSpec(nx=nx, ny=ny), values), time, mu, nu
