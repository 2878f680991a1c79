"""Initial-condition presets.

The "remark-example" preset is the analytic two-mode field
sin(2*pi*x2) + eps*sin(2*pi*x1)*sin(2*pi*x2); the random preset draws a
seeded band-limited mean-zero field, normalized to unit L^2 norm.
"""
from __future__ import annotations

import numpy as np

from achesim import fields as fd
from achesim import spectral
from achesim.spectral import GridSpec

RNG_ALGORITHM = "numpy-pcg64"


def remark_example(grid: GridSpec, eps: float = 0.1) -> fd.Field2D:
    x1, x2 = grid.meshgrid()
    vals = np.sin(2 * np.pi * x2) * (1.0 + eps * np.sin(2 * np.pi * x1))
    return fd.Field2D(grid, vals)


def one_d_only(grid: GridSpec) -> fd.Field2D:
    x2 = grid.x2()
    vals = np.broadcast_to(np.sin(2 * np.pi * x2), grid.shape).copy()
    return fd.Field2D(grid, vals)


def random_bandlimited(grid: GridSpec, seed: int, band: int = 8) -> fd.Field2D:
    """Seeded mean-zero real field with modes |k| <= band, unit L^2 norm."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    hat = np.zeros(grid.shape, dtype=complex)
    k1 = grid.k1()
    k2 = grid.k2()
    mask = (np.abs(k1) <= band) & (np.abs(k2) <= band)
    re = rng.normal(size=grid.shape)
    im = rng.normal(size=grid.shape)
    hat[mask] = re[mask] + 1j * im[mask]
    hat[0, 0] = 0.0
    # enforce conjugate symmetry so the field is real
    vals = spectral.inverse(hat).real
    norm = np.sqrt(np.mean(vals**2))
    if norm == 0.0:
        raise ValueError("degenerate random field")
    return fd.Field2D(grid, vals / norm)


def random_bandlimited_1d(ny: int, seed: int, band: int = 8) -> fd.Field1D:
    rng = np.random.default_rng(np.random.PCG64(seed))
    k = np.fft.fftfreq(ny, d=1.0 / ny).astype(np.int64)
    hat = np.zeros(ny, dtype=complex)
    mask = np.abs(k) <= band
    hat[mask] = rng.normal(size=ny)[mask] + 1j * rng.normal(size=ny)[mask]
    hat[0] = 0.0
    vals = (np.fft.ifft(hat) * ny).real
    norm = np.sqrt(np.mean(vals**2))
    return fd.Field1D(vals / norm)


def make_initial(preset: str, grid: GridSpec, seed: int = 0, eps: float = 0.1,
                 band: int = 8) -> fd.Field2D:
    if preset == "remark-example":
        return remark_example(grid, eps=eps)
    if preset == "one-d-only":
        return one_d_only(grid)
    if preset == "random-bandlimited":
        return random_bandlimited(grid, seed=seed, band=band)
    raise ValueError(f"unknown preset {preset!r}")
