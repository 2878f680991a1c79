"""Discrete Fourier machinery on the unit torus [0,1)^2.

Conventions used throughout the package:

* Field samples are stored as real arrays of shape ``(ny, nx)``: row index
  is the spanwise coordinate x2, column index the streamwise coordinate x1.
* The forward transform carries the 1/(nx*ny) normalization, so the (0,0)
  coefficient equals the spatial average of the field.
* The derivative symbol of order p is (2*pi*i*k)**p; the Nyquist mode is
  zeroed for odd p (reality-preserving convention).
* Cubic products are dealiased by zero padding to a 2x finer grid, cubing
  pointwise and truncating back (full dealiasing for cubic nonlinearities).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from achesim.kernels import cube_inplace

TWO_PI = 2.0 * np.pi


class NonFiniteFieldError(ValueError):
    """Raised when an operation receives non-finite sample values."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform sampling of the unit torus: x_i = i/nx, y_j = j/ny."""

    nx: int
    ny: int

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n < 8 or n % 2 != 0:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def npoints(self) -> int:
        return self.nx * self.ny

    def x1(self) -> np.ndarray:
        """Streamwise coordinates, shape (1, nx) for broadcasting."""
        return (np.arange(self.nx) / self.nx)[None, :]

    def x2(self) -> np.ndarray:
        """Spanwise coordinates, shape (ny, 1) for broadcasting."""
        return (np.arange(self.ny) / self.ny)[:, None]

    def k1(self) -> np.ndarray:
        """Signed integer streamwise wavenumbers, shape (1, nx)."""
        return np.fft.fftfreq(self.nx, d=1.0 / self.nx).astype(np.int64)[None, :]

    def k2(self) -> np.ndarray:
        """Signed integer spanwise wavenumbers, shape (ny, 1)."""
        return np.fft.fftfreq(self.ny, d=1.0 / self.ny).astype(np.int64)[:, None]

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        x1 = np.arange(self.nx) / self.nx
        x2 = np.arange(self.ny) / self.ny
        return np.meshgrid(x1, x2)


def wavenumbers_1d(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteFieldError("non-finite field")


def forward(values: np.ndarray) -> np.ndarray:
    """Normalized forward transform; coefficient (0,0) is the mean."""
    _check_finite(values)
    return sfft.fft2(values) / values.size


def inverse(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`forward`; returns complex samples."""
    return sfft.ifft2(coeffs) * coeffs.size


def to_real(values: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Discard the imaginary residue of a nominally real field.

    The residue must not exceed 1e-12 times the field's sup norm (or the
    supplied scale), which guards against symbol/symmetry bugs upstream.
    """
    if np.iscomplexobj(values):
        ref = scale if scale is not None else max(np.max(np.abs(values)), 1.0)
        resid = np.max(np.abs(values.imag))
        if resid > 1e-12 * max(ref, 1e-300):
            raise ValueError(
                f"imaginary residue {resid:.3e} exceeds tolerance for scale {ref:.3e}"
            )
        return np.ascontiguousarray(values.real)
    return values


def derivative_symbol(n: int, order: int) -> np.ndarray:
    """(2*pi*i*k)**order on n modes, Nyquist zeroed for odd order."""
    if order < 1:
        raise ValueError(f"derivative order must be >= 1, got {order}")
    k = wavenumbers_1d(n).astype(np.float64)
    sym = (TWO_PI * 1j * k) ** order
    if order % 2 == 1:
        sym[n // 2] = 0.0
    return sym


def derivative(values: np.ndarray, axis: str, order: int = 1) -> np.ndarray:
    """Spectral derivative along 'x1' (columns) or 'x2' (rows)."""
    if axis not in ("x1", "x2"):
        raise ValueError(f"axis must be 'x1' or 'x2', got {axis!r}")
    ny, nx = values.shape
    hat = forward(values)
    if axis == "x1":
        hat = hat * derivative_symbol(nx, order)[None, :]
    else:
        hat = hat * derivative_symbol(ny, order)[:, None]
    return to_real(inverse(hat), scale=float(np.max(np.abs(values)) or 1.0) * (TWO_PI * max(nx, ny)) ** order)


def _ksq(grid: GridSpec) -> np.ndarray:
    k1 = grid.k1().astype(np.float64)
    k2 = grid.k2().astype(np.float64)
    return k1 * k1 + k2 * k2


def laplacian_symbol(grid: GridSpec) -> np.ndarray:
    """Symbol of the Laplacian: -4*pi^2*(k1^2+k2^2)."""
    return -4.0 * np.pi**2 * _ksq(grid)


def bilaplacian_symbol(grid: GridSpec) -> np.ndarray:
    """Symbol of the bi-Laplacian: 16*pi^4*(k1^2+k2^2)^2."""
    return 16.0 * np.pi**4 * _ksq(grid) ** 2


def laplacian(values: np.ndarray) -> np.ndarray:
    grid = GridSpec(nx=values.shape[1], ny=values.shape[0])
    return to_real(inverse(forward(values) * laplacian_symbol(grid)))


def bilaplacian(values: np.ndarray) -> np.ndarray:
    grid = GridSpec(nx=values.shape[1], ny=values.shape[0])
    return to_real(inverse(forward(values) * bilaplacian_symbol(grid)))


def _extend_split(hat: np.ndarray) -> np.ndarray:
    """(ny, nx) spectrum -> (ny+1, nx+1) with each Nyquist line split in two.

    Output row order is [k=0..n/2-1, +n/2, -n/2, -(n/2-1)..-1]; the two
    half-weight Nyquist copies keep the padded field real.
    """
    ny, nx = hat.shape
    hy, hx = ny // 2, nx // 2
    rows = np.concatenate(
        [hat[:hy], 0.5 * hat[hy : hy + 1], 0.5 * hat[hy : hy + 1], hat[hy + 1 :]], axis=0
    )
    return np.concatenate(
        [rows[:, :hx], 0.5 * rows[:, hx : hx + 1], 0.5 * rows[:, hx : hx + 1], rows[:, hx + 1 :]],
        axis=1,
    )


def pad_spectrum(hat: np.ndarray) -> np.ndarray:
    """Zero-pad a spectrum to the 2x finer grid, splitting Nyquist modes."""
    ny, nx = hat.shape
    hy, hx = ny // 2, nx // 2
    ext = _extend_split(hat)
    fine = np.zeros((2 * ny, 2 * nx), dtype=complex)
    fine[: hy + 1, : hx + 1] = ext[: hy + 1, : hx + 1]
    fine[: hy + 1, 2 * nx - hx :] = ext[: hy + 1, hx + 1 :]
    fine[2 * ny - hy :, : hx + 1] = ext[hy + 1 :, : hx + 1]
    fine[2 * ny - hy :, 2 * nx - hx :] = ext[hy + 1 :, hx + 1 :]
    return fine


def truncate_spectrum(fine_hat: np.ndarray, ny: int, nx: int) -> np.ndarray:
    """Fold a 2x fine spectrum back onto the coarse mode set."""
    hy, hx = ny // 2, nx // 2
    ext = np.empty((ny + 1, nx + 1), dtype=complex)
    ext[: hy + 1, : hx + 1] = fine_hat[: hy + 1, : hx + 1]
    ext[: hy + 1, hx + 1 :] = fine_hat[: hy + 1, 2 * nx - hx :]
    ext[hy + 1 :, : hx + 1] = fine_hat[2 * ny - hy :, : hx + 1]
    ext[hy + 1 :, hx + 1 :] = fine_hat[2 * ny - hy :, 2 * nx - hx :]
    # fold the +-N/2 pairs back onto the single coarse Nyquist line
    cols = np.concatenate([ext[:, :hx], ext[:, hx : hx + 1] + ext[:, hx + 1 : hx + 2], ext[:, hx + 2 :]], axis=1)
    return np.concatenate([cols[:hy], cols[hy : hy + 1] + cols[hy + 1 : hy + 2], cols[hy + 2 :]], axis=0)


def full_from_half(half: np.ndarray, nx: int) -> np.ndarray:
    """Rebuild a full spectrum from its rfft half via conjugate symmetry.

    ``half`` has shape (ny, nx//2 + 1); valid only for spectra of real
    fields (column 0 and the Nyquist column must be self-symmetric).
    """
    ny = half.shape[0]
    full = np.empty((ny, nx), dtype=complex)
    full[:, : nx // 2 + 1] = half
    seg = np.conj(half[:, 1 : nx // 2])  # kx = 1 .. nx/2-1
    # row ky maps to (-ky) mod ny, column kx to nx-kx
    full[:, nx // 2 + 1 :] = np.roll(seg[::-1, :], 1, axis=0)[:, ::-1]
    return full


class _CubePlan:
    """Reusable buffers for the dealiased cube of one grid shape."""

    def __init__(self, ny: int, nx: int):
        self.ny, self.nx = ny, nx
        self.fine_half = np.zeros((2 * ny, nx + 1), dtype=complex)

    def __call__(self, hat: np.ndarray) -> np.ndarray:
        ny, nx = self.ny, self.nx
        hy, hx = ny // 2, nx // 2
        ext = _extend_split(hat)
        fh = self.fine_half  # gap band and columns beyond hx stay zero
        fh[: hy + 1, : hx + 1] = ext[: hy + 1, : hx + 1]
        fh[2 * ny - hy :, : hx + 1] = ext[hy + 1 :, : hx + 1]
        npts = 4 * nx * ny
        vals = sfft.irfft2(fh, s=(2 * ny, 2 * nx)) * npts
        cube_inplace(vals)
        out = sfft.rfft2(vals) / npts
        # fold the fine +-nx/2 column pair onto the coarse Nyquist column;
        # the -nx/2 column is conj(out[-ky, +nx/2]) by reality
        chalf = out[:, : hx + 1].copy()
        chalf[:, hx] += np.roll(np.conj(out[:, hx])[::-1], 1)
        # fold the fine +-ny/2 row pair onto the coarse Nyquist row
        top, bot = chalf[: hy + 1], chalf[2 * ny - hy :]
        coarse_half = np.concatenate(
            [top[:hy], top[hy : hy + 1] + bot[:1], bot[1:]], axis=0
        )
        return full_from_half(coarse_half, nx)


_cube_plans: dict[tuple[int, int], _CubePlan] = {}


def dealiased_cube_hat(hat: np.ndarray) -> np.ndarray:
    """Spectrum of c^3 restricted to the coarse modes, alias-free.

    ``hat`` must be the spectrum of a real field; the fine-grid transforms
    run in half-spectrum (rfft) form for speed.
    """
    plan = _cube_plans.get(hat.shape)
    if plan is None:
        plan = _cube_plans[hat.shape] = _CubePlan(*hat.shape)
    return plan(hat)


def dealiased_cube(values: np.ndarray) -> np.ndarray:
    """Alias-free spectral truncation of the pointwise cube."""
    hat = forward(values)
    cube_hat = dealiased_cube_hat(hat)
    scale = float(np.max(np.abs(values)) or 1.0) ** 3
    return to_real(inverse(cube_hat), scale=max(scale, 1.0))
