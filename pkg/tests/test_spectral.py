"""Fourier machinery: transforms, symbols, padding and the dealiased cube."""
import numpy as np
import pytest
import scipy.fft as sfft

from achesim import spectral as sp
from achesim.spectral import GridSpec, NonFiniteFieldError


def _rand(ny, nx, seed=0):
    return np.random.default_rng(seed).normal(size=(ny, nx))


class TestGridSpec:
    def test_shape_and_points(self):
        g = GridSpec(32, 16)
        assert g.shape == (16, 32)
        assert g.npoints == 512

    @pytest.mark.parametrize("nx,ny", [(7, 16), (16, 7), (6, 16), (16, 0), (9, 9)])
    def test_rejects_odd_or_small(self, nx, ny):
        with pytest.raises(ValueError):
            GridSpec(nx, ny)

    def test_wavenumber_ranges(self):
        g = GridSpec(8, 8)
        assert sorted(g.k1().ravel()) == [-4, -3, -2, -1, 0, 1, 2, 3]


class TestTransforms:
    def test_roundtrip(self):
        v = _rand(32, 16)
        back = sp.to_real(sp.inverse(sp.forward(v)))
        assert np.max(np.abs(back - v)) < 1e-13

    def test_zero_mode_is_mean(self):
        v = _rand(16, 16, seed=3) + 2.5
        assert abs(sp.forward(v)[0, 0] - np.mean(v)) < 1e-13

    def test_nonfinite_rejected(self):
        v = _rand(16, 16)
        v[3, 4] = np.nan
        with pytest.raises(NonFiniteFieldError):
            sp.forward(v)

    def test_to_real_guards_residue(self):
        with pytest.raises(ValueError, match="imaginary residue"):
            sp.to_real(np.full((8, 8), 1.0 + 1e-3j))


class TestDerivatives:
    def test_sin_derivative_exact(self):
        g = GridSpec(32, 32)
        x1, x2 = g.meshgrid()
        f = np.sin(2 * np.pi * x1)
        df = sp.derivative(f, "x1", 1)
        assert np.max(np.abs(df - 2 * np.pi * np.cos(2 * np.pi * x1))) < 1e-11

    def test_axis_x2(self):
        g = GridSpec(32, 32)
        _, x2 = g.meshgrid()
        f = np.cos(4 * np.pi * x2)
        d2 = sp.derivative(f, "x2", 2)
        assert np.max(np.abs(d2 + (4 * np.pi) ** 2 * f)) < 1e-9

    def test_nyquist_zeroed_for_odd_order(self):
        sym = sp.derivative_symbol(16, 1)
        assert sym[8] == 0.0
        sym2 = sp.derivative_symbol(16, 2)
        assert sym2[8] != 0.0

    def test_laplacian_matches_symbol(self):
        g = GridSpec(16, 16)
        x1, x2 = g.meshgrid()
        f = np.sin(2 * np.pi * x1) * np.cos(2 * np.pi * x2)
        lap = sp.laplacian(f)
        assert np.max(np.abs(lap + 8 * np.pi**2 * f)) < 1e-10

    def test_bilaplacian_is_laplacian_squared(self):
        v = _rand(16, 16, seed=5)
        assert np.max(np.abs(sp.bilaplacian(v) - sp.laplacian(sp.laplacian(v)))) < 1e-7


class TestPadding:
    def test_pad_truncate_roundtrip(self):
        hat = sp.forward(_rand(32, 16, seed=1))
        fine = sp.pad_spectrum(hat)
        assert fine.shape == (64, 32)
        back = sp.truncate_spectrum(fine, 32, 16)
        assert np.max(np.abs(back - hat)) < 1e-15

    def test_padded_field_is_real(self):
        hat = sp.forward(_rand(16, 16, seed=2))
        fine = sp.pad_spectrum(hat)
        vals = sfft.ifft2(fine) * fine.size
        assert np.max(np.abs(vals.imag)) < 1e-13

    def test_pad_preserves_values_on_coarse_points(self):
        # the padded interpolant must agree with the original samples
        v = _rand(16, 16, seed=4)
        fine = sp.pad_spectrum(sp.forward(v))
        vals = (sfft.ifft2(fine) * fine.size).real
        assert np.max(np.abs(vals[::2, ::2] - v)) < 1e-12

    def test_full_from_half(self):
        v = _rand(16, 16, seed=6)
        half = sfft.rfft2(v) / v.size
        full = sp.full_from_half(half, 16)
        assert np.max(np.abs(full - sp.forward(v))) < 1e-15


class TestDealiasedCube:
    def test_sin_cubed_identity(self):
        # sin^3(t) = (3 sin t - sin 3t) / 4
        g = GridSpec(32, 32)
        _, x2 = g.meshgrid()
        f = np.sin(2 * np.pi * x2)
        got = sp.dealiased_cube(f)
        want = (3 * np.sin(2 * np.pi * x2) - np.sin(6 * np.pi * x2)) / 4.0
        assert np.max(np.abs(got - want)) < 1e-13

    def test_matches_fine_grid_oracle(self):
        # independent oracle: evaluate the cube on a 4x grid and truncate
        g = GridSpec(32, 32)
        rng = np.random.default_rng(7)
        hat = np.zeros(g.shape, dtype=complex)
        k1, k2 = g.k1(), g.k2()
        band = (np.abs(k1) <= 5) & (np.abs(k2) <= 5)
        hat[band] = rng.normal(size=g.shape)[band] + 1j * rng.normal(size=g.shape)[band]
        hat[0, 0] = 0.0
        v = sp.inverse(hat).real  # symmetrize: keep the real part only
        hat = sp.forward(v)

        fine = sp.pad_spectrum(sp.pad_spectrum(hat))  # 4x padding
        vals = (sfft.ifft2(fine) * fine.size).real
        oracle = sp.truncate_spectrum(sp.truncate_spectrum(sfft.fft2(vals**3) / vals.size, 64, 64), 32, 32)

        got = sp.dealiased_cube_hat(hat)
        assert np.max(np.abs(got - oracle)) < 1e-11

    def test_matches_reference_path(self):
        from achesim.kernels import cube_inplace
        hat = sp.forward(_rand(32, 48, seed=8))
        fine = sp.pad_spectrum(hat)
        vals = np.ascontiguousarray((sfft.ifft2(fine) * fine.size).real)
        cube_inplace(vals)
        ref = sp.truncate_spectrum(sfft.fft2(vals) / vals.size, 32, 48)
        assert np.max(np.abs(sp.dealiased_cube_hat(hat) - ref)) < 1e-14

    def test_constant_field(self):
        g = GridSpec(16, 16)
        f = np.full(g.shape, 0.5)
        assert np.max(np.abs(sp.dealiased_cube(f) - 0.125)) < 1e-14
