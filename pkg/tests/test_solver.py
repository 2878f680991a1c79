"""ETDRK2 stepping: exactness, conservation, 1D/2D consistency, convergence."""
import math

import numpy as np
import pytest
import scipy.fft as sfft

from achesim import fields as fd
from achesim import solver as sv
from achesim import spectral
from achesim.presets import one_d_only, random_bandlimited, random_bandlimited_1d
from achesim.shear import make_profile
from achesim.spectral import GridSpec

FOUR_PI2 = 4.0 * np.pi**2
SIXTEEN_PI4 = 16.0 * np.pi**4


def _cfg(**kw):
    base = dict(mu=1e-2, nu=1e-2, grid=GridSpec(32, 32), dt=1e-2, t_end=0.1,
                series_stride=10**9, snapshot_stride=10**9)
    base.update(kw)
    return sv.SolverConfig(**base)


class TestPhiFunctions:
    @pytest.mark.parametrize("z", [-3.0, -1.0, -1e-3, 1e-3, 1.0, 3.0])
    def test_phi1_exact(self, z):
        got = sv.phi1(np.array([z]))[0]
        assert abs(got - np.expm1(z) / z) < 1e-12

    @pytest.mark.parametrize("z", [-3.0, -1.0, 1.0, 3.0])
    def test_phi2_exact(self, z):
        got = sv.phi2(np.array([z]))[0]
        assert abs(got - (np.expm1(z) - z) / z**2) < 1e-12

    def test_series_branch_matches_formula(self):
        # inside the series branch the value must still match the formula
        z = 9.999e-5
        assert abs(sv.phi1(np.array([z]))[0] - np.expm1(z) / z) < 1e-13
        assert abs(sv.phi2(np.array([z]))[0] - (np.expm1(z) - z) / z**2) < 1e-10

    def test_phi_at_zero_limits(self):
        assert abs(sv.phi1(np.array([0.0]))[0] - 1.0) < 1e-15
        assert abs(sv.phi2(np.array([0.0]))[0] - 0.5) < 1e-15


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(mu=0.0), dict(nu=-1.0), dict(dt=0.0),
                                    dict(t_end=-1.0), dict(stabilization=-0.1),
                                    dict(series_stride=0)])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValueError):
            _cfg(**kw)

    def test_cfl_limit(self):
        cfg = _cfg(dt=0.02)  # limit for unit-amplitude shear on 32^2 is 0.015625
        with pytest.raises(ValueError, match="CFL"):
            cfg.validate_cfl(make_profile("sin"))

    def test_cfl_scales_with_amplitude(self):
        cfg = _cfg()
        assert abs(cfg.dt_cfl(make_profile("sin", amplitude=2.0)) - 0.5 / 64) < 1e-15


class TestLinearExactness:
    def test_cube_disabled_matches_symbol_exactly(self):
        # with the cube off and no shear the scheme is an exact integrating
        # factor: hat(t) = exp(t * (-mu*nu*(2pi k)^4 + nu*(2pi k)^2)) hat(0)
        cfg = _cfg(cube_disabled=True, dt=1e-2, t_end=0.5)
        grid = cfg.grid
        x2 = grid.x2()
        initial = fd.Field2D(grid, np.broadcast_to(
            np.sin(2 * np.pi * x2) + 0.3 * np.cos(6 * np.pi * x2), grid.shape).copy())
        final = sv.run(cfg, initial, make_profile("zero"))
        k = np.array([1.0, 3.0])
        amps = np.array([1.0, 0.3])
        L = -cfg.mu * cfg.nu * SIXTEEN_PI4 * k**4 + cfg.nu * FOUR_PI2 * k**2
        x2v = np.ravel(x2)
        want = (amps[0] * math.exp(L[0] * 0.5) * np.sin(2 * np.pi * x2v)
                + amps[1] * math.exp(L[1] * 0.5) * np.cos(6 * np.pi * x2v))
        got = final.field.values[:, 0]
        assert np.max(np.abs(got - want)) < 1e-12 * max(1.0, np.max(np.abs(want)))

    def test_advection_roll_path_matches_fft_route(self):
        cfg = _cfg()
        stepper = sv.Etdrk2Stepper(cfg, make_profile("sin"))
        hat = spectral.forward(random_bandlimited(cfg.grid, seed=11).values)
        got = stepper._advection_hat(hat)
        dc = sfft.ifft2(hat * stepper._dx1) * hat.size
        ref = sfft.fft2(stepper._v * dc.real) / hat.size
        assert np.max(np.abs(got - ref)) < 1e-14

    def test_advection_alone_preserves_l2(self):
        # pure transport is an isometry; one tiny explicit step should
        # change the norm only at O(dt^3)
        grid = GridSpec(64, 64)
        cfg = sv.SolverConfig(mu=1e-12, nu=1e-12, grid=grid, dt=1e-4, t_end=1e-4,
                              cube_disabled=True, series_stride=10**9,
                              snapshot_stride=10**9)
        initial = random_bandlimited(grid, seed=3, band=4)
        final = sv.run(cfg, initial, make_profile("sin"))
        n0 = fd.l2_norm(initial)
        n1 = fd.l2_norm(final.field)
        assert abs(n1 - n0) < 1e-9 * n0


class TestConservation:
    def test_mass_pinned(self):
        cfg = _cfg(dt=1e-2, t_end=0.3, series_stride=5)
        initial = random_bandlimited(cfg.grid, seed=5)
        shifted = fd.Field2D(cfg.grid, initial.values + 0.2)
        rows = []
        sinks = sv.RunSinks(series_writer=rows.append)
        sv.run(cfg, shifted, make_profile("sin"), sinks=sinks)
        masses = [r["mass"] for r in rows]
        assert all(abs(m - 0.2) < 1e-13 for m in masses)
        assert len(sinks.max_drift_out) == 1
        assert sinks.max_drift_out[0] < 1e-10

    def test_zero_is_steady(self):
        cfg = _cfg(t_end=0.2)
        zero = fd.Field2D(cfg.grid, np.zeros(cfg.grid.shape))
        final = sv.run(cfg, zero, make_profile("sin"))
        assert np.max(np.abs(final.field.values)) < 1e-14

    def test_uniform_pm1_steady(self):
        # c = 1 solves nu*Lap(c^3 - c) = 0 with no advection contribution
        cfg = _cfg(t_end=0.2)
        one = fd.Field2D(cfg.grid, np.ones(cfg.grid.shape))
        final = sv.run(cfg, one, make_profile("sin"))
        assert np.max(np.abs(final.field.values - 1.0)) < 1e-12


class TestSeriesEmission:
    def test_stride_and_final_row(self):
        cfg = _cfg(dt=1e-2, t_end=0.1, series_stride=3)
        rows = []
        sv.run(cfg, one_d_only(cfg.grid), make_profile("sin"),
               sinks=sv.RunSinks(series_writer=rows.append))
        ts = [r["t"] for r in rows]
        assert ts[0] == 0.0
        assert abs(ts[-1] - 0.1) < 1e-12
        assert abs(ts[1] - 0.03) < 1e-12

    def test_snapshots_written(self, tmp_path):
        cfg = _cfg(dt=1e-2, t_end=0.05, snapshot_stride=2, series_stride=10**9)
        sv.run(cfg, one_d_only(cfg.grid), make_profile("sin"),
               sinks=sv.RunSinks(snapshot_dir=str(tmp_path)))
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["snap_00000000.dat", "snap_00000002.dat", "snap_00000004.dat"]
        f, t, mu, nu = fd.read_snapshot(tmp_path / "snap_00000004.dat")
        assert abs(t - 0.04) < 1e-12
        assert (mu, nu) == (cfg.mu, cfg.nu)


class TestBlowUp:
    def test_blowup_reported_with_time(self):
        cfg = _cfg(dt=1e-2, t_end=5.0)
        big = fd.Field2D(cfg.grid, 50.0 * random_bandlimited(cfg.grid, seed=9).values)
        with pytest.raises(sv.BlowUpError) as exc:
            sv.run(cfg, big, make_profile("sin"))
        assert exc.value.time > 0.0
        assert "t=" in str(exc.value)


class TestOneDimensional:
    def test_2d_run_of_x2_data_matches_1d_solver(self):
        # data independent of x1 stays so: v(x2) d/dx1 c = 0 and the
        # nonlinearity preserves the symmetry, reducing to the 1D equation
        cfg = _cfg(dt=5e-3, t_end=0.5)
        initial2d = one_d_only(cfg.grid)
        final2d = sv.run(cfg, initial2d, make_profile("sin"))
        _, final1d = sv.solve_1d(cfg, fd.Field1D(initial2d.values[:, 0]))
        diff = final2d.field.values[:, 0] - final1d.values
        assert np.max(np.abs(diff)) < 1e-11
        # the 2D field stayed x1-independent
        spread = final2d.field.values.max(axis=1) - final2d.field.values.min(axis=1)
        assert np.max(spread) < 1e-11

    def test_1d_mass_pinned(self):
        cfg = _cfg(dt=5e-3, t_end=0.2)
        initial = random_bandlimited_1d(32, seed=4)
        shifted = fd.Field1D(initial.values + 0.1)
        records, final = sv.solve_1d(cfg, shifted)
        assert abs(np.mean(final.values) - 0.1) < 1e-13
        assert records[0][0] == 0.0 and abs(records[-1][0] - 0.2) < 1e-12


class TestConvergence:
    def test_exact_flag_for_pure_linear_flow(self):
        cfg = _cfg(cube_disabled=True, dt=1e-2, t_end=0.08)
        res = sv.convergence_order(cfg, make_profile("zero"), one_d_only(cfg.grid),
                                   levels=3, t_final=0.08)
        assert res.exact
        assert math.isnan(res.order)

    def test_second_order_small_case(self):
        cfg = _cfg(dt=8e-3, t_end=0.128)
        initial = random_bandlimited(cfg.grid, seed=2, band=4)
        res = sv.convergence_order(cfg, make_profile("sin"), initial, levels=3,
                                   t_final=0.128)
        assert not res.exact
        assert abs(res.order - 2.0) < 0.35
