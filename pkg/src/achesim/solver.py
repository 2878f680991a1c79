"""ETDRK2 time integration of the advective Cahn-Hilliard equation.

The stiff diagonal symbol (hyperdiffusion plus a stabilization shift) is
integrated exactly; the cubic term, advection and the antidiffusive part
are explicit. State is carried in spectral space; the mean mode is re-pinned
to its initial value every step.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from achesim import fields as fd
from achesim import spectral
from achesim.kernels import cube_inplace, etdrk2_stage1, etdrk2_stage2
from achesim.shear import ShearProfile, make_profile
from achesim.spectral import GridSpec

FOUR_PI2 = 4.0 * np.pi**2
SIXTEEN_PI4 = 16.0 * np.pi**4


class BlowUpError(RuntimeError):
    def __init__(self, time: float, step: int, snapshot_path: str | None = None):
        msg = f"blow-up detected at t={time:.6g}, step {step}"
        if snapshot_path:
            msg += f"; last finite snapshot: {snapshot_path}"
        super().__init__(msg)
        self.time = time
        self.step = step
        self.snapshot_path = snapshot_path


@dataclass(frozen=True)
class SolverConfig:
    mu: float
    nu: float
    grid: GridSpec
    dt: float
    t_end: float
    stabilization: float = 2.0
    snapshot_stride: int = 1000
    series_stride: int = 10
    cube_disabled: bool = False
    pin_mean: bool = True
    record_lap_perp: bool = True

    def __post_init__(self):
        for name in ("mu", "nu", "dt"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.stabilization < 0:
            raise ValueError("stabilization must be >= 0")
        if self.snapshot_stride < 1 or self.series_stride < 1:
            raise ValueError("strides must be positive integers")

    def dt_cfl(self, profile: ShearProfile) -> float:
        vmax = max(1.0, profile.sup_norm())
        return 0.5 * min(1.0 / self.grid.nx, 1.0 / self.grid.ny) / vmax

    def validate_cfl(self, profile: ShearProfile) -> None:
        limit = self.dt_cfl(profile)
        if self.dt > limit * (1 + 1e-12):
            raise ValueError(f"dt={self.dt:g} exceeds advective CFL limit {limit:g}")


@dataclass
class SimState:
    time: float
    field: fd.Field2D
    step_index: int


def phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z with a series branch near 0."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = 1.0 + zs / 2.0 + zs**2 / 6.0 + zs**3 / 24.0 + zs**4 / 120.0
    zl = z[~small]
    out[~small] = np.expm1(zl) / zl
    return out


def phi2(z: np.ndarray) -> np.ndarray:
    """(e^z - 1 - z)/z^2 with a series branch near 0."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = 0.5 + zs / 6.0 + zs**2 / 24.0 + zs**3 / 120.0 + zs**4 / 720.0
    zl = z[~small]
    out[~small] = (np.expm1(zl) - zl) / zl**2
    return out


class Etdrk2Stepper:
    """One ETDRK2 step of the 2D equation in spectral space."""

    def __init__(self, config: SolverConfig, profile: ShearProfile):
        config.validate_cfl(profile)
        self.config = config
        self.profile = profile
        grid = config.grid
        mu, nu, s, dt = config.mu, config.nu, config.stabilization, config.dt
        k1 = grid.k1().astype(np.float64)
        k2 = grid.k2().astype(np.float64)
        ksq = k1 * k1 + k2 * k2
        self._lap = -FOUR_PI2 * ksq  # Laplacian symbol
        hyper = -mu * nu * SIXTEEN_PI4 * ksq**2
        if config.cube_disabled:
            # fold the full linear RHS into L: exact integrating factor
            L = hyper - nu * self._lap
        else:
            L = hyper + s * nu * self._lap
        self._E = np.ascontiguousarray(np.exp(dt * L), dtype=complex)
        self._phi1dt = np.ascontiguousarray(dt * phi1(dt * L), dtype=complex)
        self._phi2dt = np.ascontiguousarray(dt * phi2(dt * L), dtype=complex)
        self._v = profile.sample_values(grid.ny)[:, None]
        self._dx1 = spectral.derivative_symbol(grid.nx, 1)[None, :]
        self._has_advection = bool(np.any(self._v != 0.0))
        self._nu_lap = nu * self._lap
        # spanwise Fourier coefficients of v: the grid product v*w is the
        # circular convolution of these with w_hat along k2, so a profile
        # with few modes can skip the transform round-trip entirely
        vhat = np.fft.fft(self.profile.sample_values(grid.ny)) / grid.ny
        keep = np.abs(vhat) > 1e-13 * max(float(np.max(np.abs(vhat))), 1e-300)
        self._v_modes = [(int(n), complex(vhat[n])) for n in np.nonzero(keep)[0]]
        self._scratch = np.empty(grid.shape, dtype=complex)
        self._scratch2 = np.empty(grid.shape, dtype=complex)
        # conjugate-symmetry enforcement: the nonlinear term is evaluated on
        # the real field, so the anti-Hermitian (non-real) component of the
        # state never feels the cube and would evolve under the linearization
        # about c = 0, which is spinodally unstable at |k| = 1. Roundoff
        # seeds that component; projecting back onto Hermitian spectra every
        # step removes it exactly without touching the physical solution.
        self._conj_rows = (-np.arange(grid.ny)) % grid.ny
        self._conj_cols = (-np.arange(grid.nx)) % grid.nx
        self.last_pin_drift = 0.0
        self.max_pin_drift = 0.0

    def _advection_hat(self, hat: np.ndarray) -> np.ndarray:
        """Spectrum of v*d(c)/dx1 on the grid (circular k2 convolution)."""
        dc_hat = hat * self._dx1
        if len(self._v_modes) <= 8:
            out = np.zeros_like(dc_hat)
            for n, coeff in self._v_modes:
                out += coeff * np.roll(dc_hat, n, axis=0)
            return out
        dc = sfft.ifft2(dc_hat) * hat.size
        return sfft.fft2(self._v * dc.real) / hat.size

    def nonlinear(self, hat: np.ndarray) -> np.ndarray:
        """Explicit RHS in spectral space."""
        cfg = self.config
        if cfg.cube_disabled:
            nl = np.zeros_like(hat)
        else:
            # nu*Lap(c^3 - c) - s*nu*Lap(c)  (the shift cancels the one in L)
            nl = spectral.dealiased_cube_hat(hat)
            nl -= (1.0 + cfg.stabilization) * hat
            nl *= self._nu_lap
        if self._has_advection:
            nl -= self._advection_hat(hat)
        return nl

    def step_hat(self, hat: np.ndarray, mean_target: complex) -> np.ndarray:
        """Advance one step; the returned buffer is reused by the next call."""
        n1 = self.nonlinear(hat)
        a = self._scratch
        etdrk2_stage1(self._E, self._phi1dt, hat, n1, a)
        n2 = self.nonlinear(a)
        out = self._scratch2
        etdrk2_stage2(a, self._phi2dt, n1, n2, out)
        if self.config.pin_mean:
            self.last_pin_drift = abs(out[0, 0] - mean_target)
            if self.last_pin_drift > self.max_pin_drift:
                self.max_pin_drift = self.last_pin_drift
            out[0, 0] = mean_target
        flipped = np.conj(out[np.ix_(self._conj_rows, self._conj_cols)])
        out += flipped
        out *= 0.5
        return out


def step(state: SimState, config: SolverConfig, profile: ShearProfile) -> SimState:
    """Advance a single ETDRK2 step (convenience wrapper)."""
    stepper = Etdrk2Stepper(config, profile)
    hat = spectral.forward(state.field.values)
    new_hat = stepper.step_hat(hat, hat[0, 0])
    vals = spectral.to_real(spectral.inverse(new_hat),
                            scale=max(fd.linf_norm(state.field), 1.0))
    if not np.all(np.isfinite(vals)):
        raise BlowUpError(state.time + config.dt, state.step_index + 1)
    return SimState(time=state.time + config.dt,
                    field=fd.Field2D(config.grid, vals),
                    step_index=state.step_index + 1)


@dataclass
class RunSinks:
    """Output hooks for a run; all optional."""

    series_writer: object | None = None  # callable(record_dict)
    snapshot_dir: str | None = None
    max_drift_out: list = field(default_factory=list)


def _hat_to_field(hat: np.ndarray, grid: GridSpec) -> fd.Field2D:
    vals = sfft.ifft2(hat).real * hat.size
    return fd.Field2D(grid, vals)


def run(config: SolverConfig, initial: fd.Field2D, profile: ShearProfile,
        sinks: RunSinks | None = None, record_fn=None) -> SimState:
    """Integrate to t_end, emitting series rows and snapshots on stride.

    record_fn(state, config, profile) -> dict supplies the series row; the
    default is diagnostics.compute_record. Deterministic given inputs.
    """
    from achesim import diagnostics  # local import to avoid a cycle

    if record_fn is None:
        record_fn = diagnostics.compute_record
    sinks = sinks or RunSinks()
    stepper = Etdrk2Stepper(config, profile)
    hat = np.ascontiguousarray(spectral.forward(initial.values))
    mean_target = hat[0, 0]
    n_steps = int(round(config.t_end / config.dt))
    state = SimState(time=0.0, field=initial, step_index=0)

    def emit(state: SimState) -> None:
        if sinks.series_writer is not None:
            sinks.series_writer(record_fn(state, config, profile))
        if sinks.snapshot_dir is not None and state.step_index % config.snapshot_stride == 0:
            path = os.path.join(sinks.snapshot_dir, f"snap_{state.step_index:08d}.dat")
            fd.write_snapshot(path, state.field, state.time, config.mu, config.nu)

    emit(state)
    last_snapshot = None
    for i in range(1, n_steps + 1):
        hat = stepper.step_hat(hat, mean_target)
        if not np.all(np.isfinite(hat)):
            raise BlowUpError(i * config.dt, i, last_snapshot)
        if i % config.series_stride == 0 or i % config.snapshot_stride == 0 or i == n_steps:
            t = i * config.dt
            state = SimState(time=t, field=_hat_to_field(hat, config.grid), step_index=i)
            if i % config.series_stride == 0 or i == n_steps:
                if sinks.series_writer is not None:
                    sinks.series_writer(record_fn(state, config, profile))
            if sinks.snapshot_dir is not None and i % config.snapshot_stride == 0:
                path = os.path.join(sinks.snapshot_dir, f"snap_{i:08d}.dat")
                fd.write_snapshot(path, state.field, t, config.mu, config.nu)
                last_snapshot = path
    sinks.max_drift_out.append(stepper.max_pin_drift)
    if state.step_index != n_steps:
        state = SimState(time=n_steps * config.dt, field=_hat_to_field(hat, config.grid),
                         step_index=n_steps)
    return state


class Etdrk1dStepper:
    """Same scheme restricted to functions of x2 (no advection)."""

    def __init__(self, config: SolverConfig, ny: int | None = None):
        self.config = config
        ny = ny or config.grid.ny
        self.ny = ny
        mu, nu, s, dt = config.mu, config.nu, config.stabilization, config.dt
        k = np.fft.fftfreq(ny, d=1.0 / ny)
        ksq = k * k
        self._lap = -FOUR_PI2 * ksq
        hyper = -mu * nu * SIXTEEN_PI4 * ksq**2
        if config.cube_disabled:
            L = hyper - nu * self._lap
        else:
            L = hyper + s * nu * self._lap
        self._E = np.exp(dt * L).astype(complex)
        self._phi1dt = (dt * phi1(dt * L)).astype(complex)
        self._phi2dt = (dt * phi2(dt * L)).astype(complex)

    def _cube_hat(self, hat: np.ndarray) -> np.ndarray:
        n = hat.shape[0]
        hs = np.fft.fftshift(hat)
        ext = np.zeros(n + 1, dtype=complex)
        ext[:n] = hs
        ext[n] = hs[0]
        ext[0] *= 0.5
        ext[n] *= 0.5
        fine = np.zeros(2 * n, dtype=complex)
        r0 = n - n // 2
        fine[r0 : r0 + n + 1] = ext
        fine = np.fft.ifftshift(fine)
        vals = (np.fft.ifft(fine) * (2 * n)).real
        fh = np.fft.fft(vals**3) / (2 * n)
        fs = np.fft.fftshift(fh)
        extt = fs[r0 : r0 + n + 1].copy()
        extt[0] += extt[n]
        return np.fft.ifftshift(extt[:n])

    def nonlinear(self, hat: np.ndarray) -> np.ndarray:
        cfg = self.config
        if cfg.cube_disabled:
            return np.zeros_like(hat)
        cube_hat = self._cube_hat(hat)
        return cfg.nu * self._lap * (cube_hat - (1.0 + cfg.stabilization) * hat)

    def step_hat(self, hat: np.ndarray, mean_target: complex) -> np.ndarray:
        n1 = self.nonlinear(hat)
        a = self._E * hat + self._phi1dt * n1
        n2 = self.nonlinear(a)
        out = a + self._phi2dt * (n2 - n1)
        if self.config.pin_mean:
            out[0] = mean_target
        # project onto Hermitian spectra (same rationale as the 2D stepper)
        flipped = np.conj(out[(-np.arange(self.ny)) % self.ny])
        out += flipped
        out *= 0.5
        return out


def solve_1d(config: SolverConfig, initial: fd.Field1D, record_every: int | None = None):
    """Integrate the 1D spanwise equation; returns (records, final Field1D).

    records is a list of (t, Field1D) sampled on series_stride (or the
    supplied stride).
    """
    stride = record_every or config.series_stride
    stepper = Etdrk1dStepper(config, ny=initial.ny)
    hat = np.fft.fft(initial.values) / initial.ny
    mean_target = hat[0]
    n_steps = int(round(config.t_end / config.dt))
    records = [(0.0, initial)]
    for i in range(1, n_steps + 1):
        hat = stepper.step_hat(hat, mean_target)
        if not np.all(np.isfinite(hat)):
            raise BlowUpError(i * config.dt, i)
        if i % stride == 0 or i == n_steps:
            vals = (np.fft.ifft(hat) * initial.ny).real
            records.append((i * config.dt, fd.Field1D(vals)))
    return records, records[-1][1]


@dataclass
class ConvergenceResult:
    order: float
    exact: bool
    dts: np.ndarray
    errors: np.ndarray


def convergence_order(config: SolverConfig, profile: ShearProfile,
                      initial: fd.Field2D, levels: int = 4,
                      t_final: float | None = None) -> ConvergenceResult:
    """Observed temporal order against a dt/16 self-reference."""
    t_final = t_final if t_final is not None else config.t_end

    def final_values(dt: float) -> np.ndarray:
        cfg = replace(config, dt=dt, t_end=t_final,
                      series_stride=10**9, snapshot_stride=10**9)
        stepper = Etdrk2Stepper(cfg, profile)
        hat = np.ascontiguousarray(spectral.forward(initial.values))
        mean_target = hat[0, 0]
        for _ in range(int(round(t_final / dt))):
            hat = stepper.step_hat(hat, mean_target)
        return sfft.ifft2(hat).real * hat.size

    dts = np.array([config.dt / 2**j for j in range(levels)])
    ref = final_values(config.dt / 16)
    errors = np.array([
        np.sqrt(np.mean((final_values(dt) - ref) ** 2)) for dt in dts
    ])
    floor = 1e-13 * max(1.0, float(np.max(np.abs(ref))))
    if np.all(errors < floor):
        return ConvergenceResult(order=float("nan"), exact=True, dts=dts, errors=errors)
    if np.any(np.diff(np.log(errors)) > 0):
        # dts descend, so errors must descend monotonically too
        raise RuntimeError("not in asymptotic regime")
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    return ConvergenceResult(order=float(slope), exact=False, dts=dts, errors=errors)
