"""Linear semigroup analysis of H = mu*nu*Lap^2 + v(x2)*d/dx1.

The operator block-diagonalizes over the streamwise wavenumber k1. Each
nonzero-k1 block is a dense complex matrix over the spanwise modes; its
matrix exponential gives the decay curve ||exp(-tH)|| per sector, and the
fitted envelope rate of the sup over sectors is the measured enhanced
dissipation rate. Sweeping the diffusivity and regressing log(rate) against
log(nu) produces the scaling exponent, to be compared with 2m/(2m+1).
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from achesim.shear import ShearProfile, critical_points

FOUR_PI2 = 4.0 * np.pi**2
SIXTEEN_PI4 = 16.0 * np.pi**4


class KernelSectorError(ValueError):
    """k1 = 0 is the advection kernel; no enhancement there."""


@dataclass(frozen=True)
class OperatorBlock:
    k1: int
    mu_nu: float
    modes: np.ndarray  # spanwise wavenumbers, ascending
    matrix: np.ndarray  # dense complex (M, M)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass
class DecayCurve:
    times: np.ndarray
    norms_per_block: dict[int, np.ndarray]
    sup_norms: np.ndarray


@dataclass
class RateFit:
    lam: float  # rate at the smallest nu of the sweep (see per_nu)
    delta0: float
    exponent: float
    exponent_predicted: float | None
    m: int | None
    nu_grid: np.ndarray
    rates: np.ndarray  # fitted rate per nu


@dataclass
class BoundReport:
    lam: float
    prefactor: float
    trials: int
    violations: int
    worst_margin: float  # min over samples of prefactor*exp(-lam t) - ||e^{-tH}g||


def profile_fourier_coefficients(profile: ShearProfile, n_max: int) -> dict[int, complex]:
    """Fourier coefficients v_hat(n), |n| <= n_max, mean convention 1/N sum."""
    n_samp = 4 * max(64, 2 * n_max)
    x = np.arange(n_samp) / n_samp
    hat = np.fft.fft(np.asarray(profile(x), dtype=np.float64)) / n_samp
    out = {}
    for n in range(-n_max, n_max + 1):
        out[n] = complex(hat[n % n_samp])
    return out


def build_block(profile: ShearProfile, k1: int, mu_nu: float, M: int) -> OperatorBlock:
    """Dense matrix of H restricted to the k1 streamwise sector.

    Entry (row k2, col k2') = mu_nu*16*pi^4*(k1^2+k2^2)^2 * delta
                              + 2*pi*i*k1 * v_hat(k2 - k2').
    """
    if k1 == 0:
        raise KernelSectorError("kernel sector; no enhancement")
    if M < 32 or M % 2 != 0:
        raise ValueError(f"M must be even and >= 32, got {M}")
    if mu_nu < 0:
        raise ValueError(f"mu_nu must be >= 0, got {mu_nu}")
    modes = np.arange(-M // 2, M // 2)
    vhat = profile_fourier_coefficients(profile, n_max=M)
    diff = modes[:, None] - modes[None, :]
    adv = np.zeros((M, M), dtype=complex)
    vmax = max(abs(c) for c in vhat.values())
    floor = 1e-13 * vmax  # drop FFT roundoff noise so sparsity is exact
    for n, c in vhat.items():
        if abs(c) > floor:
            adv[diff == n] = c
    matrix = (2j * np.pi * k1) * adv
    matrix[np.arange(M), np.arange(M)] += mu_nu * SIXTEEN_PI4 * (k1**2 + modes**2) ** 2
    return OperatorBlock(k1=k1, mu_nu=mu_nu, modes=modes, matrix=matrix)


def semigroup_norm(block: OperatorBlock, t: float) -> float:
    """Operator 2-norm of exp(-t*H_block) via scaling-and-squaring."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 1.0
    expm = scipy.linalg.expm(-t * block.matrix)
    if not np.all(np.isfinite(expm)):
        raise OverflowError("exponential out of range")
    return float(np.linalg.norm(expm, 2))


def sup_norm(blocks, t: float) -> float:
    return max(semigroup_norm(b, t) for b in blocks)


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _marched_norms(block: OperatorBlock, steps: np.ndarray, tau: float,
                   floor_exit: float = 1e-13) -> np.ndarray:
    """Norms ||exp(-n*tau*H)|| at the given step counts (ascending).

    Computes exp(-tau*H) once and reaches each step count by binary
    powering, so every value is a product of exact exponentials rather
    than a time-stepping approximation. H is accretive, so every factor
    is a contraction and the products are numerically stable. Once a
    sector's norm falls below floor_exit the remaining entries are
    reported as 0.0 (below any fitting floor).
    """
    base = scipy.linalg.expm(-tau * block.matrix)
    if not np.all(np.isfinite(base)):
        raise OverflowError("exponential out of range")
    pows = [base]  # pows[j] = base^(2^j)

    def advance(mat: np.ndarray, gap: int) -> np.ndarray:
        j = 0
        while gap:
            if j == len(pows):
                pows.append(pows[-1] @ pows[-1])
            if gap & 1:
                mat = mat @ pows[j]
            gap >>= 1
            j += 1
        return mat

    norms = np.zeros(len(steps))
    cur = None
    cur_n = 0
    last = 1.0
    for i, n in enumerate(steps):
        gap = int(n) - cur_n
        if gap > 0:
            cur = advance(np.eye(block.size, dtype=complex) if cur is None else cur, gap)
            cur_n = int(n)
            last = float(np.linalg.norm(cur, 2))
        norms[i] = last
        if last < floor_exit:
            break  # remaining entries stay 0.0
    return norms


def decay_curve(blocks, times, workers: int | None = None) -> DecayCurve:
    """Per-sector and sup-over-sector norms of exp(-tH) on a time grid.

    The requested times are snapped to the nearest multiple of a common
    base step (1/64 of the first time) so each block can be evaluated by
    exact binary powering of one matrix exponential.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0 or np.any(times <= 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be positive and ascending")
    tau = times[0] / 64.0
    steps = np.maximum(np.rint(times / tau).astype(np.int64), 1)
    snapped = steps * tau
    results = _map(lambda b: _marched_norms(b, steps, tau), blocks, workers)
    per_block = {b.k1: norms for b, norms in zip(blocks, results)}
    sup = np.max(np.stack(list(per_block.values())), axis=0)
    return DecayCurve(times=snapped, norms_per_block=per_block, sup_norms=sup)


def _bisect_time(blocks, target: float, t_max: float, rel_tol: float = 1e-3) -> float:
    """Smallest t with sup-norm <= target (norm is nonincreasing in t).

    The bracket grows geometrically from small t, where the matrix
    exponential is cheap, instead of shrinking from the horizon.
    """
    t = 1e-6
    while t < t_max and sup_norm(blocks, t) > target:
        t *= 2.0
    if t >= t_max and sup_norm(blocks, t_max) > target:
        raise RuntimeError("dissipation time exceeds horizon")
    lo, hi = t / 2.0, min(t, t_max)
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if sup_norm(blocks, mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def dissipation_time(blocks, fraction: float = 0.5, t_max: float = 1e6) -> float:
    """Smallest t at which sup_k1 ||exp(-tH)|| drops below the fraction."""
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must be in (0,1), got {fraction}")
    return _bisect_time(blocks, fraction, t_max)


def default_time_grid(blocks, floor: float = 1e-10, t_max: float = 1e6,
                      points_per_decade: int = 64) -> np.ndarray:
    """Log-spaced times between the first e-fold and the decay floor."""
    t1 = _bisect_time(blocks, 1.0 / math.e, t_max)
    # the floor is reached last by the slowest sector (smallest |k1|),
    # so bracket the far endpoint on that block alone
    slowest = [min(blocks, key=lambda b: abs(b.k1))]
    try:
        t2 = _bisect_time(slowest, floor, t_max)
    except RuntimeError:
        t2 = t_max
    decades = max(math.log10(t2 / t1), 0.1)
    n = max(int(points_per_decade * decades), 8)
    return np.geomspace(t1, t2, n)


def fit_rate(curve: DecayCurve, window: tuple[float, float] | None = None) -> float:
    """Least-squares envelope rate of -log(sup-norm) over the decay window.

    The window runs from the first drop below 1/e to the 1e-10 floor (or
    the end of the curve); both endpoints can be overridden.
    """
    t = curve.times
    y = curve.sup_norms
    if np.any(np.diff(y) > 1e-10):
        raise ValueError("decay curve is not nonincreasing")
    if window is None:
        below_e = np.nonzero(y <= 1.0 / math.e)[0]
        if below_e.size == 0:
            raise ValueError("insufficient decay observed")
        start = below_e[0]
        below_floor = np.nonzero(y <= 1e-10)[0]
        stop = below_floor[0] + 1 if below_floor.size else t.size
    else:
        start = int(np.searchsorted(t, window[0]))
        stop = int(np.searchsorted(t, window[1], side="right"))
    tw, yw = t[start:stop], y[start:stop]
    mask = yw > 0
    tw, yw = tw[mask], yw[mask]
    if tw.size < 5:
        raise ValueError("insufficient decay observed")
    slope = np.polyfit(tw, -np.log(yw), 1)[0]
    return float(slope)


def analyze_single(profile: ShearProfile, mu_nu: float, K: int = 8, M: int = 128,
                   workers: int | None = None):
    """Decay curve and fitted rate for one diffusivity; returns (curve, lam)."""
    blocks = [build_block(profile, k1, mu_nu, M) for k1 in range(1, K + 1)]
    times = default_time_grid(blocks)
    curve = decay_curve(blocks, times, workers=workers)
    lam = fit_rate(curve)
    return curve, lam


def scaling_fit(profile: ShearProfile, nu_grid, mu: float = 1.0, K: int = 8,
                M: int = 128, workers: int | None = None,
                curves_out: dict | None = None) -> RateFit:
    """Fit lambda(nu) = delta0 * nu^p across a sweep of nu values."""
    nu_grid = np.sort(np.asarray(nu_grid, dtype=np.float64))[::-1]
    if nu_grid.size < 2:
        raise ValueError("nu_grid needs >= 2 values (>= 4 for a trustworthy fit)")
    rates = []
    for nu in nu_grid:
        try:
            curve, lam = analyze_single(profile, mu * nu, K=K, M=M, workers=workers)
        except Exception as exc:
            raise RuntimeError(f"rate fit failed at nu={nu:g}: {exc}") from exc
        rates.append(lam)
        if curves_out is not None:
            curves_out[float(nu)] = curve
    rates = np.asarray(rates)
    coeffs = np.polyfit(np.log(nu_grid), np.log(rates), 1)
    exponent = float(coeffs[0])
    delta0 = float(np.exp(coeffs[1]))
    m = None
    predicted = None
    try:
        report = critical_points(profile)
        if report.m_max is not None:
            m = report.m_max
            predicted = 2 * m / (2 * m + 1)
    except ValueError:
        pass
    return RateFit(
        lam=float(rates[-1]),
        delta0=delta0,
        exponent=exponent,
        exponent_predicted=predicted,
        m=m,
        nu_grid=nu_grid,
        rates=rates,
    )


def verify_semigroup_bound(blocks, lam: float, prefactor: float = 5.0,
                           trials: int = 100, times_per_block: int = 50,
                           seed: int = 0, t_max: float | None = None) -> BoundReport:
    """Check ||exp(-tH)g|| <= prefactor*exp(-lam*t)*||g|| on random vectors."""
    rng = np.random.default_rng(seed)
    violations = 0
    worst = math.inf
    if t_max is None:
        # sample out to where the bound has decayed ~ten e-folds
        t_max = 10.0 / max(lam, 1e-12)
    for block in blocks:
        times = np.linspace(0.0, t_max, times_per_block)
        gs = rng.normal(size=(trials, block.size)) + 1j * rng.normal(size=(trials, block.size))
        gs /= np.linalg.norm(gs, axis=1)[:, None]
        # uniform grid: march one exact exponential instead of re-exponentiating
        step = scipy.linalg.expm(-(times[1] - times[0]) * block.matrix)
        if not np.all(np.isfinite(step)):
            raise OverflowError("exponential out of range")
        et = np.eye(block.size, dtype=complex)
        for t in times:
            norms = np.linalg.norm(gs @ et.T, axis=1)
            margins = prefactor * math.exp(-lam * t) - norms
            worst = min(worst, float(np.min(margins)))
            violations += int(np.sum(margins < 0))
            et = et @ step
    return BoundReport(lam=lam, prefactor=prefactor, trials=trials,
                       violations=violations, worst_margin=worst)


def write_curves_csv(path, curves_by_nu: dict) -> None:
    """Per-sweep CSV: columns nu, k1, t, norm."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu", "k1", "t", "norm"])
        for nu in sorted(curves_by_nu):
            curve = curves_by_nu[nu]
            for k1, norms in sorted(curve.norms_per_block.items()):
                for t, n in zip(curve.times, norms):
                    w.writerow([f"{nu:.16g}", k1, f"{t:.16g}", f"{n:.16g}"])
    os.replace(tmp, path)


def write_summary_csv(path, fit: RateFit) -> None:
    """Summary CSV: nu, lambda, delta0_fit, exponent_fit, exponent_predicted."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu", "lambda", "delta0_fit", "exponent_fit", "exponent_predicted"])
        pred = "" if fit.exponent_predicted is None else f"{fit.exponent_predicted:.16g}"
        for nu, lam in zip(fit.nu_grid, fit.rates):
            w.writerow([f"{nu:.16g}", f"{lam:.16g}", f"{fit.delta0:.16g}",
                        f"{fit.exponent:.16g}", pred])
    os.replace(tmp, path)
