"""Shear profiles v(x2): evaluation, derivatives, and critical-point order.

The order m of a critical point x0 (v'(x0) = 0) is the smallest j >= 2 with
v^(j)(x0) != 0. On the torus every smooth profile has critical points with
m >= 2, and m controls the enhanced-dissipation exponent 2m/(2m+1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from achesim import spectral
from achesim.fields import Field1D
from achesim.spectral import GridSpec


class ConstantProfileError(ValueError):
    """The derivative vanishes identically; no enhancement occurs."""


@dataclass(frozen=True)
class CriticalPoint:
    location: float
    order: int | None  # None when the order exceeds m_cap


@dataclass(frozen=True)
class CriticalPointReport:
    points: tuple[CriticalPoint, ...]
    m_max: int | None
    degenerate: bool


class ShearProfile:
    """Base class: 1-periodic v(x2) with derivative access."""

    name = "custom"
    m_cap = 6

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x, order: int):
        raise NotImplementedError

    def sample(self, grid: GridSpec) -> Field1D:
        x = np.arange(grid.ny) / grid.ny
        return Field1D(np.asarray(self(x), dtype=np.float64))

    def sample_values(self, ny: int) -> np.ndarray:
        x = np.arange(ny) / ny
        return np.asarray(self(x), dtype=np.float64)

    @property
    def lipschitz_bound(self) -> float:
        """sup |v'| estimated on a 4096-point grid."""
        x = np.arange(4096) / 4096.0
        return float(np.max(np.abs(self.derivative(x, 1))))

    def sup_norm(self) -> float:
        x = np.arange(4096) / 4096.0
        return float(np.max(np.abs(self(x))))


class HarmonicProfile(ShearProfile):
    """v(x) = sum_j a_j * sin(2*pi*n_j*x + phase_j); derivatives are exact."""

    def __init__(self, terms, name="harmonic", amplitude=1.0):
        self.terms = [(a * amplitude, n, p) for a, n, p in terms]
        self.name = name
        self.amplitude = amplitude

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for a, n, p in self.terms:
            out += a * np.sin(2 * np.pi * n * x + p)
        return out

    def derivative(self, x, order: int):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for a, n, p in self.terms:
            w = 2 * np.pi * n
            out += a * w**order * np.sin(2 * np.pi * n * x + p + order * np.pi / 2)
        return out

    def shifted(self, a: float) -> "HarmonicProfile":
        """Profile x -> v(x + a)."""
        terms = [(amp, n, p + 2 * np.pi * n * a) for amp, n, p in self.terms]
        prof = HarmonicProfile.__new__(HarmonicProfile)
        prof.terms = terms
        prof.name = f"{self.name}-shift"
        prof.amplitude = self.amplitude
        return prof


class TabulatedProfile(ShearProfile):
    """Band-limited profile from ny uniform samples; spectral derivatives."""

    name = "tabulated"

    def __init__(self, values, name="tabulated"):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1 or values.size < 8:
            raise ValueError("tabulated profile needs >= 8 samples in one column")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite profile samples")
        self.values = values
        self.name = name
        n = values.size
        self._hat = np.fft.fft(values) / n
        self._k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)

    def _eval_hat(self, hat, x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        # direct evaluation of the trigonometric interpolant
        phase = np.exp(2j * np.pi * np.outer(x, self._k))
        out = phase @ hat
        return out.real

    def __call__(self, x):
        scalar = np.isscalar(x)
        out = self._eval_hat(self._hat, x)
        return float(out[0]) if scalar else out

    def derivative(self, x, order: int):
        sym = spectral.derivative_symbol(self.values.size, order)
        scalar = np.isscalar(x)
        out = self._eval_hat(self._hat * sym, x)
        return float(out[0]) if scalar else out

    @classmethod
    def from_file(cls, path, name=None):
        values = np.loadtxt(path)
        return cls(values, name=name or "tabulated")


def make_profile(name: str, amplitude: float = 1.0) -> ShearProfile:
    """Built-in profiles selectable by name."""
    if name == "sin":
        return HarmonicProfile([(1.0, 1, 0.0)], name="sin", amplitude=amplitude)
    if name == "cos":
        return HarmonicProfile([(1.0, 1, np.pi / 2)], name="cos", amplitude=amplitude)
    if name == "sin3":
        # sin^3(t) = (3 sin t - sin 3t)/4
        return HarmonicProfile(
            [(0.75, 1, 0.0), (-0.25, 3, 0.0)], name="sin3", amplitude=amplitude
        )
    if name == "zero":
        return HarmonicProfile([], name="zero", amplitude=amplitude)
    raise ValueError(f"unknown profile {name!r}")


def _bisect_root(f, a, b, iters=200):
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0 or (b - a) < 1e-15:
            return m
        if (fa < 0) == (fm < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def critical_points(
    profile: ShearProfile, tol: float = 1e-10, scan_n: int = 4096, m_cap: int | None = None
) -> CriticalPointReport:
    """Locate roots of v' on [0,1) and report their orders.

    Sign-change roots are found by bisection on v'; tangential roots (where
    v' touches zero without changing sign) by bisection on (v'^2)' over the
    dip interval.
    """
    m_cap = m_cap if m_cap is not None else profile.m_cap
    xs = np.arange(scan_n + 1) / scan_n  # includes wrap point 1.0
    dv = np.asarray(profile.derivative(xs, 1), dtype=np.float64)
    scale = float(np.max(np.abs(dv)))
    if scale < 1e-14:
        raise ConstantProfileError("profile constant; no enhancement")

    roots: list[float] = []
    f1 = lambda x: float(profile.derivative(x, 1))

    # sign changes of v'
    for i in range(scan_n):
        a, b = dv[i], dv[i + 1]
        if a == 0.0:
            roots.append(xs[i])
        elif (a < 0) != (b < 0):
            roots.append(_bisect_root(f1, xs[i], xs[i + 1]))

    # tangential roots: local minima of |v'| that dip near zero
    dip = np.abs(dv) < 1e-4 * scale
    g = lambda x: 2.0 * f1(x) * float(profile.derivative(x, 2))
    i = 0
    while i < scan_n:
        if dip[i]:
            j = i
            while j < scan_n and dip[j]:
                j += 1
            a, b = xs[max(i - 1, 0)], xs[min(j, scan_n)]
            if abs(f1(a)) <= max(tol, 1e-12 * scale):
                roots.append(a)
            elif abs(f1(b)) <= max(tol, 1e-12 * scale):
                roots.append(b)
            else:
                ga, gb = g(a), g(b)
                if (ga < 0) != (gb < 0):
                    x0 = _bisect_root(g, a, b)
                    if abs(f1(x0)) <= max(tol, 1e-12 * scale):
                        roots.append(x0)
            i = j
        else:
            i += 1

    # deduplicate modulo 1
    roots = sorted(r % 1.0 for r in roots)
    merged: list[float] = []
    for r in roots:
        if not merged or min(abs(r - merged[-1]), 1 - abs(r - merged[-1])) > 1e-6:
            merged.append(r)
    if len(merged) > 1 and (merged[0] + 1.0) - merged[-1] < 1e-6:
        merged.pop()

    # classify order: smallest j >= 2 with |v^(j)(x0)| above a relative floor
    xs_scan = np.arange(scan_n) / scan_n
    deriv_sup = {
        j: max(float(np.max(np.abs(profile.derivative(xs_scan, j)))), 1e-300)
        for j in range(2, m_cap + 1)
    }
    points = []
    degenerate = False
    for x0 in merged:
        order = None
        for j in range(2, m_cap + 1):
            if abs(float(profile.derivative(x0, j))) > 1e-6 * deriv_sup[j]:
                order = j
                break
        if order is None:
            degenerate = True
        points.append(CriticalPoint(location=float(x0), order=order))

    orders = [p.order for p in points if p.order is not None]
    m_max = max(orders) if orders else None
    return CriticalPointReport(points=tuple(points), m_max=m_max, degenerate=degenerate)
