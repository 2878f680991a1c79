"""Benchmark the compiled kernels against the NumPy fallback.

Run with:  python3 benchmarks/bench_kernels.py [grid_size]

Both backends implement identical contracts; this script checks agreement
to roundoff and reports per-call timings at solver-realistic sizes.
"""
import sys
import time

import numpy as np

from achesim.kernels import BACKEND
from achesim.kernels import _fused_py as py

try:
    from achesim.kernels import _fused as cy
except ImportError:
    cy = None


def timeit(fn, *args, repeats=200):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench(n: int) -> None:
    rng = np.random.default_rng(0)
    fine = (2 * n, 2 * n)  # cube_inplace runs on the dealiasing fine grid
    # magnitudes below 1 so repeated in-place cubing underflows quietly
    real = np.ascontiguousarray(rng.uniform(0.1, 0.9, size=fine))
    E = np.ascontiguousarray(rng.normal(size=(n, n)) + 0j)
    phi = np.ascontiguousarray(rng.normal(size=(n, n)) + 0j)
    c = np.ascontiguousarray(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    n1 = np.ascontiguousarray(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    n2 = np.ascontiguousarray(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    out = np.empty_like(c)

    backends = [("python", py)] + ([("cython", cy)] if cy is not None else [])
    print(f"grid {n}x{n} (cube on {2*n}x{2*n}); active backend: {BACKEND}")

    if cy is not None:
        a_py, a_cy = real.copy(), real.copy()
        py.cube_inplace(a_py)
        cy.cube_inplace(a_cy)
        assert np.max(np.abs(a_py - a_cy)) == 0.0, "cube backends disagree"
        o_py, o_cy = np.empty_like(c), np.empty_like(c)
        py.etdrk2_stage1(E, phi, c, n1, o_py)
        cy.etdrk2_stage1(E, phi, c, n1, o_cy)
        assert np.max(np.abs(o_py - o_cy)) < 1e-15, "stage1 backends disagree"
        py.etdrk2_stage2(c, phi, n1, n2, o_py)
        cy.etdrk2_stage2(c, phi, n1, n2, o_cy)
        assert np.max(np.abs(o_py - o_cy)) < 1e-15, "stage2 backends disagree"
        print("backend agreement: OK")
    else:
        print("compiled extension unavailable; timing the fallback only")

    header = f"{'kernel':<16}" + "".join(f"{name:>12}" for name, _ in backends)
    print(header)
    rows = [
        ("cube_inplace", lambda mod: timeit(mod.cube_inplace, real.copy(), repeats=50)),
        ("etdrk2_stage1", lambda mod: timeit(mod.etdrk2_stage1, E, phi, c, n1, out)),
        ("etdrk2_stage2", lambda mod: timeit(mod.etdrk2_stage2, c, phi, n1, n2, out)),
    ]
    for label, timer in rows:
        cells = "".join(f"{timer(mod) * 1e6:>10.1f}us" for _, mod in backends)
        print(f"{label:<16}{cells}")


if __name__ == "__main__":
    bench(int(sys.argv[1]) if len(sys.argv) > 1 else 128)
