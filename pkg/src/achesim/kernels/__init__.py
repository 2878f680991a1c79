"""Hot elementwise kernels with a compiled core and a NumPy fallback.

The Cython extension is optional: if it failed to build (or was not built),
the pure-NumPy implementations are selected at import time. Both backends
implement the same contracts and are compared in benchmarks/bench_kernels.py.
"""

try:
    from achesim.kernels._fused import (  # type: ignore[attr-defined]
        cube_inplace,
        etdrk2_stage1,
        etdrk2_stage2,
    )

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from achesim.kernels._fused_py import (
        cube_inplace,
        etdrk2_stage1,
        etdrk2_stage2,
    )

    BACKEND = "python"

__all__ = ["cube_inplace", "etdrk2_stage1", "etdrk2_stage2", "BACKEND"]
