#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-numpy fallback.

Times the two hot kernels (basis recurrence table, principal-value reduced
integrals) on a few problem sizes and prints a comparison table.  Run from
the repository root after installing:

    python benchmarks/bench_kernels.py
"""

import math
import time

import numpy as np

from fracflow import SphereParams, build_grid, constants, synthesize
from fracflow.kernels import pure
from fracflow.specfun import equator_area

try:
    from fracflow.kernels import _native as native
except ImportError:
    native = None


def _time(fn, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_basis():
    print("basis_matrix (orthonormal recurrence table)")
    for M, K in ((256, 128), (1024, 256), (4096, 512)):
        sb = pure.jacobi_sqrt_b(0.5, K + 2)
        t = np.linspace(-0.999, 0.999, M)
        tp = _time(lambda: pure.basis_matrix(t, K, sb))
        row = f"  M={M:5d} K={K:4d}   pure {tp * 1e3:8.2f} ms"
        if native is not None:
            tn = _time(lambda: native.basis_matrix(t, K, sb))
            row += f"   native {tn * 1e3:8.2f} ms   speedup {tp / tn:5.1f}x"
        print(row)


def bench_pv():
    print("pv_levels (graded-panel singular quadrature)")
    for n, sigma, K in ((2, 0.5, 16), (3, 0.75, 16), (3, 0.5, 32)):
        params = SphereParams(n, sigma)
        grid = build_grid(params, K)
        cs = constants(params)
        coeffs = np.zeros(K + 1)
        coeffs[0] = math.sqrt(cs.vol_sn)
        coeffs[1] = 0.3
        coeffs[2] = 0.2
        fld = synthesize(grid, coeffs)
        pc = fld.spectral / np.sqrt(grid.area_sn1)
        sm2 = equator_area(n - 1) if n > 2 else 2.0
        tp = _time(
            lambda: pure.pv_levels(grid.nodes, pc, grid.sqrt_b, n, sigma, 0.02, sm2),
            repeat=2,
        )
        row = f"  n={n} sigma={sigma} M={grid.node_count:3d}   pure {tp * 1e3:8.1f} ms"
        if native is not None:
            tn = _time(
                lambda: native.pv_levels(grid.nodes, pc, grid.sqrt_b, n, sigma, 0.02, sm2),
                repeat=2,
            )
            row += f"   native {tn * 1e3:8.1f} ms   speedup {tp / tn:5.1f}x"
        print(row)


if __name__ == "__main__":
    if native is None:
        print("compiled core not built; timing the pure fallback only\n")
    bench_basis()
    print()
    bench_pv()
