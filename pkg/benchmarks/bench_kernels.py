"""Compare the compiled kernels against the pure NumPy/Python fallback.

Run:  python3 benchmarks/bench_kernels.py
"""
from __future__ import annotations

import time

import numpy as np

from stampmon._kernels import available_backends
from stampmon.baseline import KernelSpec, _initial_alpha
from stampmon.dsp import FilterSpec, design_butterworth_lowpass


def time_call(fn, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sosfilt(backends: dict) -> None:
    cascade = design_butterworth_lowpass(FilterSpec(1800.0, 3, 100_000.0))
    sos = cascade.sos_array()
    rng = np.random.default_rng(0)
    x = rng.standard_normal(17_500)
    zi = np.zeros((cascade.n_sections, 2))
    print(f"\nsosfilt, order-3 cascade over {len(x)} samples (one stroke):")
    results = {}
    for name, mod in backends.items():
        dt = time_call(lambda m=mod: m.sosfilt(sos, x, zi), repeats=3)
        results[name] = (dt, mod.sosfilt(sos, x, zi))
        print(f"  {name:>7}: {dt * 1e3:9.2f} ms")
    _report_speedup(results)


def bench_smo(backends: dict) -> None:
    rng = np.random.default_rng(1)
    X = rng.standard_normal((820, 17))
    K = KernelSpec("rbf", gamma=1 / 17).matrix(X, X)
    nu = 0.05
    C = 1.0 / (nu * len(X))
    print(f"\nsmo_solve, n=820 rbf one-class dual (nu={nu}):")
    results = {}
    for name, mod in backends.items():
        def run(m=mod):
            alpha = _initial_alpha(len(X), C)
            grad = K @ alpha
            m.smo_solve(K, alpha, grad, C, 1e-6, 1_000_000)
            return alpha
        dt = time_call(run, repeats=3)
        results[name] = (dt, run())
        print(f"  {name:>7}: {dt * 1e3:9.2f} ms")
    _report_speedup(results)


def _report_speedup(results: dict) -> None:
    if len(results) == 2:
        slow = results["pyref"]
        fast = results["cython"]
        print(f"  speedup: {slow[0] / fast[0]:.1f}x; max |diff| = "
              f"{np.max(np.abs(slow[1] - fast[1])):.3e}")


if __name__ == "__main__":
    backends = available_backends()
    print("available backends:", ", ".join(backends))
    bench_sosfilt(backends)
    bench_smo(backends)
