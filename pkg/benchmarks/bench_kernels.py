"""Time the simulation kernels on the numba and the numpy backend.

Usage: python benchmarks/bench_kernels.py [--nsim 100000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from condapproval import _kernels, simulate
from condapproval._accel import NUMBA_AVAILABLE
from condapproval.evidence import harmonic_critical_value
from condapproval.specialfn import _ndtri, _ndtri_upper


def _inputs(nsim: int, seed: int = 1):
    scenario = simulate.DEFAULT_SCENARIOS[2]
    u = simulate.draw_uniforms(seed, 2, 0, nsim)
    z_alpha = _ndtri_upper(scenario.alpha)
    return scenario, u, z_alpha


def _run(backend: str, scenario, u, z_alpha):
    z1 = _kernels.truncnorm_z1(u[:, 0], z_alpha - scenario.mu, scenario.mu, backend)
    e_int = _kernels.normal_from_uniform(u[:, 1], backend)
    e_rest = _kernels.normal_from_uniform(u[:, 2], backend)
    return _kernels.simulate_cell(
        z1, e_int, e_rest,
        n1=scenario.n1, delta2=scenario.theta2 / np.sqrt(2.0), z_power=_ndtri(0.9),
        shrinkage=0.0, fraction=0.5, method=_kernels.HARMONIC,
        w1=1.0, w2=1.0, c_h=harmonic_critical_value(0.025**2), z_alpha=z_alpha, backend=backend,
    )


def bench(backend: str, nsim: int, repeat: int) -> tuple[float, float]:
    scenario, u, z_alpha = _inputs(nsim)
    t0 = time.perf_counter()
    _run(backend, scenario, u, z_alpha)
    first = time.perf_counter() - t0
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        _run(backend, scenario, u, z_alpha)
        best = min(best, time.perf_counter() - t0)
    return first, best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nsim", type=int, default=100_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])
    results = {}
    for backend in backends:
        first, best = bench(backend, args.nsim, args.repeat)
        results[backend] = best
        print(f"{backend:6s}  first call {first * 1e3:9.2f} ms  best of {args.repeat} {best * 1e3:8.2f} ms  ({args.nsim} replications)")
    if "numba" in results:
        scenario, u, z_alpha = _inputs(min(args.nsim, 10_000))
        a = _run("numba", scenario, u, z_alpha)
        b = _run("numpy", scenario, u, z_alpha)
        same_n2 = bool(np.array_equal(a[2], b[2]))
        diff = float(np.nanmax(np.abs(a[5] - b[5])))
        print(f"speedup numpy/numba {results['numpy'] / results['numba']:.2f}x; identical n2: {same_n2}; max |z2 diff| {diff:.1e}")


if __name__ == "__main__":
    main()
