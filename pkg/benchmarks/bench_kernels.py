#!/usr/bin/env python3
"""Benchmark the tomography kernels: compiled extension vs NumPy fallback.

Times the two hot kernels in isolation and a short end-to-end posterior
chain.  Run from the repository root:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from fbbell import (
    BellLabel,
    MeasurementBasis,
    canonical_bell,
    coincidence_probs,
)
from fbbell import _backend
from fbbell.measurement import CountTable
from fbbell.tomography import _pcn_chain, _stack_tables


def timeit(fn, n):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(n):
        fn()
    return (time.perf_counter() - t0) / n


def example_tables():
    state = canonical_bell(BellLabel.PHI_PLUS)
    tables = []
    for basis in (MeasurementBasis.zz(), MeasurementBasis.xx()):
        p = coincidence_probs(state, basis)
        counts = np.round(10000 * p / p.sum()).astype(np.int64)
        tables.append(CountTable(basis, counts, np.zeros((2, 2), np.int64), 1.0))
    return _stack_tables(tables)


def run_chain(impl_name, elements, counts):
    # _pcn_chain picks up the active backend, so swap it temporarily
    import fbbell.tomography as tomo

    saved = (tomo._backend.bures_rho, tomo._backend.loglik_tables)
    impl = _backend.available_backends()[impl_name]
    tomo._backend.bures_rho = impl.bures_rho
    tomo._backend.loglik_tables = impl.loglik_tables
    try:
        t0 = time.perf_counter()
        _pcn_chain(elements, counts, 500, 500, 5, 0.05, seed=1)
        return time.perf_counter() - t0
    finally:
        tomo._backend.bures_rho, tomo._backend.loglik_tables = saved


def main():
    backends = _backend.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if len(backends) == 1:
        print("compiled extension not built; benchmarking the fallback only")

    rng = np.random.default_rng(0)
    thetas = rng.standard_normal((256, 64))
    elements, counts = example_tables()

    results = {}
    for name, impl in backends.items():
        rho = impl.bures_rho(thetas[0])
        t_rho = timeit(lambda: [impl.bures_rho(t) for t in thetas], 20) / len(thetas)
        t_ll = timeit(lambda: impl.loglik_tables(rho, elements, counts), 2000)
        t_chain = run_chain(name, elements, counts)
        results[name] = (t_rho, t_ll, t_chain)

    header = f"{'backend':<10} {'bures_rho':>12} {'loglik':>12} {'3000-step chain':>18}"
    print(header)
    print("-" * len(header))
    for name, (t_rho, t_ll, t_chain) in results.items():
        print(
            f"{name:<10} {t_rho * 1e6:>10.2f}us {t_ll * 1e6:>10.2f}us "
            f"{t_chain:>16.3f}s"
        )
    if len(results) == 2:
        py = results["python"]
        cy = results["cython"]
        print(
            f"\nspeedup (python/cython): bures_rho {py[0] / cy[0]:.1f}x, "
            f"loglik {py[1] / cy[1]:.1f}x, chain {py[2] / cy[2]:.1f}x"
        )


if __name__ == "__main__":
    main()
