"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run: python benchmarks/bench_kernels.py
The numba path is selected at import via DPSPARSE_NUMBA=1 (default); this
script times both implementations directly, so the env flag does not matter
here. First numba timings exclude JIT compilation (one warmup call).
"""

import time

import numpy as np

from dpsparse import _kernels as k

SIZES = [(400, 1000), (2000, 1000), (500, 10000)]
PEEL_SIZES = [(1000, 5), (10000, 5), (10000, 50)]
REPEATS = 20


def bench(fn, *args) -> float:
    fn(*args)  # warmup (and JIT compile for the numba variants)
    start = time.perf_counter()
    for _ in range(REPEATS):
        fn(*args)
    return (time.perf_counter() - start) / REPEATS * 1e3


def main() -> None:
    rng = np.random.default_rng(0)
    print(f"numba available: {k.HAS_NUMBA}; selected backend: {k.BACKEND}")
    print(f"{'kernel':<16}{'shape':<16}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for m, d in SIZES:
        xc = np.clip(rng.standard_normal((m, d)), -3, 3)
        y = rng.standard_normal(m)
        beta = rng.standard_normal(d)
        pairs = [
            ("huber_grad", k._huber_grad_numpy, k._huber_grad_numba, (xc, y, beta, 1.0)),
            ("l1_grad", k._l1_grad_numpy, k._l1_grad_numba, (xc, xc, y, beta)),
            ("squared_grad", k._squared_grad_numpy, k._squared_grad_numba, (xc, y, beta)),
        ]
        for name, f_np, f_nb, args in pairs:
            t_np = bench(f_np, *args)
            if k.HAS_NUMBA:
                t_nb = bench(f_nb, *args)
                print(f"{name:<16}{f'{m}x{d}':<16}{t_np:>10.3f}{t_nb:>10.3f}{t_np / t_nb:>8.1f}x")
            else:
                print(f"{name:<16}{f'{m}x{d}':<16}{t_np:>10.3f}{'n/a':>10}{'':>9}")
    for d, s in PEEL_SIZES:
        absv = np.abs(rng.standard_normal(d))
        noise = rng.standard_normal((s, d)) * 0.1
        t_np = bench(k._peel_select_numpy, absv, noise)
        if k.HAS_NUMBA:
            t_nb = bench(k._peel_select_numba, absv, noise)
            print(f"{'peel_select':<16}{f'd={d},s={s}':<16}{t_np:>10.3f}{t_nb:>10.3f}{t_np / t_nb:>8.1f}x")
        else:
            print(f"{'peel_select':<16}{f'd={d},s={s}':<16}{t_np:>10.3f}{'n/a':>10}{'':>9}")


if __name__ == "__main__":
    main()
