"""Compare the numba-compiled kernels with their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both versions are called directly, so the environment flag does not matter
here.  Compilation happens in a warm-up call and is not timed.
"""

import argparse
import math
import time

import numpy as np

from hankel_mra import _kernels
from hankel_mra._accel import NUMBA_AVAILABLE


def cases():
    rng = np.random.default_rng(0)
    w = -(rng.uniform(0, 8, 20000) ** 2) / 4 + 0j
    yield "bessel_even_series", (1.5, w, 1e-17, 400)
    x2 = rng.uniform(0, 4, 20000)
    yield "hahn_exton_series", (1.0, x2, 0.36, 1e-17, 400)
    q = 0.25
    tail, head = _kernels.log_tail_products(q, 600)
    js = np.arange(-150, 150, dtype=np.int64)
    yield "lattice_kernel", (js, math.log(q**0.5), q, tail, head, 1e-17, 400)
    V = rng.normal(size=(20000, 4)) + 1j * rng.normal(size=(20000, 4))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    yield "householder_complete", (V,)


def timeit(fn, args, repeat):
    fn(*args)
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare")
        return
    print(f"{'kernel':24s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, a in cases():
        loop = getattr(_kernels, name + "_loop")
        vec = getattr(_kernels, name + "_np")
        t_loop = timeit(loop, a, args.repeat)
        t_np = timeit(vec, a, args.repeat)
        r1, r2 = loop(*a), vec(*a)
        v1 = r1[0] if isinstance(r1, tuple) else r1
        v2 = r2[0] if isinstance(r2, tuple) else r2
        diff = float(np.max(np.abs(v1 - v2)))
        print(f"{name:24s} {1e3 * t_loop:11.3f} {1e3 * t_np:11.3f} {t_np / t_loop:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
