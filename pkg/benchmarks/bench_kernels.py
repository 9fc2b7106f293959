"""Compare the numba and pure-numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3]

Each kernel is checked for identical output on both backends before it is
timed. The numba functions are warmed up first so compile time is excluded.
"""
import argparse
import time

import numpy as np

from mpshuffle import _kernels
from mpshuffle.field import MERSENNE61
from mpshuffle.permnet import build_benes


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = np.random.default_rng(0)
    net = build_benes(3)
    swaps, final = net.compiled
    a = rng.integers(0, MERSENNE61, size=1_000_000, dtype=np.int64)
    b = rng.integers(0, MERSENNE61, size=1_000_000, dtype=np.int64)
    A = rng.integers(0, MERSENNE61, size=(20_000, 8), dtype=np.int64)
    V = rng.integers(0, MERSENNE61, size=(8, 8), dtype=np.int64)
    As = rng.integers(0, 257, size=(20_000, 8), dtype=np.int64)
    Vs = rng.integers(0, 257, size=(8, 8), dtype=np.int64)
    bits = rng.integers(0, 2, size=(100_000, net.nbits), dtype=np.uint8)
    return [
        ("mulmod m61 (1e6)", "mulmod", (a, b, MERSENNE61, _kernels.MODE_M61)),
        ("matmul m61 (20000x8 @ 8x8)", "matmul_mod", (A, V, MERSENNE61, _kernels.MODE_M61)),
        ("matmul p=257 (20000x8 @ 8x8)", "matmul_mod", (As, Vs, 257, _kernels.MODE_SMALL)),
        ("route_batch benes8 (1e5 configs)", "route_batch", (swaps, final, bits)),
        ("enumerate_codes benes8 (2^20)", "enumerate_codes", (swaps, final, net.nbits, 0, 1 << net.nbits)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels.NUMBA_IMPL is None:
        raise SystemExit("numba is not available")
    print(f"{'kernel':36s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for label, name, call_args in cases():
        np_fn = _kernels.NUMPY_IMPL[name]
        nb_fn = _kernels.NUMBA_IMPL[name]
        ref = np_fn(*call_args)
        got = nb_fn(*call_args)  # also triggers compilation
        if not np.array_equal(ref, got):
            raise SystemExit(f"{label}: backends disagree")
        t_np = _time(lambda: np_fn(*call_args), args.repeat)
        t_nb = _time(lambda: nb_fn(*call_args), args.repeat)
        print(f"{label:36s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
