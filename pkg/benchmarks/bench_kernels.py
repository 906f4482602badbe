"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]

Both paths are imported in one process; the env flag only changes which one
the package uses by default.
"""
import argparse
import time

import numpy as np

from fmci import _chernoff, _kernels
from fmci._accel import NUMBA_AVAILABLE


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="hash words / register updates")
    ap.add_argument("--samples", type=int, default=2000, help="occupancy rows for the Chernoff kernel")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy path exists")
        return 1

    rng = np.random.default_rng(0)
    words = rng.integers(0, 2**63, size=args.n, dtype=np.uint64)
    rows = rng.integers(0, 16, args.n)
    cols = rng.integers(0, 4, args.n)
    X = rng.geometric(0.5, args.n)
    Z = rng.integers(0, 16, args.n)
    keys = _kernels.pack_keys(np.zeros((16, 4)), np.full((16, 4), 15))
    M = rng.poisson(31, size=(args.samples, 16)).astype(np.int64)
    lo, hi = _chernoff.WINDOWS["minus"]

    cases = {
        "fields_from_words": (
            lambda: _kernels.fields_from_words_numpy(words, 4, 4),
            lambda: _kernels.fields_from_words_numba(words, 4, 4),
        ),
        "update_registers": (
            lambda: _kernels.update_registers_numpy(keys.copy(), rows, cols, X, Z),
            lambda: _kernels.update_registers_numba(keys.copy(), rows, cols, X, Z),
        ),
        "chernoff_batch": (
            lambda: _chernoff.chernoff_batch_numpy(M, 0.6, 16.0, 1.0, lo, hi, _chernoff.GOLDEN_ITERS, 0.8),
            lambda: _chernoff.chernoff_batch_numba(M, 0.6, 16.0, 1.0, lo, hi, _chernoff.GOLDEN_ITERS, 0.8),
        ),
    }
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for name, (f_np, f_nb) in cases.items():
        t_np = best_of(f_np, args.repeat)
        t_nb = best_of(f_nb, args.repeat)
        print(f"{name:<20}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
