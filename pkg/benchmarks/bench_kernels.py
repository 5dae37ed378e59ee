"""Timing of the nonlinearity kernels.

Compares the compiled and numpy backends of the direct triad sum, and the
direct sum against the FFT path, on a few truncation sizes.

    python3 benchmarks/bench_kernels.py --repeat 20
"""

import argparse
import timeit

import numpy as np

from galerkin_trap import kernels
from galerkin_trap.dynamics import nonlinear_2d, nonlinear_2d_fast, nonlinear_3d, triad_table
from galerkin_trap.lattice import build_truncation
from galerkin_trap.state import random_spectrum_2d, random_spectrum_3d


def best_ms(fn, repeat):
    fn()  # warm caches (triad tables, FFT plans)
    return 1e3 * min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--sizes-2d", type=float, nargs="+", default=[8.0, 12.0, 16.0, 24.0])
    ap.add_argument("--sizes-3d", type=float, nargs="+", default=[3.0, 4.0, 5.0])
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    backends = kernels.available_backends()
    prev = kernels.backend_name()
    print(f"backends: {', '.join(backends)}")
    print(f"{'case':<14}{'modes':>7}{'triads':>10}" + "".join(f"{b + ' ms':>14}" for b in backends)
          + f"{'speedup':>9}{'fft ms':>10}")
    try:
        for d, sizes in ((2, args.sizes_2d), (3, args.sizes_3d)):
            for K in sizes:
                Z = build_truncation(d, "disk", K)
                s = random_spectrum_2d(Z, rng) if d == 2 else random_spectrum_3d(Z, rng)
                f = nonlinear_2d if d == 2 else nonlinear_3d
                times = {}
                for b in backends:
                    kernels.use_backend(b)
                    times[b] = best_ms(lambda: f(s), args.repeat)
                kernels.use_backend(prev)
                speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
                fft = best_ms(lambda: nonlinear_2d_fast(s), args.repeat) if d == 2 else float("nan")
                row = f"{f'{d}D disk({K:g})':<14}{len(Z):>7}{len(triad_table(Z)) if d == 2 else 0:>10}"
                row += "".join(f"{times[b]:>14.3f}" for b in backends)
                print(row + f"{speed:>9.1f}{fft:>10.3f}")
    finally:
        kernels.use_backend(prev)


if __name__ == "__main__":
    main()
