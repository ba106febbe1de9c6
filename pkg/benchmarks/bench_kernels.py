"""Benchmark the compiled kernel backend against the pure NumPy fallback.

Run:  python benchmarks/bench_kernels.py [--size 1536] [--repeats 3]

Times the four pixel kernels on a synthetic scan-sized stroke map and a
rasterization-heavy polygon workload, then prints a side-by-side table.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from schemgraph import kernels
from schemgraph.kernels import _pure

try:
    from schemgraph.kernels import _core
except ImportError:
    _core = None


def synth_map(size: int, rng: np.random.Generator) -> np.ndarray:
    grid = np.zeros((size, size), np.uint8)
    for _ in range(size // 8):  # wire-like strokes
        r = int(rng.integers(2, size - 2))
        c0, c1 = sorted(rng.integers(0, size, 2).tolist())
        grid[r - 1:r + 2, c0:c1] = 1
    for _ in range(size // 16):  # symbol-like blobs
        r, c = rng.integers(10, size - 30, 2)
        grid[r:r + 24, c:c + 24] = 1
    return grid


def bench(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=1536, help="map side length")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    grid = synth_map(args.size, rng)
    ring = np.array([[10.0, 10.0], [args.size - 10.0, 14.0],
                     [args.size - 14.0, args.size - 10.0], [12.0, args.size - 12.0],
                     [args.size / 2.0, args.size / 3.0]])

    cases = {
        "erode r=1": lambda impl: impl.erode(grid, 1),
        "dilate r=1": lambda impl: impl.dilate(grid, 1),
        "majority r=1": lambda impl: impl.majority(grid, 1),
        "components 8": lambda impl: impl.connected_components(grid, 8),
        "fill_polygon": lambda impl: impl.fill_polygon(ring, args.size, args.size),
    }

    print(f"map {args.size}x{args.size}, {int(grid.sum())} stroke px, "
          f"best of {args.repeats}; active backend: {kernels.backend()}")
    header = f"{'kernel':<14} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call in cases.items():
        t_pure = bench(lambda: call(_pure), args.repeats)
        if _core is None:
            print(f"{name:<14} {t_pure:>10.4f} {'n/a':>13} {'n/a':>8}")
            continue
        t_core = bench(lambda: call(_core), args.repeats)
        print(f"{name:<14} {t_pure:>10.4f} {t_core:>13.4f} {t_pure / t_core:>7.1f}x")
    if _core is None:
        print("compiled backend not built; reinstall with a working C toolchain")


if __name__ == "__main__":
    main()
