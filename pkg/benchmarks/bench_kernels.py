"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Inputs are identical for both backends; outputs are checked for equality
before timing.
"""
import argparse
import timeit

import numpy as np

from blsac import _kernels_py

try:
    from blsac import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def cases(rng):
    normals = rng.standard_normal((8, 100_000))
    x0 = rng.normal(size=8)
    yield "ou_paths 8x1e5", "ou_paths", (x0, 0.15, 0.2, 0.01, normals)

    q = rng.normal(size=(64, 256))
    off = np.arange(-4, 5, dtype=np.int64) * 3
    w = np.sinc(np.linspace(-1, 1, 9))
    yield "circular_stencil 64x256, 9 taps", "circular_stencil", (q, off, w)

    P = rng.dirichlet(np.ones(32), size=32)
    cum = np.ascontiguousarray(np.cumsum(P, axis=1))
    yield "simulate_chain 32 states, 2e5 steps", "simulate_chain", (cum, 0, rng.random(200_000))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels_c is None:
        print("compiled extension not built; nothing to compare")
        return
    print(f"{'kernel':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label, name, inputs in cases(np.random.default_rng(0)):
        py, cy = getattr(_kernels_py, name), getattr(_kernels_c, name)
        assert np.array_equal(py(*inputs), cy(*inputs)), name
        t_py = min(timeit.repeat(lambda: py(*inputs), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: cy(*inputs), number=1, repeat=args.repeat))
        print(f"{label:40s} {1e3 * t_py:12.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
