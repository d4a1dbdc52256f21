"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-``repeat`` wall times per kernel and the speedup. Outputs of
the two backends are checked for equality before timing.
"""
import argparse
import timeit

import numpy as np

from qrestrict import _kernels_py
from qrestrict.nogo import effect_grid
from qrestrict.rng import CounterRNG, cdf_from_probabilities

try:
    from qrestrict import _kernels as _compiled
except ImportError:
    _compiled = None


def cases():
    key = CounterRNG(1).key
    u = CounterRNG(2).uniforms(1_000_000)
    cdf = cdf_from_probabilities([0.25, 0.0, 0.5, 0.25])
    inc = (CounterRNG(3).uniforms(1_000_000) - 0.5) * 1e-3
    grid = effect_grid(41)
    # nearly identical states: the search scans the whole grid
    ra, rb = np.array([0.1, 0.2, 0.3]), np.array([0.1, 0.2, 0.31])
    return {
        "uniforms (1e6)": lambda k: k.uniforms(key, 0, 1_000_000),
        "sample_categorical (1e6)": lambda k: k.sample_categorical(u, cdf),
        "sprt_scan (1e6)": lambda k: k.sprt_scan(inc, 50.0, -50.0),
        f"effect_grid_search ({len(grid)} effects)": lambda k: k.effect_grid_search(grid, ra, rb, 0.1),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, rtol=0, atol=1e-9)
    return a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _compiled is None:
        print("compiled kernels not built; only the numpy fallback is available")
    print(f"{'kernel':<38}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>10}")
    for name, fn in cases().items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _compiled is None:
            print(f"{name:<38}{t_py:>12.2f}{'-':>13}{'-':>10}")
            continue
        if not same(fn(_kernels_py), fn(_compiled)):
            raise SystemExit(f"backends disagree on {name}")
        t_cy = min(timeit.repeat(lambda: fn(_compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<38}{t_py:>12.2f}{t_cy:>13.2f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
