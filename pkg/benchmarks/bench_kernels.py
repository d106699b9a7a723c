"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--size 256] [--repeat 5]

Also checks that both backends agree before timing them.
"""
import argparse
import time

import numpy as np

from freqspec import _kernels_py

try:
    from freqspec import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . --no-build-isolation")

    rng = np.random.default_rng(0)
    padded = rng.uniform(0, 255, (args.size + 2, args.size + 2))
    count = 3 * args.size * args.size
    key = 0x1234_5678_9ABC_DEF0

    assert np.array_equal(compiled.median_filter(padded, 3), _kernels_py.median_filter(padded, 3))
    np.testing.assert_allclose(compiled.keyed_normal(count, key), _kernels_py.keyed_normal(count, key),
                               rtol=1e-13, atol=1e-13)

    cases = [
        ("median 3x3", lambda m: m.median_filter(padded, 3)),
        ("median 5x5", lambda m: m.median_filter(np.pad(padded, 1, mode="symmetric"), 5)),
        ("keyed_normal", lambda m: m.keyed_normal(count, key)),
    ]
    print(f"{'kernel':<14}{'cython ms':>12}{'python ms':>12}{'speedup':>10}   ({args.size}x{args.size})")
    for name, fn in cases:
        tc = best_of(lambda: fn(compiled), args.repeat)
        tp = best_of(lambda: fn(_kernels_py), args.repeat)
        print(f"{name:<14}{tc * 1e3:>12.2f}{tp * 1e3:>12.2f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
