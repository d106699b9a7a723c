"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation; the median is
bit-identical across backends, the noise agrees to libm rounding.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 6.283185307179586


def mix64(z):
    """splitmix64 finalizer over a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def median_filter(padded, k):
    """k x k sliding median over an already padded 2-D float64 array."""
    padded = np.ascontiguousarray(padded, dtype=np.float64)
    windows = sliding_window_view(padded, (k, k))
    h, w = windows.shape[:2]
    flat = windows.reshape(h, w, k * k)
    mid = (k * k) // 2
    return np.partition(flat, mid, axis=-1)[..., mid].copy()


def keyed_normal(count, key):
    """Standard normals z[i] = f(key, i) via Box-Muller on hashed counters."""
    key = np.uint64(key)
    idx = np.arange(count, dtype=np.uint64)
    c1 = idx * np.uint64(2) + np.uint64(1)
    c2 = c1 + np.uint64(1)
    with np.errstate(over="ignore"):
        h1 = mix64(key + c1 * GOLDEN)
        h2 = mix64(key + c2 * GOLDEN)
    u1 = ((h1 >> np.uint64(11)).astype(np.float64) + 1.0) * _INV53
    u2 = (h2 >> np.uint64(11)).astype(np.float64) * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
