"""Backend selection for the hot kernels.

The compiled extension is used when it was built; set ``FREQSPEC_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active choice.
"""
import os

from . import _kernels_py

if os.environ.get("FREQSPEC_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

median_filter = _impl.median_filter
keyed_normal = _impl.keyed_normal
mix64 = _kernels_py.mix64


def stream_key(seed, stream):
    """Derive the 64-bit noise key for one (seed, stream) pair."""
    mask = (1 << 64) - 1
    k = int(mix64(int(seed) & mask)) ^ (int(stream) & mask)
    return int(mix64(k))
