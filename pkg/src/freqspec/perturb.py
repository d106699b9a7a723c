"""Single-kind image perturbations used by the robustness sweep.

Every operation is a pure function of (image, parameter[, seed, stream]).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateIntermediate, EvenKernel, InvalidPerturbation, InvalidQuality
from .raster import Raster, resize

KINDS = ("jpeg", "blur", "noise", "resize")

SWEEP_GRIDS = {
    "jpeg": tuple(range(10, 100, 10)),
    "blur": tuple(range(3, 16, 2)),
    "noise": tuple(range(5, 31, 5)),
    "resize": tuple(range(2, 13, 2)),
}


@dataclass(frozen=True)
class PerturbationSpec:
    """One perturbation kind at one fixed intensity.

    Direct construction accepts any parameter (useful for identity cases such
    as ``blur`` with kernel 1); :meth:`from_grid` enforces the benchmark grids.
    """

    kind: str
    param: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidPerturbation(f"unknown perturbation kind {self.kind!r}")

    @classmethod
    def from_grid(cls, kind: str, param, seed: int = 0) -> "PerturbationSpec":
        if kind not in SWEEP_GRIDS:
            raise InvalidPerturbation(f"unknown perturbation kind {kind!r}")
        if param not in SWEEP_GRIDS[kind]:
            raise InvalidPerturbation(f"{kind} parameter {param} not in grid {SWEEP_GRIDS[kind]}")
        return cls(kind, param, seed)

    @property
    def label(self) -> str:
        return f"{self.kind}_{_fmt(self.param)}"


def _fmt(x) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def standard_sweep(seed: int = 0, kinds=KINDS) -> list[PerturbationSpec]:
    """All grid points, kind by kind in grid order (9 + 7 + 6 + 6 = 28)."""
    return [PerturbationSpec(k, p, seed) for k in kinds for p in SWEEP_GRIDS[k]]


def severity_order(kind: str, params):
    """Sort parameters from mildest to harshest (JPEG gets harsher as quality drops)."""
    return sorted(params, reverse=(kind == "jpeg"))


# --- JPEG -------------------------------------------------------------------

_LUMA_Q = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

_CHROMA_Q = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.float64)


def _dct_matrix(n=8):
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    m = np.cos((2 * x + 1) * k * np.pi / (2 * n)) * math.sqrt(2.0 / n)
    m[0] /= math.sqrt(2.0)
    return m


_DCT = _dct_matrix()


def quant_tables(quality: int):
    """Baseline luminance/chrominance tables scaled by the usual quality rule."""
    if not 1 <= quality <= 100:
        raise InvalidQuality(f"JPEG quality must be in 1..100, got {quality}")
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    tables = []
    for base in (_LUMA_Q, _CHROMA_Q):
        q = np.floor((base * scale + 50) / 100)
        tables.append(np.clip(q, 1, 255))
    return tables[0], tables[1]


def _rgb_to_ycc(rgb):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168735892 * r - 0.331264108 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418687589 * g - 0.081312411 * b + 128.0
    return np.stack([y, cb, cr], axis=-1)


def _ycc_to_rgb(ycc):
    y, cb, cr = ycc[..., 0], ycc[..., 1] - 128.0, ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136286 * cb - 0.714136286 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


def _quantize_plane(plane, table):
    h, w = plane.shape
    blocks = (plane - 128.0).reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)
    coef = _DCT @ blocks @ _DCT.T
    coef = np.round(coef / table) * table
    rec = _DCT.T @ coef @ _DCT
    return rec.transpose(0, 2, 1, 3).reshape(h, w) + 128.0


def jpeg_roundtrip(img: Raster, quality: int) -> Raster:
    """Baseline-JPEG loss model: 4:4:4 YCbCr, 8x8 DCT, table quantisation.

    Entropy coding is lossless and skipped. Input and output are rounded to
    8-bit levels, as a real encode/decode would.
    """
    if isinstance(quality, float) and not quality.is_integer():
        raise InvalidQuality(f"JPEG quality must be an integer, got {quality}")
    quality = int(quality)
    luma, chroma = quant_tables(quality)
    h, w = img.height, img.width
    ph, pw = -h % 8, -w % 8
    px = np.clip(np.round(img.data), 0, 255)
    px = np.pad(px, ((0, ph), (0, pw), (0, 0)), mode="edge")
    if img.channels == 1:
        out = _quantize_plane(px[:, :, 0], luma)[:, :, None]
    else:
        ycc = _rgb_to_ycc(px)
        planes = [_quantize_plane(ycc[:, :, 0], luma),
                  _quantize_plane(ycc[:, :, 1], chroma),
                  _quantize_plane(ycc[:, :, 2], chroma)]
        out = _ycc_to_rgb(np.stack(planes, axis=-1))
    out = np.clip(np.round(out[:h, :w]), 0, 255)
    return Raster(out)


# --- blur -------------------------------------------------------------------

def gaussian_kernel1d(kernel_size: int) -> np.ndarray:
    """Normalised, truncated Gaussian with sigma tied to the kernel size."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise EvenKernel(f"kernel size must be odd and positive, got {kernel_size}")
    sigma = 0.3 * ((kernel_size - 1) / 2 - 1) + 0.8
    x = np.arange(kernel_size) - (kernel_size - 1) / 2
    g = np.exp(-(x * x) / (2 * sigma * sigma))
    return g / g.sum()


def convolve_separable(data: np.ndarray, kern: np.ndarray) -> np.ndarray:
    """Correlate every channel with ``kern`` along both axes, mirrored edges."""
    r = len(kern) // 2
    if r == 0:
        return data * kern[0]
    h, w = data.shape[:2]
    padded = np.pad(data, ((r, r), (0, 0), (0, 0)), mode="symmetric")
    tmp = sum(kern[i] * padded[i:i + h] for i in range(len(kern)))
    padded = np.pad(tmp, ((0, 0), (r, r), (0, 0)), mode="symmetric")
    return sum(kern[i] * padded[:, i:i + w] for i in range(len(kern)))


def gaussian_blur(img: Raster, kernel_size: int) -> Raster:
    """Separable Gaussian blur; ``kernel_size`` 1 is the identity."""
    kern = gaussian_kernel1d(int(kernel_size))
    return Raster(np.clip(convolve_separable(img.data, kern), 0.0, 255.0))


# --- noise ------------------------------------------------------------------

def noise_field(shape, std: float, seed: int, stream: int = 0) -> np.ndarray:
    """Zero-mean Gaussian field; element i depends only on (seed, stream, i)."""
    count = int(np.prod(shape))
    z = kernels.keyed_normal(count, kernels.stream_key(seed, stream))
    return (std * z).reshape(shape)


def add_gaussian_noise(img: Raster, std: float, seed: int, stream: int = 0) -> Raster:
    if std < 0:
        raise InvalidPerturbation(f"noise std must be >= 0, got {std}")
    if std == 0:
        return Raster(img.data.copy())
    noisy = img.data + noise_field(img.data.shape, std, seed, stream)
    return Raster(np.clip(noisy, 0.0, 255.0))


# --- resize -----------------------------------------------------------------

def resize_down_up(img: Raster, factor: int) -> Raster:
    """Bicubic downscale by ``factor`` (floored sizes), bicubic back to the original size."""
    if factor < 1:
        raise DegenerateIntermediate(f"resize factor must be >= 1, got {factor}")
    mw, mh = int(img.width // factor), int(img.height // factor)
    if mw < 1 or mh < 1:
        raise DegenerateIntermediate(
            f"factor {factor} shrinks {img.width}x{img.height} to {mw}x{mh}")
    small = resize(img, mw, mh, "bicubic")
    return resize(small, img.width, img.height, "bicubic")


def apply(spec: PerturbationSpec, img: Raster, stream: int = 0) -> Raster:
    """Apply exactly one perturbation; ``stream`` separates noise between images."""
    if spec.kind == "jpeg":
        return jpeg_roundtrip(img, spec.param)
    if spec.kind == "blur":
        return gaussian_blur(img, int(spec.param))
    if spec.kind == "noise":
        return add_gaussian_noise(img, float(spec.param), spec.seed, stream)
    return resize_down_up(img, int(spec.param))
