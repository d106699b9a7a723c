"""Image container, file codecs, colour conversion and resampling.

Pixels are carried as float64 in ``(height, width, channels)`` order and are
only rounded to 8 bits when written to disk.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptStream, InvalidInput, IoFailure, UnsupportedFormat, ZeroDimension

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".pgm", ".ppm", ".bmp")
_READABLE = {"PNG", "JPEG", "PPM", "BMP"}
_SIGNATURES = (b"\x89PNG\r\n\x1a\n", b"\xff\xd8\xff", b"BM", b"P5", b"P6")


@dataclass(frozen=True, eq=False)
class Raster:
    """A decoded image. ``data`` has shape (height, width, channels)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise InvalidInput(f"expected (h, w, 1|3) pixel array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ZeroDimension("raster has a zero dimension")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("raster contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def plane(self) -> np.ndarray:
        """The single channel as a 2-D array (1-channel rasters only)."""
        if self.channels != 1:
            raise InvalidInput("plane is only defined for single-channel rasters")
        return self.data[:, :, 0]

    def flat(self) -> np.ndarray:
        """Row-major pixel values, channel fastest."""
        return self.data.reshape(-1)

    def clamped(self) -> "Raster":
        return Raster(np.clip(self.data, 0.0, 255.0))

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.round(self.data), 0, 255).astype(np.uint8)

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"Raster({self.width}x{self.height}x{self.channels})"


# --- codecs -----------------------------------------------------------------

def decode_image(blob: bytes) -> Raster:
    """Decode PNG / baseline JPEG (and PNM, BMP) bytes into a Raster."""
    try:
        img = Image.open(io.BytesIO(blob))
    except UnidentifiedImageError as exc:
        if blob.startswith(_SIGNATURES):
            raise CorruptStream("image header is truncated or invalid") from exc
        raise UnsupportedFormat("unrecognised image container") from exc
    if img.format not in _READABLE:
        raise UnsupportedFormat(f"unsupported container {img.format}")
    try:
        img.load()
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptStream(f"could not decode {img.format} stream: {exc}") from exc
    return _from_pil(img)


def _from_pil(img: Image.Image) -> Raster:
    mode = img.mode
    if mode in ("1", "L", "LA"):
        arr = np.asarray(img.convert("L"), dtype=np.float64)
    elif mode in ("RGB", "RGBA", "P", "CMYK", "YCbCr"):
        arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    else:
        raise UnsupportedFormat(f"unsupported pixel mode {mode}")
    return Raster(arr)


def read_image(path) -> Raster:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_image(blob)


def _to_pil(img: Raster) -> Image.Image:
    u8 = img.to_uint8()
    if img.channels == 1:
        return Image.fromarray(u8[:, :, 0], mode="L")
    return Image.fromarray(u8, mode="RGB")


def encode_png(img: Raster) -> bytes:
    buf = io.BytesIO()
    # optimize/compress settings fixed so output bytes are reproducible
    _to_pil(img).save(buf, format="PNG", compress_level=6)
    return buf.getvalue()


def _write(path, blob: bytes) -> None:
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_png(img: Raster, path) -> None:
    _write(path, encode_png(img))


def write_pgm(img: Raster, path) -> None:
    """Binary 8-bit PGM (P5); single-channel rasters only."""
    u8 = img.to_uint8()
    if img.channels != 1:
        raise InvalidInput("PGM export needs a single-channel raster")
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    _write(path, header + u8[:, :, 0].tobytes())


def write_image(img: Raster, path) -> None:
    """Write by suffix: ``.pgm`` as PGM, everything else as PNG."""
    if str(path).lower().endswith(".pgm"):
        write_pgm(img, path)
    else:
        write_png(img, path)


# --- colour -----------------------------------------------------------------

def to_grayscale(img: Raster) -> Raster:
    """Unweighted mean over colour channels."""
    if img.channels == 1:
        return img
    d = img.data
    return Raster(((d[:, :, 0] + d[:, :, 1] + d[:, :, 2]) / 3.0)[:, :, None])


def center_crop_square(img: Raster) -> Raster:
    n = min(img.width, img.height)
    if img.width == img.height:
        return img
    y0 = (img.height - n) // 2
    x0 = (img.width - n) // 2
    return Raster(img.data[y0:y0 + n, x0:x0 + n])


# --- resampling -------------------------------------------------------------

def reflect_index(idx, n: int):
    """Map integer indices into [0, n) by edge-inclusive mirroring (dcba|abcd)."""
    idx = np.asarray(idx)
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n
    m = np.mod(idx, period)
    return np.where(m >= n, period - 1 - m, m)


def _cubic(x, a=-0.5):
    x = np.abs(x)
    x2 = x * x
    x3 = x2 * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def resample_matrix(n_in: int, n_out: int, method: str) -> np.ndarray:
    """(n_out, n_in) interpolation weights, half-pixel centres, mirrored edges."""
    centres = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(centres).astype(np.int64)
    frac = centres - base
    if method == "bilinear":
        offsets = np.array([0, 1])
        weights = np.stack([1.0 - frac, frac], axis=1)
    elif method == "bicubic":
        offsets = np.array([-1, 0, 1, 2])
        weights = _cubic(frac[:, None] - offsets[None, :])
    else:
        raise InvalidInput(f"unknown resampling method {method!r}")
    taps = reflect_index(base[:, None] + offsets[None, :], n_in)
    mat = np.zeros((n_out, n_in))
    rows = np.repeat(np.arange(n_out), len(offsets))
    np.add.at(mat, (rows, taps.ravel()), weights.ravel())
    return mat


def resize(img: Raster, out_w: int, out_h: int, method: str = "bilinear") -> Raster:
    """Separable bilinear or Catmull-Rom bicubic resampling, clamped to [0, 255]."""
    if out_w < 1 or out_h < 1:
        raise ZeroDimension(f"target size {out_w}x{out_h} has a zero dimension")
    if method not in ("bilinear", "bicubic"):
        raise InvalidInput(f"unknown resampling method {method!r}")
    if (out_w, out_h) == (img.width, img.height):
        return Raster(img.data.copy())
    my = resample_matrix(img.height, out_h, method)
    mx = resample_matrix(img.width, out_w, method)
    tmp = np.tensordot(my, img.data, axes=(1, 0))           # (out_h, w, c)
    out = np.tensordot(tmp, mx, axes=(1, 1)).transpose(0, 2, 1)  # (out_h, out_w, c)
    return Raster(np.clip(out, 0.0, 255.0))
