"""Frequency fingerprints: median high-pass residual, centred log-magnitude
FFT spectrum, mean spectra over image sets, and a fixed-length descriptor.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import EmptySet, EvenWindow, InvalidInput, MixedSizes, NonSquareInput
from .raster import Raster, center_crop_square, to_grayscale, write_image

DEFAULT_MEDIAN_K = 3
DEFAULT_EPSILON = 1e-8
DEFAULT_BANDS = 32
DEFAULT_MEAN_SAMPLES = 1000


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Log-magnitude spectrum on an N x N grid; DC at ``(N//2, N//2)`` when centred."""

    values: np.ndarray
    dc_centered: bool = True

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FeatureVector:
    radial_bands: np.ndarray
    directional_bands: np.ndarray
    axis_profile: np.ndarray
    nyquist_peaks: np.ndarray

    def to_array(self) -> np.ndarray:
        return np.concatenate(
            [self.radial_bands, self.directional_bands, self.axis_profile, self.nyquist_peaks]
        )

    @classmethod
    def from_array(cls, arr, bands: int = DEFAULT_BANDS) -> "FeatureVector":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != (feature_length(bands),):
            raise InvalidInput(f"expected {feature_length(bands)} features, got {arr.shape}")
        return cls(arr[:bands], arr[bands:bands + 4], arr[bands + 4:bands + 6], arr[bands + 6:])

    def __len__(self):
        return len(self.radial_bands) + 9


def feature_length(bands: int = DEFAULT_BANDS) -> int:
    return bands + 4 + 2 + 3


def feature_names(bands: int = DEFAULT_BANDS) -> list[str]:
    return (
        [f"radial_{b:02d}" for b in range(bands)]
        + ["dir_000", "dir_045", "dir_090", "dir_135"]
        + ["axis_h", "axis_v"]
        + ["nyq_u", "nyq_v", "nyq_uv"]
    )


def highpass_residual(gray: Raster, median_k: int = DEFAULT_MEDIAN_K) -> Raster:
    """``gray - median_k x median_k median(gray)`` with mirrored borders, unclamped."""
    if median_k < 3 or median_k % 2 == 0:
        raise EvenWindow(f"median window must be odd and >= 3, got {median_k}")
    plane = gray.plane
    r = median_k // 2
    padded = np.pad(plane, r, mode="symmetric")
    med = kernels.median_filter(padded, median_k)
    return Raster((plane - med)[:, :, None])


def fft_magnitude(residual: Raster) -> np.ndarray:
    """Unshifted |DFT| of a square single-channel raster (unnormalised forward)."""
    plane = residual.plane
    if plane.shape[0] != plane.shape[1]:
        raise NonSquareInput(f"FFT input must be square, got {plane.shape[1]}x{plane.shape[0]}")
    return np.abs(np.fft.fft2(plane))


def fft_log_spectrum(residual: Raster, epsilon: float = DEFAULT_EPSILON) -> Spectrum:
    if not epsilon > 0:
        raise InvalidInput("epsilon must be positive")
    mag = fft_magnitude(residual)
    return Spectrum(np.fft.fftshift(np.log(mag + epsilon)), dc_centered=True)


def image_spectrum(img: Raster, median_k: int = DEFAULT_MEDIAN_K,
                   epsilon: float = DEFAULT_EPSILON) -> Spectrum:
    """Full pipeline for one image: gray -> square crop -> residual -> spectrum."""
    gray = center_crop_square(to_grayscale(img))
    return fft_log_spectrum(highpass_residual(gray, median_k), epsilon)


def mean_spectrum(images, median_k: int = DEFAULT_MEDIAN_K, epsilon: float = DEFAULT_EPSILON,
                  threads: int = 1) -> Spectrum:
    """Element-wise mean of per-image log spectra.

    Spectra are reduced in input order with a running mean, so the result does
    not depend on ``threads`` and K copies of one image reproduce its spectrum.
    """
    images = list(images)
    if not images:
        raise EmptySet("mean_spectrum needs at least one image")

    def one(img):
        return image_spectrum(img, median_k, epsilon).values

    mean = None
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for k, values in enumerate(pool.map(one, images), start=1):
            if mean is None:
                mean = values.copy()
                continue
            if values.shape != mean.shape:
                raise MixedSizes(f"spectrum {values.shape} differs from {mean.shape}")
            mean += (values - mean) / k
    return Spectrum(mean, dc_centered=True)


@lru_cache(maxsize=32)
def _geometry(n: int, bands: int):
    c = n // 2
    v, u = np.mgrid[0:n, 0:n]
    u = u - c
    v = v - c
    radius = np.hypot(u, v)
    rnorm = radius / radius.max()
    band = np.minimum((rnorm * bands).astype(np.int64), bands - 1)
    theta = np.mod(np.arctan2(v, u), np.pi)
    sector = np.mod(np.floor((theta + np.pi / 8) / (np.pi / 4)).astype(np.int64), 4)
    band_counts = np.bincount(band.ravel(), minlength=bands)
    cell = (sector * bands + band).ravel()
    cell_counts = np.bincount(cell, minlength=4 * bands).reshape(4, bands)
    shared = np.all(cell_counts > 0, axis=0)
    for arr in (band, cell, band_counts, cell_counts, shared):
        arr.setflags(write=False)
    return band.ravel(), band_counts, cell, cell_counts, shared


def band_assignment(n: int, bands: int = DEFAULT_BANDS):
    """(radial band index, sector index) per grid bin, both shaped (n, n)."""
    band, _, cell, _, _ = _geometry(n, bands)
    return band.reshape(n, n), (cell // bands).reshape(n, n)


def extract_features(spec: Spectrum, bands: int = DEFAULT_BANDS) -> FeatureVector:
    """Radial bands, radially balanced sector energies, axis means, Nyquist points."""
    if not spec.dc_centered:
        raise InvalidInput("extract_features expects a DC-centred spectrum")
    vals = spec.values
    n = vals.shape[0]
    if vals.shape != (n, n):
        raise NonSquareInput("spectrum grid must be square")
    band, band_counts, cell, cell_counts, shared = _geometry(n, bands)
    flat = vals.ravel()

    sums = np.bincount(band, weights=flat, minlength=bands)
    filled = band_counts > 0
    radial = np.empty(bands)
    radial[filled] = sums[filled] / band_counts[filled]
    if not filled.all():
        centres = np.arange(bands)
        radial[~filled] = np.interp(centres[~filled], centres[filled], radial[filled])

    cell_sums = np.bincount(cell, weights=flat, minlength=4 * bands).reshape(4, bands)
    if shared.any():
        directional = (cell_sums[:, shared] / cell_counts[:, shared]).mean(axis=1)
    else:
        directional = cell_sums.sum(axis=1) / np.maximum(cell_counts.sum(axis=1), 1)

    c = n // 2
    row = vals[c]
    col = vals[:, c]
    axis = np.array([
        (row.sum() - row[c]) / (n - 1),
        (col.sum() - col[c]) / (n - 1),
    ])
    nyquist = np.array([vals[c, 0], vals[0, c], vals[0, 0]])
    return FeatureVector(radial, directional, axis, nyquist)


def image_features(img: Raster, median_k: int = DEFAULT_MEDIAN_K,
                   epsilon: float = DEFAULT_EPSILON, bands: int = DEFAULT_BANDS) -> np.ndarray:
    return extract_features(image_spectrum(img, median_k, epsilon), bands).to_array()


def spectrum_to_raster(spec: Spectrum) -> Raster:
    """Min-max map to 0..255; a flat spectrum maps to all zeros."""
    v = spec.values
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        scaled = (v - lo) / (hi - lo) * 255.0
    else:
        scaled = np.zeros_like(v)
    return Raster(scaled[:, :, None])


def export_spectrum_image(spec: Spectrum, path) -> None:
    """Write the spectrum as an 8-bit grayscale PNG, or PGM for a ``.pgm`` path."""
    write_image(spectrum_to_raster(spec), path)
