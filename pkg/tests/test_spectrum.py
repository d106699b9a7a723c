import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from freqspec import oracles, spectrum
from freqspec.errors import EmptySet, EvenWindow, MixedSizes, NonSquareInput
from freqspec.raster import Raster, read_image
from freqspec.spectrum import Spectrum

EPS = spectrum.DEFAULT_EPSILON


def gray(a):
    return Raster(np.asarray(a, dtype=float)[:, :, None])


def test_residual_of_constant_is_zero():
    assert np.all(spectrum.highpass_residual(gray(np.full((6, 6), 9.0))).plane == 0)


def test_residual_of_impulse():
    img = np.zeros((7, 7))
    img[3, 3] = 100.0
    res = spectrum.highpass_residual(gray(img)).plane
    ref = img - np.array(oracles.sorted_median(img.tolist(), 3))
    assert res[3, 3] == 100.0
    assert np.array_equal(res, ref)


@pytest.mark.parametrize("k", [3, 5])
def test_residual_matches_sorted_window_oracle(rng, k):
    img = rng.uniform(0, 255, (8, 9))
    res = spectrum.highpass_residual(gray(img), k).plane
    assert np.array_equal(res, img - np.array(oracles.sorted_median(img.tolist(), k)))


@pytest.mark.parametrize("k", [1, 2, 4])
def test_even_or_tiny_window_rejected(k):
    with pytest.raises(EvenWindow):
        spectrum.highpass_residual(gray(np.zeros((4, 4))), k)


@given(arrays(np.int64, (8, 8), elements=st.integers(0, 255)), st.integers(-500, 500))
def test_residual_ignores_constant_offset(img, c):
    a = spectrum.highpass_residual(gray(img))
    b = spectrum.highpass_residual(gray(img + c))
    assert np.array_equal(a.data, b.data)


def test_log_spectrum_of_constant():
    n, c = 8, 3.0
    vals = spectrum.fft_log_spectrum(gray(np.full((n, n), c))).values
    centre = n // 2
    assert vals[centre, centre] == pytest.approx(math.log(c * n * n + EPS))
    others = np.delete(vals.ravel(), centre * n + centre)
    assert np.allclose(others, math.log(EPS), atol=1e-6)


def test_horizontal_cosine_gives_symmetric_peaks():
    n, f = 16, 3
    x = np.arange(n)
    img = np.tile(np.cos(2 * np.pi * f * x / n), (n, 1))
    vals = spectrum.fft_log_spectrum(gray(img)).values
    c = n // 2
    peaks = {tuple(p) for p in np.argwhere(vals > 0)}
    assert peaks == {(c, c + f), (c, c - f)}


@pytest.mark.parametrize("seed", range(5))
def test_magnitudes_match_naive_dft(seed):
    img = np.random.default_rng(seed).normal(size=(16, 16))
    fast = spectrum.fft_magnitude(gray(img))
    slow = np.abs(np.array(oracles.naive_dft(img)))
    assert np.max(np.abs(fast - slow)) <= 1e-9 * slow.max()


def test_non_square_rejected():
    with pytest.raises(NonSquareInput):
        spectrum.fft_log_spectrum(gray(np.zeros((4, 6))))


@given(arrays(np.float64, (8, 8), elements=st.floats(-100, 100)))
def test_parseval_and_centro_symmetry(img):
    mag = spectrum.fft_magnitude(gray(img))
    lhs, rhs = np.sum(mag ** 2), 64 * np.sum(img ** 2)
    assert abs(lhs - rhs) <= 1e-6 * max(rhs, 1e-12)
    vals = spectrum.fft_log_spectrum(gray(img)).values
    mirrored = np.roll(vals[::-1, ::-1], 1, axis=(0, 1))
    assert np.max(np.abs(vals - mirrored)) <= 1e-9 * max(1.0, np.max(np.abs(vals)))


def test_image_spectrum_crops_color_input(rng):
    img = Raster(rng.uniform(0, 255, (10, 14, 3)))
    assert spectrum.image_spectrum(img).size == 10


def test_mean_spectrum_singleton_and_copies(rng):
    img = Raster(rng.uniform(0, 255, (16, 16, 3)))
    single = spectrum.image_spectrum(img).values
    assert np.array_equal(spectrum.mean_spectrum([img]).values, single)
    assert np.array_equal(spectrum.mean_spectrum([img] * 7).values, single)


def test_mean_spectrum_threads_do_not_matter(rng):
    imgs = [Raster(rng.uniform(0, 255, (16, 16, 1))) for _ in range(9)]
    a = spectrum.mean_spectrum(imgs, threads=1).values
    b = spectrum.mean_spectrum(imgs, threads=4).values
    assert np.array_equal(a, b)
    ref = np.mean([spectrum.image_spectrum(i).values for i in imgs], axis=0)
    assert np.allclose(a, ref, atol=1e-12)


def test_mean_spectrum_errors():
    with pytest.raises(EmptySet):
        spectrum.mean_spectrum([])
    with pytest.raises(MixedSizes):
        spectrum.mean_spectrum([gray(np.zeros((8, 8))), gray(np.zeros((16, 16)))])


def test_default_mean_sample_count():
    assert spectrum.DEFAULT_MEAN_SAMPLES == 1000


def test_feature_layout():
    names = spectrum.feature_names()
    assert len(names) == spectrum.feature_length() == 41
    fv = spectrum.extract_features(Spectrum(np.zeros((16, 16))))
    assert len(fv) == 41 and fv.to_array().shape == (41,)
    back = spectrum.FeatureVector.from_array(fv.to_array())
    assert np.array_equal(back.to_array(), fv.to_array())


@pytest.mark.parametrize("n", [8, 16, 64])
def test_band_and_sector_assignment_partitions_grid(n):
    band, sector = spectrum.band_assignment(n)
    assert band.shape == sector.shape == (n, n)
    assert band.min() >= 0 and band.max() <= spectrum.DEFAULT_BANDS - 1
    assert set(np.unique(sector)) == {0, 1, 2, 3}
    cells = band * 4 + sector
    assert np.bincount(cells.ravel()).sum() == n * n


def test_dc_delta_features():
    n = 64
    vals = np.full((n, n), math.log(EPS))
    vals[n // 2, n // 2] = 10.0
    fv = spectrum.extract_features(Spectrum(vals))
    assert fv.radial_bands[0] > math.log(EPS)
    assert np.allclose(fv.radial_bands[1:], math.log(EPS))


def test_checkerboard_lights_corner_nyquist():
    n = 16
    board = np.indices((n, n)).sum(axis=0) % 2 * 255.0
    vals = spectrum.fft_log_spectrum(gray(board)).values
    fv = spectrum.extract_features(Spectrum(vals))
    ref = np.abs(np.array(oracles.naive_dft(board)))
    assert ref[n // 2, n // 2] == pytest.approx(board.sum())
    assert fv.nyquist_peaks[2] == pytest.approx(math.log(ref[n // 2, n // 2] + EPS))
    assert fv.nyquist_peaks[2] > max(fv.nyquist_peaks[:2])


def test_rotationally_symmetric_spectrum_has_equal_sectors():
    n = 64
    band, _ = spectrum.band_assignment(n)
    vals = np.sin(band * 0.7) * 3.0  # any function of the band index alone
    fv = spectrum.extract_features(Spectrum(vals))
    assert np.ptp(fv.directional_bands) <= 1e-6


@given(st.floats(-50, 50))
def test_features_shift_with_constant_offset(c):
    vals = np.random.default_rng(0).normal(size=(32, 32))
    a = spectrum.extract_features(Spectrum(vals)).to_array()
    b = spectrum.extract_features(Spectrum(vals + c)).to_array()
    assert np.allclose(b - a, c, atol=1e-9)


def test_export_constant_and_binary(tmp_path):
    spectrum.export_spectrum_image(Spectrum(np.full((4, 4), 2.5)), tmp_path / "c.png")
    assert np.all(read_image(tmp_path / "c.png").data == 0)
    vals = np.where(np.eye(4) > 0, 1.0, -3.0)
    spectrum.export_spectrum_image(Spectrum(vals), tmp_path / "b.pgm")
    assert set(np.unique(read_image(tmp_path / "b.pgm").data)) == {0.0, 255.0}


def test_export_preserves_rank_order(tmp_path, rng):
    vals = rng.normal(size=(16, 16))
    spectrum.export_spectrum_image(Spectrum(vals), tmp_path / "s.png")
    back = read_image(tmp_path / "s.png").plane.ravel()
    order = np.argsort(vals.ravel(), kind="stable")
    assert np.all(np.diff(back[order]) >= 0)
