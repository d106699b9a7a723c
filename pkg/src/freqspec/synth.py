"""Synthetic "real" and "fake" images for desk-scale experiments.

``natural`` images are Gaussian random fields with an isotropic 1/f^alpha
power spectrum. Each fake kind adds one engineered frequency fingerprint:

* ``hf_noise``     white noise restricted to the top radial frequency quartile
* ``grid``         an additive period-8 cosine lattice with a weak Nyquist harmonic
* ``lowfreq_axis`` low-frequency energy living only on the u=0 / v=0 axes
* ``upsampled``    a half-size natural field, nearest-neighbour upscaled x2

Artifact strengths are in intensity units at the reference contrast and scale
with each image's contrast, so a fake differs from its natural base by a fixed
relative amount.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .raster import Raster, write_png

KINDS = ("natural", "hf_noise", "grid", "lowfreq_axis", "upsampled")
FAKE_KINDS = KINDS[1:]

DEFAULT_STRENGTH = {
    "natural": 0.0,
    "hf_noise": 8.0,
    "grid": 48.0,
    "lowfreq_axis": 8.0,
    "upsampled": 0.0,
}

GRID_PERIOD = 8
GRID_NYQUIST = 0.15
MEAN_LEVEL = 127.5
CONTRAST = 40.0
CHROMA = 0.3
# per-image scene variation used when rendering corpora
ALPHA_RANGE = (1.6, 2.4)
CONTRAST_RANGE = (20.0, 60.0)


@dataclass(frozen=True)
class SynthSpec:
    kind: str = "natural"
    size: int = 256
    alpha: float = 2.0
    artifact_strength: float | None = None
    seed: int = 0
    contrast: float = CONTRAST

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown synth kind {self.kind!r}")
        if self.size < 4 or self.size & (self.size - 1):
            raise InvalidSpec(f"size must be a power of two >= 4, got {self.size}")
        if not self.alpha > 0:
            raise InvalidSpec("alpha must be positive")
        if self.artifact_strength is not None and self.artifact_strength < 0:
            raise InvalidSpec("artifact_strength must be >= 0")
        if not self.contrast > 0:
            raise InvalidSpec("contrast must be positive")

    @property
    def strength(self) -> float:
        if self.artifact_strength is None:
            return DEFAULT_STRENGTH[self.kind]
        return float(self.artifact_strength)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), stream]))


def _unit(x):
    x = x - x.mean()
    s = x.std()
    return x / s if s > 0 else x


def power_law_field(n: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance real field whose power spectrum falls off as 1/f^alpha."""
    spec = np.fft.fft2(rng.standard_normal((n, n)))
    f = np.fft.fftfreq(n) * n
    radius = np.hypot(f[:, None], f[None, :])
    radius[0, 0] = 1.0
    spec *= radius ** (-alpha / 2.0)
    spec[0, 0] = 0.0
    return _unit(np.fft.ifft2(spec).real)


def _natural_planes(n, alpha, rng):
    lum = power_law_field(n, alpha, rng)
    chans = [lum + CHROMA * power_law_field(n, alpha, rng) for _ in range(3)]
    return np.stack(chans, axis=-1)


def hf_noise_pattern(n, rng):
    spec = np.fft.fft2(rng.standard_normal((n, n)))
    f = np.fft.fftfreq(n) * n
    radius = np.hypot(f[:, None], f[None, :]) / (n / 2)
    spec[radius < 0.75] = 0.0
    return _unit(np.fft.ifft2(spec).real)


def grid_pattern(n, rng, period=GRID_PERIOD):
    """Separable lattice: fundamental at 1/period plus a Nyquist-rate harmonic."""
    ox, oy = rng.integers(0, period, size=2)
    idx = np.arange(n)

    def profile(off):
        t = idx - off
        return np.cos(2 * np.pi * t / period) + GRID_NYQUIST * np.cos(np.pi * t)

    return _unit(profile(oy)[:, None] + profile(ox)[None, :])


def axis_pattern(n, rng):
    """a(x) + b(y) with a, b white noise band-limited to |k| <= n/4."""
    k = np.abs(np.fft.fftfreq(n) * n)
    keep = (k >= 1) & (k <= n // 4)

    def line():
        s = np.fft.fft(rng.standard_normal(n))
        s[~keep] = 0.0
        return _unit(np.fft.ifft(s).real)

    a, b = line(), line()
    return _unit(b[:, None] + a[None, :])


def generate(spec: SynthSpec) -> Raster:
    """Deterministic image for ``spec``; pixel values are real, clamped to [0, 255]."""
    n = spec.size
    base_rng = _rng(spec.seed, 0)
    if spec.kind == "upsampled":
        half = _natural_planes(n // 2, spec.alpha, base_rng)
        planes = np.repeat(np.repeat(half, 2, axis=0), 2, axis=1)
        return Raster(np.clip(MEAN_LEVEL + spec.contrast * planes, 0.0, 255.0))
    planes = _natural_planes(n, spec.alpha, base_rng)
    if spec.kind != "natural":
        art_rng = _rng(spec.seed, 1)
        pattern = {"hf_noise": hf_noise_pattern, "grid": grid_pattern,
                   "lowfreq_axis": axis_pattern}[spec.kind](n, art_rng)
        planes = planes + (spec.strength / CONTRAST) * pattern[:, :, None]
    return Raster(np.clip(MEAN_LEVEL + spec.contrast * planes, 0.0, 255.0))


def corpus_specs(kinds, n_natural: int, n_fake: int, size: int, seed: int,
                 alpha_range=ALPHA_RANGE, strengths=None, contrast_range=CONTRAST_RANGE):
    """(directory, filename, SynthSpec) for every image of a corpus.

    Natural images go to ``real/``; each fake kind gets its own directory.
    Per-image seeds, alphas and contrasts come from a seeded root so the corpus
    is a pure function of the arguments.
    """
    strengths = dict(strengths or {})
    out = []
    groups = [("real", "natural", n_natural)] + [(k, k, n_fake) for k in kinds if k != "natural"]
    for dirname, kind, count in groups:
        rng = _rng(seed, 1000 + KINDS.index(kind))
        seeds = rng.integers(0, 2**63 - 1, size=count)
        alphas = rng.uniform(alpha_range[0], alpha_range[1], size=count)
        contrasts = rng.uniform(contrast_range[0], contrast_range[1], size=count)
        for i in range(count):
            spec = SynthSpec(kind, size, float(alphas[i]), strengths.get(kind), int(seeds[i]),
                             float(contrasts[i]))
            out.append((dirname, f"{dirname}_{i:05d}.png", spec))
    return out


def write_corpus(root, kinds=FAKE_KINDS, n_natural: int = 500, n_fake: int = 500,
                 size: int = 128, seed: int = 0, alpha_range=ALPHA_RANGE, strengths=None,
                 contrast_range=CONTRAST_RANGE, threads: int = 1) -> list[Path]:
    """Render a corpus to PNG files under ``root``; returns the written paths."""
    root = Path(root)
    jobs = corpus_specs(kinds, n_natural, n_fake, size, seed, alpha_range, strengths,
                        contrast_range)
    for dirname in {d for d, _, _ in jobs}:
        (root / dirname).mkdir(parents=True, exist_ok=True)

    def render(job):
        dirname, name, spec = job
        path = root / dirname / name
        write_png(generate(spec), path)
        return path

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(render, jobs))
