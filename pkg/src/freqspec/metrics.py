"""Ranking metrics (ROC-AUC, AP), PSNR and the Fréchet distance between Gaussians.

Label 1 ("fake") is the positive class throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidInput, NoPositives, ShapeMismatch, SingleClass, TooFewSamples
from .raster import Raster

REAL, FAKE = 0, 1


@dataclass(frozen=True)
class ScoredSample:
    label: int
    score: float


def _unpack(samples, scores=None):
    """Accept ScoredSample sequences, (label, score) pairs, or parallel arrays."""
    if scores is not None:
        labels = np.asarray(samples, dtype=np.int64)
        scores = np.asarray(scores, dtype=np.float64)
    else:
        samples = list(samples)
        labels = np.array([s.label if isinstance(s, ScoredSample) else s[0] for s in samples],
                          dtype=np.int64)
        scores = np.array([s.score if isinstance(s, ScoredSample) else s[1] for s in samples],
                          dtype=np.float64)
    if labels.shape != scores.shape:
        raise ShapeMismatch("labels and scores differ in length")
    if not np.all(np.isfinite(scores)):
        raise InvalidInput("scores must be finite")
    if not np.all((labels == REAL) | (labels == FAKE)):
        raise InvalidInput("labels must be 0 (real) or 1 (fake)")
    return labels, scores


def auc(samples, scores=None) -> float:
    """Mann-Whitney AUC: P(fake > real) + P(tie)/2, via midranks in O(n log n)."""
    labels, scores = _unpack(samples, scores)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both real and fake samples")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    # midranks for tie groups (1-based)
    starts = np.flatnonzero(np.r_[True, sorted_scores[1:] != sorted_scores[:-1]])
    ends = np.r_[starts[1:], sorted_scores.size]
    midrank = (starts + ends + 1) / 2.0
    ranks = np.empty(scores.size)
    ranks[order] = np.repeat(midrank, ends - starts)
    u = ranks[labels == FAKE].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(samples, scores=None) -> float:
    """Step-interpolated AP; tied scores form one threshold."""
    labels, scores = _unpack(samples, scores)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoPositives("AP needs at least one fake sample")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    last = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(y)[last]
    seen = last + 1
    precision = tp / seen
    recall_gain = np.diff(np.r_[0, tp]) / n_pos
    return float(np.sum(recall_gain * precision))


def psnr(a: Raster, b: Raster) -> float:
    """Peak signal-to-noise ratio on the 0..255 scale; ``inf`` for identical inputs."""
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"PSNR of {a!r} vs {b!r}")
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


@dataclass(frozen=True, eq=False)
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    n: int = 0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if cov.shape != (mu.size, mu.size):
            raise DimensionMismatch(f"covariance {cov.shape} does not match mean {mu.shape}")
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def dim(self) -> int:
        return self.mean.size


def fit_gaussian(features) -> GaussianStats:
    """Sample mean and unbiased covariance of an (n, d) feature matrix."""
    x = np.asarray([np.asarray(f.to_array() if hasattr(f, "to_array") else f, dtype=np.float64)
                    for f in features])
    if x.ndim != 2 or x.shape[0] < 2:
        raise TooFewSamples("need at least two feature vectors")
    mu = x.mean(axis=0)
    centred = x - mu
    cov = centred.T @ centred / (x.shape[0] - 1)
    return GaussianStats(mu, cov, x.shape[0])


def _psd_sqrt(m):
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Squared Fréchet distance ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The trace of the product square root is taken through the symmetric
    matrix ``sqrt(S_a) S_b sqrt(S_a)``, which has the same spectrum.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension {a.dim} vs {b.dim}")
    diff = a.mean - b.mean
    root_a = _psd_sqrt(a.cov)
    middle = root_a @ b.cov @ root_a
    eig = np.clip(np.linalg.eigvalsh(0.5 * (middle + middle.T)), 0.0, None)
    tr_cross = float(np.sum(np.sqrt(eig)))
    tr_a = float(np.sum(np.clip(np.linalg.eigvalsh(a.cov), 0.0, None)))
    tr_b = float(np.sum(np.clip(np.linalg.eigvalsh(b.cov), 0.0, None)))
    d2 = float(diff @ diff) + tr_a + tr_b - 2.0 * tr_cross
    return max(d2, 0.0)
