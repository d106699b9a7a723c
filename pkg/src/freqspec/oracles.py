"""Brute-force reference implementations for cross-checking the fast paths.

Plain Python loops on purpose: none of this code shares an implementation with
the modules it validates. Each oracle enforces an input-size cap.
"""
import cmath
import math

from .errors import InputTooLarge

MAX_DFT = 32
MAX_SAMPLES = 256
MAX_IMAGE = 64
MAX_MATRIX = 512


def _cap(n, limit, what):
    if n > limit:
        raise InputTooLarge(f"{what} of size {n} exceeds oracle cap {limit}")


def naive_dft(grid):
    """Direct O(N^4) 2-D DFT of a square grid (list of rows or 2-D array)."""
    rows = [list(map(float, r)) for r in grid]
    n = len(rows)
    _cap(n, MAX_DFT, "DFT input")
    if any(len(r) != n for r in rows):
        raise ValueError("naive_dft expects a square grid")
    out = [[0j] * n for _ in range(n)]
    for ku in range(n):
        for kv in range(n):
            acc = 0j
            for y in range(n):
                for x in range(n):
                    acc += rows[y][x] * cmath.exp(-2j * math.pi * (ku * y + kv * x) / n)
            out[ku][kv] = acc
    return out


def pairwise_auc(labels, scores):
    """P(fake > real) + P(tie)/2 by comparing every (fake, real) pair."""
    _cap(len(scores), MAX_SAMPLES, "score list")
    pos = [s for l, s in zip(labels, scores) if l == 1]
    neg = [s for l, s in zip(labels, scores) if l == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def sweep_ap(labels, scores):
    """Sweep every distinct threshold high to low; AP = sum of recall gain * precision."""
    _cap(len(scores), MAX_SAMPLES, "score list")
    n_pos = sum(1 for l in labels if l == 1)
    ap, prev_recall = 0.0, 0.0
    for t in sorted(set(scores), reverse=True):
        chosen = [l for l, s in zip(labels, scores) if s >= t]
        tp = sum(1 for l in chosen if l == 1)
        recall = tp / n_pos
        ap += (recall - prev_recall) * (tp / len(chosen))
        prev_recall = recall
    return ap


def _mirror(i, n):
    while i < 0 or i >= n:
        i = -i - 1 if i < 0 else 2 * n - 1 - i
    return i


def sorted_median(image, k):
    """k x k median with mirrored edges by sorting each window."""
    h, w = len(image), len(image[0])
    _cap(max(h, w), MAX_IMAGE, "image")
    r = k // 2
    out = []
    for y in range(h):
        row = []
        for x in range(w):
            window = sorted(float(image[_mirror(y + dy, h)][_mirror(x + dx, w)])
                            for dy in range(-r, r + 1) for dx in range(-r, r + 1))
            row.append(window[len(window) // 2])
        out.append(row)
    return out


def direct_conv2(image, kernel):
    """Full 2-D correlation with a (possibly non-separable) odd kernel, mirrored edges."""
    h, w = len(image), len(image[0])
    _cap(max(h, w), MAX_IMAGE, "image")
    kh, kw = len(kernel), len(kernel[0])
    ry, rx = kh // 2, kw // 2
    out = []
    for y in range(h):
        row = []
        for x in range(w):
            acc = 0.0
            for i in range(kh):
                for j in range(kw):
                    acc += kernel[i][j] * image[_mirror(y + i - ry, h)][_mirror(x + j - rx, w)]
            row.append(acc)
        out.append(row)
    return out


def twopass_cov(rows):
    """Mean, then unbiased covariance from centred products (textbook two-pass)."""
    n = len(rows)
    _cap(n, MAX_MATRIX, "sample")
    d = len(rows[0])
    mean = [sum(r[j] for r in rows) / n for j in range(d)]
    cov = [[0.0] * d for _ in range(d)]
    for a in range(d):
        for b in range(d):
            cov[a][b] = sum((r[a] - mean[a]) * (r[b] - mean[b]) for r in rows) / (n - 1)
    return mean, cov
