"""Deterministic synthetic scenes and source pairs.

A hermetic stand-in for real fusion benchmarks: scenes are built from
Gaussian blobs, ramps, blurred rectangles and checkerboard patches, and
pairs are derived from a scene by per-task blur, exposure and noise
transforms.
"""

import numpy as np
from scipy import ndimage

from .image import ImagePair, Task

__all__ = ["scene", "pristine_corpus", "make_pair", "synthetic_pairs",
           "salt_and_pepper", "SYNTHETIC_PREFIX"]

SYNTHETIC_PREFIX = "synthetic-"
PAIR_TASKS = (Task.MultiFocus, Task.MultiExposure, Task.InfraredVisible)


def scene(rng, size=128):
    """One textured scene in ``[0.05, 0.95]``."""
    h = w = int(size)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    angle = rng.uniform(0, 2 * np.pi)
    img = 0.3 * (np.cos(angle) * xx + np.sin(angle) * yy) / size
    for _ in range(rng.integers(4, 9)):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        s = rng.uniform(0.05, 0.2) * size
        img += rng.uniform(-0.6, 0.6) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
    for _ in range(rng.integers(2, 5)):
        y0, x0 = rng.integers(0, h - 8), rng.integers(0, w - 8)
        y1, x1 = y0 + rng.integers(6, h // 3), x0 + rng.integers(6, w // 3)
        rect = np.zeros((h, w))
        rect[y0:y1, x0:x1] = rng.uniform(-0.4, 0.4)
        img += ndimage.gaussian_filter(rect, 0.7, mode="nearest")
    y0, x0 = rng.integers(0, h // 2), rng.integers(0, w // 2)
    cell = int(rng.integers(2, 6))
    board = ((yy // cell + xx // cell) % 2 - 0.5) * 0.25
    mask = np.zeros((h, w))
    mask[y0:y0 + h // 3, x0:x0 + w // 3] = 1.0
    img += board * mask
    texture = ndimage.gaussian_filter(rng.standard_normal((h, w)), 1.0, mode="nearest")
    img += 0.08 * texture / (texture.std() + 1e-12)
    lo, hi = img.min(), img.max()
    return 0.05 + 0.9 * (img - lo) / (hi - lo)


def pristine_corpus(count=8, size=128, seed=0):
    """Bundled pristine scenes used to fit the default NSS model."""
    rng = np.random.default_rng(seed)
    return [scene(rng, size) for _ in range(count)]


def salt_and_pepper(img, density, rng):
    out = np.array(img, dtype=np.float64, copy=True)
    hit = rng.random(out.shape) < density
    out[hit] = (rng.random(int(hit.sum())) < 0.5).astype(np.float64)
    return out


def _blur(img, sigma):
    return ndimage.gaussian_filter(img, sigma, mode="nearest")


def make_pair(rng, task, size=128, pair_id="pair"):
    """Derive a source pair of the given task from a fresh scene."""
    s = scene(rng, size)
    ref = None
    if task is Task.MultiFocus:
        sigma = rng.uniform(1.5, 3.0)
        blurred = _blur(s, sigma)
        split = int(rng.integers(size // 3, 2 * size // 3))
        left = np.zeros_like(s, dtype=bool)
        left[:, :split] = True
        a = np.where(left, s, blurred)
        b = np.where(left, blurred, s)
        ref = s
    elif task is Task.MultiExposure:
        g = rng.uniform(1.8, 2.6)
        a = 0.8 * s ** g
        b = 1.0 - 0.8 * (1.0 - s) ** g
        ref = s
    else:
        hot = np.zeros_like(s)
        yy, xx = np.mgrid[0:size, 0:size]
        for _ in range(rng.integers(2, 4)):
            cy, cx = rng.uniform(0, size, 2)
            r = rng.uniform(0.04, 0.1) * size
            hot += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
        a = s
        b = 0.5 * _blur(s, 2.0) + 0.5 * np.clip(hot, 0, 1)
        b = b + rng.normal(0.0, 2.0 / 255.0, s.shape)
    a = np.clip(a, 0.0, 1.0)
    b = np.clip(b, 0.0, 1.0)
    return ImagePair(pair_id, a, b, task, ref)


def synthetic_pairs(count, seed=0, size=128):
    """``count`` pairs cycling through multi-focus, exposure and IR/visible."""
    rng = np.random.default_rng(seed)
    return [make_pair(rng, PAIR_TASKS[k % len(PAIR_TASKS)], size,
                      f"{SYNTHETIC_PREFIX}{k:03d}")
            for k in range(count)]
