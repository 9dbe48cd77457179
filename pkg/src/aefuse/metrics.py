"""Full- and no-reference image quality indices.

Inputs are ``[0, 1]`` images.  Indices with 8-bit semantics (AG, SSIM
constants, PSNR peak, VIF noise variance) rescale to ``[0, 255]``
internally.  NIQE lives in :mod:`aefuse.niqe`.
"""

import enum

import numpy as np

from .errors import TooSmall
from .image import (
    convolve,
    downsample2,
    gaussian_kernel,
    histogram256,
    quantize,
    require_min_size,
    require_same_shape,
)

__all__ = [
    "MetricId",
    "entropy",
    "joint_entropy",
    "avg_gradient",
    "ssim",
    "ssim_map",
    "psnr",
    "mutual_information",
    "vif",
]

PEAK = 255.0
SSIM_WINDOW = gaussian_kernel(5, 1.5)
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2
VIF_SCALES = 4
VIF_SIGMA_N2 = 2.0


class MetricId(enum.Enum):
    EN = "EN"
    AG = "AG"
    SSIM = "SSIM"
    VIF = "VIF"
    NIQE = "NIQE"
    PSNR = "PSNR"
    MI = "MI"


def _shannon(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def entropy(img):
    """Shannon entropy of the 256-bin gray-level histogram, in bits."""
    return _shannon(histogram256(img))


def joint_entropy(a, b):
    require_same_shape(a, b)
    idx = quantize(a).astype(np.int64).ravel() * 256 + quantize(b).ravel()
    # only occupied cells matter, so skip the dense 65536-bin table
    return _shannon(np.unique(idx, return_counts=True)[1])


def mutual_information(a, b):
    """``H(a) + H(b) - H(a, b)`` from the 256x256 joint histogram."""
    require_same_shape(a, b)
    mi = entropy(a) + entropy(b) - joint_entropy(a, b)
    return max(mi, 0.0)


def avg_gradient(img):
    """Mean of ``sqrt((dx^2 + dy^2) / 2)`` over the valid forward-difference grid.

    The divisor is ``(M-1)(N-1)``, the number of pixels where both
    forward differences exist.
    """
    img = np.asarray(img, dtype=np.float64)
    require_min_size(img, 2)
    f = img * PEAK
    dx = f[:-1, 1:] - f[:-1, :-1]
    dy = f[1:, :-1] - f[:-1, :-1]
    return float(np.mean(np.sqrt((dx * dx + dy * dy) / 2.0)))


def _local_stats(p, r, window):
    mu_p = convolve(p, window)
    mu_r = convolve(r, window)
    var_p = convolve(p * p, window) - mu_p * mu_p
    var_r = convolve(r * r, window) - mu_r * mu_r
    cov = convolve(p * r, window) - mu_p * mu_r
    return mu_p, mu_r, var_p, var_r, cov


def ssim_map(p, r):
    """Local SSIM on the 255-scaled images (Gaussian window, sigma 1.5)."""
    require_same_shape(p, r)
    require_min_size(p, 11)
    p = np.asarray(p, dtype=np.float64) * PEAK
    r = np.asarray(r, dtype=np.float64) * PEAK
    mu_p, mu_r, var_p, var_r, cov = _local_stats(p, r, SSIM_WINDOW)
    num = (2 * mu_p * mu_r + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_p ** 2 + mu_r ** 2 + SSIM_C1) * (var_p + var_r + SSIM_C2)
    return num / den


def ssim(p, r):
    """Mean structural similarity of ``p`` against ``r``."""
    return float(np.mean(ssim_map(p, r)))


def psnr(p, r):
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    require_same_shape(p, r)
    diff = (np.asarray(p, dtype=np.float64) - np.asarray(r, dtype=np.float64)) * PEAK
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(PEAK ** 2 / mse)


def vif_window(scale):
    radius = min(2 * scale + 1, 11)
    return gaussian_kernel(radius, (2 * radius + 1) / 5.0)


def vif(p, r):
    """Pixel-domain visual information fidelity of ``p`` with reference ``r``.

    Four scales, each a ``downsample2`` of the previous.  Local gain
    ``g = cov / var_r`` and residual noise ``var_p - g * cov`` feed the
    Gaussian-channel information ratio with ``sigma_n^2 = 2``.  Where the
    local gain is negative the distorted signal carries no information
    about the reference, so the gain is zeroed and its energy counted as
    noise.
    """
    require_same_shape(p, r)
    h, w = np.shape(p)
    if min(h, w) < 32:
        raise TooSmall(f"VIF needs a minimum side of 32, got {w}x{h}")
    p = np.asarray(p, dtype=np.float64) * PEAK
    r = np.asarray(r, dtype=np.float64) * PEAK
    num = den = 0.0
    for scale in range(1, VIF_SCALES + 1):
        if scale > 1:
            p = downsample2(p)
            r = downsample2(r)
        _, _, var_p, var_r, cov = _local_stats(p, r, vif_window(scale))
        var_p = np.maximum(var_p, 0.0)
        var_r = np.maximum(var_r, 0.0)
        g = cov / (var_r + 1e-10)
        sv2 = np.maximum(var_p - g * cov, 0.0)
        neg = g < 0
        g = np.where(neg, 0.0, g)
        sv2 = np.where(neg, var_p, sv2)
        num += np.sum(np.log2(1.0 + g * g * var_r / (sv2 + VIF_SIGMA_N2)))
        den += np.sum(np.log2(1.0 + var_r / VIF_SIGMA_N2))
    if den == 0.0:
        # flat reference: no information to preserve
        return 1.0 if num == 0.0 and np.array_equal(p, r) else 0.0
    return float(num / den)
