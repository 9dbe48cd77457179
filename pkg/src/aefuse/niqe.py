"""Natural-scene-statistics model and the NIQE distance.

Single-scale, 18-feature variant: per patch, a generalized Gaussian fit
to the MSCN coefficients (shape, sigma) and asymmetric generalized
Gaussian fits to the four directional neighbour products (shape, mean,
left sigma, right sigma).
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import (
    BadMagic,
    ImageTooSmall,
    InsufficientPatches,
    IoFailure,
    SingularCovariance,
    WrongLength,
)
from .image import convolve, gaussian_kernel

__all__ = ["NssModel", "mscn", "patch_features", "niqe_fit", "niqe",
           "mvg_distance", "save_nss", "load_nss"]

N_FEATURES = 18
MIN_FIT_PATCHES = 36
MIN_TEST_COV_PATCHES = 19
REG_EPS = 1e-6
MSCN_WINDOW = gaussian_kernel(3, 7.0 / 6.0)
MSCN_C = 1.0 / 255.0
NSS_MAGIC = b"NSSM1"

_ALPHA_GRID = np.arange(0.2, 10.0 + 1e-9, 0.001)
_RHO_GRID = (gamma_fn(2.0 / _ALPHA_GRID) ** 2
             / (gamma_fn(1.0 / _ALPHA_GRID) * gamma_fn(3.0 / _ALPHA_GRID)))


@dataclass(frozen=True)
class NssModel:
    feature_mean: np.ndarray
    feature_cov: np.ndarray
    patch_size: int = 96
    sharpness_fraction: float = 0.75

    def __post_init__(self):
        mean = np.asarray(self.feature_mean, dtype=np.float64).reshape(N_FEATURES)
        cov = np.asarray(self.feature_cov, dtype=np.float64).reshape(N_FEATURES, N_FEATURES)
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "feature_mean", mean)
        object.__setattr__(self, "feature_cov", cov)
        object.__setattr__(self, "patch_size", int(self.patch_size))
        object.__setattr__(self, "sharpness_fraction", float(self.sharpness_fraction))

    def to_bytes(self):
        return (NSS_MAGIC
                + struct.pack("<Id", self.patch_size, self.sharpness_fraction)
                + self.feature_mean.astype("<f8").tobytes()
                + self.feature_cov.astype("<f8").tobytes())

    @classmethod
    def from_bytes(cls, buf):
        if buf[:len(NSS_MAGIC)] != NSS_MAGIC:
            raise BadMagic(f"not an NSS model file (magic {buf[:5]!r})")
        expected = len(NSS_MAGIC) + 12 + 8 * (N_FEATURES + N_FEATURES ** 2)
        if len(buf) != expected:
            raise WrongLength(f"NSS model file has {len(buf)} bytes, expected {expected}")
        off = len(NSS_MAGIC)
        patch_size, frac = struct.unpack_from("<Id", buf, off)
        off += 12
        vals = np.frombuffer(buf, dtype="<f8", offset=off).astype(np.float64)
        return cls(vals[:N_FEATURES], vals[N_FEATURES:].reshape(N_FEATURES, N_FEATURES),
                   patch_size, frac)


def save_nss(model, path):
    try:
        with open(path, "wb") as fh:
            fh.write(model.to_bytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_nss(path):
    try:
        with open(path, "rb") as fh:
            return NssModel.from_bytes(fh.read())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def _local_mean_sigma(img):
    mu = convolve(img, MSCN_WINDOW)
    sigma = np.sqrt(np.abs(convolve(img * img, MSCN_WINDOW) - mu * mu))
    return mu, sigma


def mscn(img):
    """Mean-subtracted contrast-normalized coefficients of a ``[0, 1]`` image."""
    img = np.asarray(img, dtype=np.float64)
    mu, sigma = _local_mean_sigma(img)
    return (img - mu) / (sigma + MSCN_C)


def _fit_ggd(x):
    x = x.ravel()
    sigma_sq = np.mean(x * x)
    e_abs = np.mean(np.abs(x))
    if sigma_sq <= 0.0:
        return _ALPHA_GRID[-1], 0.0
    rho = e_abs ** 2 / sigma_sq
    alpha = _ALPHA_GRID[np.argmin((_RHO_GRID - rho) ** 2)]
    return alpha, np.sqrt(sigma_sq)


def _fit_aggd(x):
    x = x.ravel()
    neg = x[x < 0]
    pos = x[x > 0]
    sl = np.sqrt(np.mean(neg * neg)) if neg.size else 0.0
    sr = np.sqrt(np.mean(pos * pos)) if pos.size else 0.0
    mean_sq = np.mean(x * x)
    if mean_sq <= 0.0 or sl == 0.0 or sr == 0.0:
        # degenerate one-sided or null sample
        alpha = _ALPHA_GRID[-1]
    else:
        gam = sl / sr
        r_hat = np.mean(np.abs(x)) ** 2 / mean_sq
        big_r = r_hat * (gam ** 3 + 1) * (gam + 1) / (gam ** 2 + 1) ** 2
        alpha = _ALPHA_GRID[np.argmin((_RHO_GRID - big_r) ** 2)]
    mean = (sr - sl) * (gamma_fn(2.0 / alpha) / gamma_fn(1.0 / alpha)) * np.sqrt(
        gamma_fn(1.0 / alpha) / gamma_fn(3.0 / alpha))
    return alpha, mean, sl, sr


def patch_features(coeffs):
    """18-vector of NSS features for one patch of MSCN coefficients."""
    c = np.asarray(coeffs, dtype=np.float64)
    alpha, sigma = _fit_ggd(c)
    feats = [alpha, sigma]
    products = (
        c[:, :-1] * c[:, 1:],        # horizontal
        c[:-1, :] * c[1:, :],        # vertical
        c[:-1, :-1] * c[1:, 1:],     # main diagonal
        c[:-1, 1:] * c[1:, :-1],     # anti-diagonal
    )
    for prod in products:
        feats.extend(_fit_aggd(prod))
    return np.array(feats, dtype=np.float64)


def _patches(img, patch_size):
    """Yield ``(mscn_patch, sharpness)`` for each non-overlapping full patch."""
    img = np.asarray(img, dtype=np.float64)
    mu, sigma = _local_mean_sigma(img)
    coeffs = (img - mu) / (sigma + MSCN_C)
    variance = sigma * sigma
    h, w = img.shape
    for i in range(0, h - patch_size + 1, patch_size):
        for j in range(0, w - patch_size + 1, patch_size):
            sl = (slice(i, i + patch_size), slice(j, j + patch_size))
            yield coeffs[sl], float(variance[sl].sum())


def niqe_fit(corpus, patch_size=96, sharpness_fraction=0.75):
    """Fit the pristine multivariate Gaussian over patch features.

    Patches are ranked by summed local variance and the sharpest
    ``sharpness_fraction`` of them (stable order on ties) are kept.
    """
    if not 0.0 < sharpness_fraction <= 1.0:
        raise ValueError("sharpness_fraction must lie in (0, 1]")
    patches = [p for img in corpus for p in _patches(img, patch_size)]
    keep = int(np.ceil(sharpness_fraction * len(patches)))
    if keep < MIN_FIT_PATCHES:
        raise InsufficientPatches(
            f"{keep} qualifying patches of size {patch_size}; need {MIN_FIT_PATCHES}")
    order = sorted(range(len(patches)), key=lambda k: -patches[k][1])[:keep]
    feats = np.array([patch_features(patches[k][0]) for k in sorted(order)])
    mean = feats.mean(axis=0)
    cov = np.cov(feats, rowvar=False)
    cov = 0.5 * (cov + cov.T)
    return NssModel(mean, cov, patch_size, sharpness_fraction)


def mvg_distance(mean1, cov1, mean2, cov2):
    """``sqrt(d^T ((cov1 + cov2) / 2 + eps I)^-1 d)`` with ``d = mean1 - mean2``."""
    d = np.asarray(mean1, dtype=np.float64) - np.asarray(mean2, dtype=np.float64)
    pooled = 0.5 * (np.asarray(cov1) + np.asarray(cov2)) + REG_EPS * np.eye(len(d))
    try:
        chol = np.linalg.cholesky(pooled)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("pooled covariance is not positive definite") from exc
    z = np.linalg.solve(chol, d)
    return float(np.sqrt(z @ z))


def niqe(img, model):
    """Distance of ``img`` from the pristine model; lower is better."""
    ps = model.patch_size
    h, w = np.shape(img)
    if h < ps or w < ps:
        raise ImageTooSmall(f"image {w}x{h} admits no {ps}x{ps} patch")
    feats = np.array([patch_features(c) for c, _ in _patches(img, ps)])
    mean = feats.mean(axis=0)
    if len(feats) >= MIN_TEST_COV_PATCHES:
        cov = np.cov(feats, rowvar=False)
    else:
        cov = model.feature_cov
    return mvg_distance(model.feature_mean, model.feature_cov, mean, cov)
