"""Grayscale image representation, PGM I/O and filtering primitives.

Images are plain 2-D ``float64`` numpy arrays with intensities in
``[0, 1]``; ``as_gray`` is the single validating entry point.  All
filters use replicate (nearest-edge) borders.
"""

import enum
import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .errors import (
    DimensionMismatch,
    EvenKernel,
    InvalidSigma,
    IoFailure,
    MalformedHeader,
    TooSmall,
    TruncatedData,
    UnsupportedMaxval,
)

__all__ = [
    "Task",
    "ImagePair",
    "as_gray",
    "quantize",
    "load_pgm",
    "save_pgm",
    "load_image",
    "convolve",
    "convolve_adjoint",
    "gaussian_kernel",
    "box_filter",
    "downsample2",
    "upsample2",
    "gaussian_pyramid",
    "laplacian_pyramid",
    "collapse_laplacian",
    "histogram256",
]

LUMA = (0.299, 0.587, 0.114)


class Task(enum.Enum):
    MultiExposure = "MultiExposure"
    InfraredVisible = "InfraredVisible"
    MultiFocus = "MultiFocus"
    Medical = "Medical"
    CVS = "CVS"
    Unknown = "Unknown"


def as_gray(img, check_range=True):
    """Return ``img`` as a C-contiguous float64 2-D array.

    Raises ``ValueError`` for non-2-D input, empty arrays, or (when
    ``check_range``) intensities outside ``[0, 1]``.
    """
    arr = np.ascontiguousarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if check_range and (not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("image intensities must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class ImagePair:
    """Two registered source images to be fused.

    ``ref`` is an optional ground-truth image used by the supervised
    evaluator; most fusion tasks have none.
    """

    id: str
    a: np.ndarray
    b: np.ndarray
    task: Task = Task.Unknown
    ref: np.ndarray = None

    def __post_init__(self):
        a = as_gray(self.a)
        b = as_gray(self.b)
        if a.shape != b.shape:
            raise DimensionMismatch(f"pair {self.id!r}: {a.shape} vs {b.shape}")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if not isinstance(self.task, Task):
            object.__setattr__(self, "task", Task(self.task))
        if self.ref is not None:
            ref = as_gray(self.ref)
            if ref.shape != a.shape:
                raise DimensionMismatch(f"pair {self.id!r}: reference shape {ref.shape}")
            ref.flags.writeable = False
            object.__setattr__(self, "ref", ref)

    @property
    def shape(self):
        return self.a.shape


# ---------------------------------------------------------------- PGM I/O

def quantize(img):
    """Map ``[0, 1]`` intensities to bytes with round-half-up."""
    arr = np.asarray(img, dtype=np.float64) * 255.0 + 0.5
    np.minimum(arr, 255.0, out=arr)
    np.maximum(arr, 0.0, out=arr)
    # non-negative, so truncation equals floor
    return arr.astype(np.uint8)


def _read_token(buf, pos):
    """Read one whitespace-delimited header token, skipping comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise MalformedHeader("unexpected end of header", start)
    return buf[start:pos], start, pos


def decode_pgm(buf):
    """Decode the bytes of a binary P5 file into an image."""
    if buf[:2] != b"P5":
        raise MalformedHeader(f"expected magic 'P5', found {buf[:2]!r}", 0)
    pos = 2
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise MalformedHeader("missing whitespace after magic", pos)
    fields = []
    for name in ("width", "height", "maxval"):
        tok, start, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise MalformedHeader(f"{name} is not a decimal integer: {tok!r}", start)
        value = int(tok)
        if value <= 0:
            raise MalformedHeader(f"{name} must be positive", start)
        fields.append((value, start))
    (width, _), (height, _), (maxval, mstart) = fields
    if maxval != 255:
        raise UnsupportedMaxval(f"maxval {maxval} is not supported (need 255)", mstart)
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise MalformedHeader("missing whitespace before pixel data", pos)
    pos += 1
    need = width * height
    have = len(buf) - pos
    if have < need:
        raise TruncatedData(f"expected {need} payload bytes, found {have}", len(buf))
    raw = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    return raw.reshape(height, width).astype(np.float64) / 255.0


def encode_pgm(img):
    data = quantize(as_gray(img, check_range=False))
    h, w = data.shape
    return b"P5\n%d %d\n255\n" % (w, h) + data.tobytes()


def load_pgm(path):
    """Load a binary 8-bit PGM (P5, maxval 255) as a ``[0, 1]`` image."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_pgm(buf)


def save_pgm(img, path):
    """Write ``img`` as P5; intensities are quantized by ``round(i * 255)``."""
    payload = encode_pgm(img)
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_image(path):
    """Load a PGM, or any Pillow-readable file reduced to luminance."""
    if os.fspath(path).lower().endswith(".pgm"):
        return load_pgm(path)
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise IoFailure("Pillow is required for non-PGM inputs") from exc
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    gray = arr @ np.array(LUMA)
    return np.clip(gray, 0.0, 1.0)


# -------------------------------------------------------------- filtering

def _check_kernel(kernel):
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim == 1:
        k = k[np.newaxis, :]
    if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise EvenKernel(f"kernel sides must be odd, got shape {k.shape}")
    return k


def convolve(img, kernel):
    """Convolve with replicate borders.  The result is not clamped."""
    k = _check_kernel(kernel)
    return ndimage.convolve(np.asarray(img, dtype=np.float64), k, mode="nearest")


def _edge_pad_adjoint(padded, ry, rx):
    """Adjoint of ``np.pad(x, ((ry, ry), (rx, rx)), mode="edge")``."""
    g = padded.copy()
    if ry:
        g[ry] += g[:ry].sum(axis=0)
        g[-ry - 1] += g[-ry:].sum(axis=0)
        g = g[ry:-ry]
    if rx:
        g[:, rx] += g[:, :rx].sum(axis=1)
        g[:, -rx - 1] += g[:, -rx:].sum(axis=1)
        g = g[:, rx:-rx]
    return g


def convolve_adjoint(grad, kernel):
    """Adjoint of :func:`convolve`, used to backpropagate through filters."""
    k = _check_kernel(kernel)
    ry, rx = k.shape[0] // 2, k.shape[1] // 2
    # convolve(x) = correlate(pad(x), flip(k)); its adjoint is a full
    # correlation with k folded back onto the edge pixels
    full = signal.correlate2d(np.asarray(grad, dtype=np.float64), k, mode="full")
    return _edge_pad_adjoint(full, ry, rx)


def gaussian_kernel(radius, sigma):
    """Separable ``(2r+1) x (2r+1)`` Gaussian normalized to unit sum."""
    if int(radius) != radius or radius < 1:
        raise ValueError(f"radius must be a positive integer, got {radius}")
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidSigma(f"sigma must be positive, got {sigma}")
    x = np.arange(-int(radius), int(radius) + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def box_filter(img, radius):
    """Mean over the ``(2r+1)^2`` window with replicate borders."""
    return ndimage.uniform_filter(np.asarray(img, dtype=np.float64),
                                  size=2 * int(radius) + 1, mode="nearest")


PYRAMID_KERNEL = gaussian_kernel(2, 1.0)


def downsample2(img):
    """Blur (radius 2, sigma 1) and keep every second pixel."""
    blurred = convolve(img, PYRAMID_KERNEL)
    return np.ascontiguousarray(blurred[::2, ::2])


def upsample2(img, target_w, target_h):
    """Zero-insert to ``(target_h, target_w)``, blur, and renormalize.

    The blurred zero-inserted image is divided by the blurred sampling
    mask, so constant images are reproduced exactly.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if target_h not in (2 * h - 1, 2 * h) or target_w not in (2 * w - 1, 2 * w):
        raise DimensionMismatch(
            f"cannot upsample {w}x{h} to {target_w}x{target_h}")
    z = np.zeros((target_h, target_w))
    m = np.zeros((target_h, target_w))
    z[::2, ::2] = img
    m[::2, ::2] = 1.0
    return convolve(z, PYRAMID_KERNEL) / convolve(m, PYRAMID_KERNEL)


def max_pyramid_levels(shape):
    return int(np.floor(np.log2(min(shape))))


def gaussian_pyramid(img, levels):
    """List of ``levels`` images, each the ``downsample2`` of its predecessor."""
    if levels < 1:
        raise ValueError("a pyramid needs at least one level")
    out = [np.asarray(img, dtype=np.float64)]
    for _ in range(levels - 1):
        out.append(downsample2(out[-1]))
    return out


def _expand_to(img, like):
    return upsample2(img, like.shape[1], like.shape[0])


def laplacian_pyramid(img, levels):
    """Band-pass levels followed by the low-pass residual."""
    g = gaussian_pyramid(img, levels)
    bands = [g[k] - _expand_to(g[k + 1], g[k]) for k in range(levels - 1)]
    bands.append(g[-1])
    return bands


def collapse_laplacian(bands):
    out = bands[-1]
    for band in reversed(bands[:-1]):
        out = band + _expand_to(out, band)
    return out


def histogram256(img):
    """Counts of each 8-bit level after ``round(i * 255)`` quantization."""
    return np.bincount(quantize(img).ravel(), minlength=256)


def require_same_shape(*imgs):
    shape = np.shape(imgs[0])
    for other in imgs[1:]:
        if np.shape(other) != shape:
            raise DimensionMismatch(f"shape mismatch: {shape} vs {np.shape(other)}")


def require_min_size(img, min_h, min_w=None, exc=TooSmall):
    min_w = min_h if min_w is None else min_w
    h, w = np.shape(img)
    if h < min_h or w < min_w:
        raise exc(f"image {w}x{h} is smaller than the required {min_w}x{min_h}")
