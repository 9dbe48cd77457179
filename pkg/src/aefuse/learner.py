"""Trainable weight-map fusion network and its losses.

The network maps the two sources to a per-pixel weight ``w`` in (0, 1)
and fuses ``p = w * a + (1 - w) * b``.  Everything is plain numpy with
hand-written backpropagation so gradients can be checked against finite
differences.
"""

import enum
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    BadMagic,
    DimensionMismatch,
    EmptyDataset,
    IoFailure,
    MissingOracle,
    WrongLength,
)
from .image import _edge_pad_adjoint, convolve, convolve_adjoint, require_same_shape
from .metrics import PEAK, SSIM_C1, SSIM_C2, SSIM_WINDOW

__all__ = [
    "LossMode",
    "TrainConfig",
    "LossReport",
    "FusionNet",
    "forward",
    "loss_supervised",
    "loss_unsupervised",
    "loss_total",
    "train",
    "net_store",
    "net_load",
    "SEMI_SUPERVISED_MIX",
]

LAYER_SHAPES = ((8, 2), (8, 8), (1, 8))
N_PARAMS = sum(o * i * 9 + o for o, i in LAYER_SHAPES)
NET_MAGIC = b"AENET1"
INIT_SCALE = 0.05
SEMI_SUPERVISED_MIX = 0.5
GRAD_EPS = 1e-6


class LossMode(enum.Enum):
    Unsupervised = "Unsupervised"
    SemiSupervised = "SemiSupervised"
    Supervised = "Supervised"


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 5
    epochs: int = 50
    learning_rate: float = 1e-5
    crop_size: int = 128
    loss_mode: LossMode = LossMode.SemiSupervised
    seed: int = 42
    momentum: float = 0.9

    def __post_init__(self):
        if not isinstance(self.loss_mode, LossMode):
            object.__setattr__(self, "loss_mode", LossMode(self.loss_mode))
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.crop_size < 16:
            raise ValueError("crop_size must be >= 16")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass(frozen=True)
class LossReport:
    total: float
    term_supervised: float
    term_unsupervised: float
    epoch: int = 0


# ------------------------------------------------------------------ network

class FusionNet:
    """Three 3x3 conv layers (2 -> 8 -> 8 -> 1), ReLU, ReLU, logistic.

    Parameters live in one flat vector ``params`` ordered layer by layer,
    weights ``(out, in, 3, 3)`` before biases.
    """

    def __init__(self, params=None):
        if params is None:
            params = np.zeros(N_PARAMS)
        params = np.array(params, dtype=np.float64).ravel()
        if params.size != N_PARAMS:
            raise WrongLength(f"expected {N_PARAMS} parameters, got {params.size}")
        self.params = params

    @classmethod
    def initialize(cls, seed, scale=INIT_SCALE):
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(-scale, scale, N_PARAMS))

    def copy(self):
        return FusionNet(self.params.copy())

    def layers(self, vec=None):
        """Views ``[(W, b), ...]`` into ``vec`` (default: the parameters)."""
        vec = self.params if vec is None else vec
        out, off = [], 0
        for o, i in LAYER_SHAPES:
            w = vec[off:off + o * i * 9].reshape(o, i, 3, 3)
            off += o * i * 9
            out.append((w, vec[off:off + o]))
            off += o
        return out

    def __eq__(self, other):
        return isinstance(other, FusionNet) and np.array_equal(self.params, other.params)


def _conv_forward(x, w, b):
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="edge")
    patches = sliding_window_view(xp, (3, 3), axis=(1, 2))
    return np.einsum("ocuv,chwuv->ohw", w, patches) + b[:, None, None], patches


def _conv_backward(dout, w, patches, need_input=True):
    dw = np.einsum("ohw,chwuv->ocuv", dout, patches)
    db = dout.sum(axis=(1, 2))
    if not need_input:
        return None, dw, db
    c = w.shape[1]
    h, wd = dout.shape[1:]
    dxp = np.zeros((c, h + 2, wd + 2))
    for u in range(3):
        for v in range(3):
            dxp[:, u:u + h, v:v + wd] += np.einsum("oc,ohw->chw", w[:, :, u, v], dout)
    dx = np.stack([_edge_pad_adjoint(ch, 1, 1) for ch in dxp])
    return dx, dw, db


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _net_forward(net, a, b):
    x = np.stack([a, b])
    cache = []
    for k, (w, bias) in enumerate(net.layers()):
        z, patches = _conv_forward(x, w, bias)
        cache.append((patches, z))
        x = np.maximum(z, 0.0) if k < 2 else _sigmoid(z)
    return x[0], cache


def forward(net, pair):
    """Return ``(fused, weight_map)`` for an image pair (or ``(a, b)`` tuple)."""
    a, b = (pair.a, pair.b) if hasattr(pair, "a") else pair
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    require_same_shape(a, b)
    wmap, _ = _net_forward(net, a, b)
    return wmap * a + (1.0 - wmap) * b, wmap


def _net_backward(net, cache, wmap, dwmap):
    grads = np.zeros(N_PARAMS)
    glayers = net.layers(grads)
    layers = net.layers()
    dz = dwmap * wmap * (1.0 - wmap)
    dz = dz[None]
    for k in (2, 1, 0):
        patches, _ = cache[k]
        w = layers[k][0]
        dx, dw, db = _conv_backward(dz, w, patches, need_input=k > 0)
        glayers[k][0][...] = dw
        glayers[k][1][...] = db
        if k > 0:
            dz = dx * (cache[k - 1][1] > 0)
    return grads


# ------------------------------------------------------------------- losses

def _ssim_and_grad(p, r, need_grad=True):
    """Mean SSIM (255-scale constants) and its gradient w.r.t. ``p``."""
    P = p * PEAK
    R = r * PEAK
    k = SSIM_WINDOW
    mu_p = convolve(P, k)
    mu_r = convolve(R, k)
    e_pp = convolve(P * P, k)
    e_rr = convolve(R * R, k)
    e_pr = convolve(P * R, k)
    A = 2 * mu_p * mu_r + SSIM_C1
    B = 2 * (e_pr - mu_p * mu_r) + SSIM_C2
    C = mu_p ** 2 + mu_r ** 2 + SSIM_C1
    D = (e_pp - mu_p ** 2) + (e_rr - mu_r ** 2) + SSIM_C2
    S = A * B / (C * D)
    if not need_grad:
        return float(S.mean()), None
    n = S.size
    g_mu = ((2 * mu_r * B - 2 * mu_r * A) / (C * D) - S * (2 * mu_p / C - 2 * mu_p / D)) / n
    g_pp = -S / D / n
    g_pr = 2 * A / (C * D) / n
    dP = (convolve_adjoint(g_mu, k) + 2 * P * convolve_adjoint(g_pp, k)
          + R * convolve_adjoint(g_pr, k))
    return float(S.mean()), dP * PEAK


def _grad_magnitude(img):
    """Forward-difference gradient magnitude on the 255 scale, with parts."""
    f = img * PEAK
    dx = np.zeros_like(f)
    dy = np.zeros_like(f)
    dx[:, :-1] = f[:, 1:] - f[:, :-1]
    dy[:-1, :] = f[1:, :] - f[:-1, :]
    return np.sqrt(dx * dx + dy * dy + GRAD_EPS), dx, dy


def _grad_magnitude_adjoint(g, mag, dx, dy):
    gx = g * dx / mag
    gy = g * dy / mag
    out = np.zeros_like(g)
    out[:, 1:] += gx[:, :-1]
    out[:, :-1] -= gx[:, :-1]
    out[1:, :] += gy[:-1, :]
    out[:-1, :] -= gy[:-1, :]
    return out * PEAK


def _check(p, *others):
    for o in others:
        if np.shape(o) != np.shape(p):
            raise DimensionMismatch(f"shape mismatch: {np.shape(p)} vs {np.shape(o)}")


def loss_supervised(p, target, need_grad=True):
    """``0.5 * MSE + 0.5 * (1 - SSIM)`` toward ``target``; MSE on the 255 scale.

    Returns ``(loss, dloss/dp)``; the gradient is ``None`` when not requested.
    """
    _check(p, target)
    p = np.asarray(p, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    diff = (p - t) * PEAK
    mse = float(np.mean(diff * diff))
    s, ds = _ssim_and_grad(p, t, need_grad)
    loss = 0.5 * mse + 0.5 * (1.0 - s)
    if not need_grad:
        return loss, None
    grad = diff * PEAK / diff.size - 0.5 * ds
    return loss, grad


def loss_unsupervised(p, x, y, need_grad=True):
    """Source-consistency loss: SSIM to each source plus gradient preservation.

    ``mean over s in {x, y} of 0.5 * (1 - SSIM(p, s)) + 0.5 * G`` where
    ``G = mean((|grad p| - max(|grad x|, |grad y|))^2)``.
    """
    _check(p, x, y)
    p = np.asarray(p, dtype=np.float64)
    sx, dsx = _ssim_and_grad(p, np.asarray(x, dtype=np.float64), need_grad)
    sy, dsy = _ssim_and_grad(p, np.asarray(y, dtype=np.float64), need_grad)
    mag_p, dx, dy = _grad_magnitude(p)
    target = np.maximum(_grad_magnitude(x)[0], _grad_magnitude(y)[0])
    resid = mag_p - target
    g_term = float(np.mean(resid * resid))
    loss = 0.25 * ((1.0 - sx) + (1.0 - sy)) + 0.5 * g_term
    if not need_grad:
        return loss, None
    grad = (-0.25 * (dsx + dsy)
            + 0.5 * _grad_magnitude_adjoint(2.0 * resid / resid.size, mag_p, dx, dy))
    return loss, grad


def _mode_terms(mode):
    mode = LossMode(mode)
    sup = mode is not LossMode.Unsupervised
    if mode is LossMode.Supervised:
        mix = 0.0
    elif mode is LossMode.SemiSupervised:
        mix = SEMI_SUPERVISED_MIX
    else:
        mix = 1.0
    return sup, mix


def loss_total(net, pair, oracle_opt, mode, need_grad=True):
    """Loss of the network on one pair and gradients for all parameters.

    ``pair`` may be an ``ImagePair`` or an ``(a, b)`` tuple; ``oracle_opt``
    is an ``OptimalSolution`` or a bare target image (``None`` is allowed
    only in unsupervised mode).  With ``need_grad=False`` only the forward
    pass runs and the gradient is ``None``.
    """
    a, b = (pair.a, pair.b) if hasattr(pair, "a") else pair
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    use_sup, mix = _mode_terms(mode)
    target = getattr(oracle_opt, "fused", oracle_opt)
    if use_sup and target is None:
        raise MissingOracle("supervised and semi-supervised modes need an oracle target")
    wmap, cache = _net_forward(net, a, b)
    p = wmap * a + (1.0 - wmap) * b
    sup = unsup = 0.0
    dp = np.zeros_like(p)
    if use_sup:
        sup, g = loss_supervised(p, target, need_grad)
        if need_grad:
            dp += g
    if mix:
        unsup, g = loss_unsupervised(p, a, b, need_grad)
        if need_grad:
            dp += mix * g
    total = sup + mix * unsup
    if not need_grad:
        return LossReport(total, sup, unsup), None
    grads = _net_backward(net, cache, wmap, dp * (a - b))
    return LossReport(total, sup, unsup), grads


# ----------------------------------------------------------------- training

def _crop(rng, shape, size):
    h, w = shape
    ch, cw = min(size, h), min(size, w)
    i = int(rng.integers(0, h - ch + 1))
    j = int(rng.integers(0, w - cw + 1))
    return slice(i, i + ch), slice(j, j + cw)


def train(net, dataset, cfg, on_epoch=None):
    """SGD with momentum over random crops; returns ``(net, [LossReport, ...])``.

    ``dataset`` is a list of ``(ImagePair, OptimalSolution)``; the solution
    may be ``None`` in unsupervised mode.  Each epoch's report holds the
    mean of the per-sample losses seen during that epoch.  The input net
    is not modified.
    """
    if not dataset:
        raise EmptyDataset("training needs at least one pair")
    net = net.copy()
    rng = np.random.default_rng(cfg.seed)
    velocity = np.zeros(N_PARAMS)
    trace = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(dataset))
        tot = sup = unsup = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grad = np.zeros(N_PARAMS)
            for idx in batch:
                pair, opt = dataset[idx]
                sl = _crop(rng, pair.shape, cfg.crop_size)
                target = None if opt is None else opt.fused[sl]
                rep, g = loss_total(net, (pair.a[sl], pair.b[sl]), target, cfg.loss_mode)
                grad += g
                tot += rep.total
                sup += rep.term_supervised
                unsup += rep.term_unsupervised
            grad /= len(batch)
            velocity = cfg.momentum * velocity - cfg.learning_rate * grad
            net.params += velocity
        n = len(dataset)
        rep = LossReport(tot / n, sup / n, unsup / n, epoch)
        trace.append(rep)
        if on_epoch is not None:
            on_epoch(rep)
    return net, trace


def trace_csv(trace):
    rows = ["epoch,total,sup,unsup"]
    rows += [f"{r.epoch},{r.total!r},{r.term_supervised!r},{r.term_unsupervised!r}"
             for r in trace]
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------- I/O

def net_to_bytes(net):
    return NET_MAGIC + net.params.astype("<f8").tobytes()


def net_from_bytes(buf):
    if buf[:len(NET_MAGIC)] != NET_MAGIC:
        raise BadMagic(f"not an AENET1 model (magic {buf[:6]!r})")
    expected = len(NET_MAGIC) + 8 * N_PARAMS
    if len(buf) != expected:
        raise WrongLength(f"model file has {len(buf)} bytes, expected {expected}")
    return FusionNet(np.frombuffer(buf, dtype="<f8", offset=len(NET_MAGIC)))


def net_store(net, path):
    try:
        with open(path, "wb") as fh:
            fh.write(net_to_bytes(net))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def net_load(path):
    try:
        with open(path, "rb") as fh:
            return net_from_bytes(fh.read())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
