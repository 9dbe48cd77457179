"""Joint quality evaluators built from the individual indices.

``eval_supervised`` combines SSIM and PSNR against a reference image;
``eval_crossmodal`` combines six indices, each normalized onto
``[0, 1]`` so the weights are comparable.  ``eval_pair_quality`` scores
a fused image against both sources.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

from . import metrics
from .metrics import MetricId
from .niqe import niqe

__all__ = ["MetricNorm", "QualityWeights", "metric_panel", "normalize",
           "eval_supervised", "eval_crossmodal", "eval_pair_quality", "Evaluator"]


@dataclass(frozen=True)
class MetricNorm:
    """Clamp onto ``[lo, hi]`` then map to ``[0, 1]``.

    With ``flip`` the metric is lower-is-better and maps through
    ``1 / (1 + (v - lo))``, which tolerates ``hi = inf``.
    """

    lo: float
    hi: float
    flip: bool = False

    def __call__(self, value):
        v = min(max(float(value), self.lo), self.hi)
        if self.flip:
            return 1.0 / (1.0 + (v - self.lo))
        return (v - self.lo) / (self.hi - self.lo)


DEFAULT_NORMS = {
    MetricId.EN: MetricNorm(0.0, 8.0),
    MetricId.AG: MetricNorm(0.0, 20.0),
    MetricId.SSIM: MetricNorm(0.0, 1.0),
    MetricId.VIF: MetricNorm(0.0, 1.0),
    MetricId.NIQE: MetricNorm(0.0, math.inf, flip=True),
    MetricId.PSNR: MetricNorm(0.0, 60.0),
    MetricId.MI: MetricNorm(0.0, 8.0),
}

# order of the alpha weights in the cross-modal evaluator
CROSSMODAL_ORDER = (MetricId.NIQE, MetricId.EN, MetricId.VIF,
                    MetricId.AG, MetricId.PSNR, MetricId.SSIM)


@dataclass(frozen=True)
class QualityWeights:
    beta: float = 0.5
    beta1: float = 0.5
    alphas: tuple = (1 / 6,) * 6
    norms: dict = field(default_factory=lambda: dict(DEFAULT_NORMS))

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if len(alphas) != 6:
            raise ValueError("exactly six alpha weights are required")
        object.__setattr__(self, "alphas", alphas)
        if min(self.beta, self.beta1, *alphas) < 0:
            raise ValueError("quality weights must be non-negative")
        if self.beta + self.beta1 <= 0 or sum(alphas) <= 0:
            raise ValueError("weights must not all be zero")
        for mid, norm in self.norms.items():
            if not norm.lo < norm.hi:
                raise ValueError(f"normalization for {mid.value} needs lo < hi")

    def fingerprint(self):
        doc = {
            "beta": self.beta, "beta1": self.beta1, "alphas": list(self.alphas),
            "norms": {m.value: [n.lo, repr(n.hi), n.flip]
                      for m, n in sorted(self.norms.items(), key=lambda kv: kv[0].value)},
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def normalize(weights, metric, value):
    return weights.norms[metric](value)


def metric_panel(p, r, model):
    """Raw values of all seven indices for candidate ``p`` and reference ``r``."""
    return {
        MetricId.EN: metrics.entropy(p),
        MetricId.AG: metrics.avg_gradient(p),
        MetricId.SSIM: metrics.ssim(p, r),
        MetricId.VIF: metrics.vif(p, r),
        MetricId.NIQE: niqe(p, model),
        MetricId.PSNR: metrics.psnr(p, r),
        MetricId.MI: metrics.mutual_information(p, r),
    }


def eval_supervised(p, r, w):
    return (w.beta * normalize(w, MetricId.SSIM, metrics.ssim(p, r))
            + w.beta1 * normalize(w, MetricId.PSNR, metrics.psnr(p, r)))


def crossmodal_from_values(values, w):
    """Weighted sum of normalized raw values keyed by ``MetricId``."""
    return sum(a * normalize(w, mid, values[mid])
               for a, mid in zip(w.alphas, CROSSMODAL_ORDER))


def eval_crossmodal(p, r, w, model):
    values = {
        MetricId.NIQE: niqe(p, model),
        MetricId.EN: metrics.entropy(p),
        MetricId.VIF: metrics.vif(p, r),
        MetricId.AG: metrics.avg_gradient(p),
        MetricId.PSNR: metrics.psnr(p, r),
        MetricId.SSIM: metrics.ssim(p, r),
    }
    return crossmodal_from_values(values, w)


def eval_pair_quality(x, y, p, w, model):
    """Mean cross-modal score of ``p`` against each source."""
    return 0.5 * (eval_crossmodal(p, x, w, model) + eval_crossmodal(p, y, w, model))


class Evaluator:
    """Scores fusion candidates for one pair under a fixed configuration.

    ``kind="E2"`` uses the two-source cross-modal score; ``kind="E1"``
    uses the supervised score against the pair's reference image.
    """

    def __init__(self, weights=None, model=None, kind="E2"):
        if kind not in ("E1", "E2"):
            raise ValueError(f"unknown evaluator kind {kind!r}")
        if kind == "E2" and model is None:
            raise ValueError("the cross-modal evaluator needs an NSS model")
        self.kind = kind
        self.weights = weights or QualityWeights()
        self.model = model

    @property
    def tag(self):
        h = hashlib.sha256(self.weights.fingerprint().encode())
        if self.kind == "E2":
            h.update(self.model.to_bytes())
        return f"{self.kind}-{h.hexdigest()[:16]}"

    def score(self, pair, p):
        if self.kind == "E1":
            if pair.ref is None:
                raise ValueError(f"pair {pair.id!r} has no reference image for E1")
            return eval_supervised(p, pair.ref, self.weights)
        return eval_pair_quality(pair.a, pair.b, p, self.weights, self.model)

    def __repr__(self):
        return f"Evaluator({self.tag})"
