import math

import numpy as np
import pytest

from aefuse import metrics
from aefuse.evaluators import (
    CROSSMODAL_ORDER,
    DEFAULT_NORMS,
    Evaluator,
    QualityWeights,
    eval_crossmodal,
    eval_pair_quality,
    eval_supervised,
    normalize,
)
from aefuse.image import ImagePair
from aefuse.metrics import MetricId
from aefuse.niqe import niqe


def test_supervised_identity(natural):
    assert eval_supervised(natural, natural, QualityWeights()) == 1.0


def test_supervised_ssim_only(natural, rng):
    p = np.clip(natural + rng.normal(0, 0.05, natural.shape), 0, 1)
    w = QualityWeights(beta=1.0, beta1=0.0)
    assert eval_supervised(p, natural, w) == metrics.ssim(p, natural)


def test_supervised_black_white():
    got = eval_supervised(np.zeros((16, 16)), np.ones((16, 16)), QualityWeights())
    assert got == pytest.approx(0.5 * metrics.ssim(np.zeros((16, 16)), np.ones((16, 16))),
                                abs=1e-15)
    assert got == pytest.approx(5.0e-5, abs=1e-8)


def test_normalization_maps():
    w = QualityWeights()
    assert normalize(w, MetricId.EN, 8.0) == 1.0
    assert normalize(w, MetricId.AG, 50.0) == 1.0
    assert normalize(w, MetricId.PSNR, math.inf) == 1.0
    assert normalize(w, MetricId.PSNR, 30.0) == 0.5
    assert normalize(w, MetricId.NIQE, 0.0) == 1.0
    assert normalize(w, MetricId.NIQE, 3.0) == 0.25
    assert normalize(w, MetricId.SSIM, -0.2) == 0.0


def test_entropy_only_weight(nss_model):
    every = (np.arange(256) / 255.0).reshape(16, 16)
    big = np.kron(every, np.ones((2, 2)))
    w = QualityWeights(alphas=(0, 1, 0, 0, 0, 0))
    assert eval_crossmodal(big, big, w, nss_model) == 1.0


def test_crossmodal_range(nss_model, rng, natural):
    for _ in range(3):
        a = rng.dirichlet(np.ones(6))
        p = np.clip(natural + rng.normal(0, 0.1, natural.shape), 0, 1)
        v = eval_crossmodal(p, natural, QualityWeights(alphas=tuple(a)), nss_model)
        assert 0.0 <= v <= 1.0


def test_crossmodal_composed(nss_model, natural):
    raw = {
        MetricId.NIQE: niqe(natural, nss_model),
        MetricId.EN: metrics.entropy(natural),
        MetricId.VIF: metrics.vif(natural, natural),
        MetricId.AG: metrics.avg_gradient(natural),
        MetricId.PSNR: metrics.psnr(natural, natural),
        MetricId.SSIM: metrics.ssim(natural, natural),
    }
    by_hand = sum(DEFAULT_NORMS[m](raw[m]) / 6 for m in CROSSMODAL_ORDER)
    got = eval_crossmodal(natural, natural, QualityWeights(), nss_model)
    assert got == pytest.approx(by_hand, abs=1e-12)


def test_pair_quality_properties(nss_model, natural, rng):
    w = QualityWeights()
    x = natural
    y = np.clip(natural ** 2 + rng.normal(0, 0.02, natural.shape), 0, 1)
    p = 0.5 * (x + y)
    same = eval_pair_quality(x, x, x, w, nss_model)
    assert same == pytest.approx(eval_crossmodal(x, x, w, nss_model), abs=1e-15)
    assert abs(eval_pair_quality(x, y, p, w, nss_model)
               - eval_pair_quality(y, x, p, w, nss_model)) <= 1e-12
    composed = 0.5 * (eval_crossmodal(x, x, w, nss_model) + eval_crossmodal(x, y, w, nss_model))
    assert eval_pair_quality(x, y, x, w, nss_model) == pytest.approx(composed, abs=1e-12)


def test_weights_validation():
    with pytest.raises(ValueError):
        QualityWeights(beta=-1.0)
    with pytest.raises(ValueError):
        QualityWeights(alphas=(0.5, 0.5))


def test_evaluator_tag(nss_model, natural):
    e = Evaluator(QualityWeights(), nss_model)
    assert e.tag == Evaluator(QualityWeights(), nss_model).tag
    assert e.tag != Evaluator(QualityWeights(beta=0.3), nss_model).tag
    assert e.tag.startswith("E2-")
    pair = ImagePair("p", natural, natural, ref=natural)
    assert Evaluator(kind="E1").score(pair, natural) == 1.0
