import math

import numpy as np
import pytest
from scipy import ndimage

from aefuse.errors import DimensionMismatch, TooSmall
from aefuse.metrics import (
    SSIM_C1,
    avg_gradient,
    entropy,
    mutual_information,
    psnr,
    ssim,
    vif,
)
from oracles import all_3x3_images, codes_to_images, entropy_table, mutual_information_table


# ------------------------------------------------------------------- EN

def test_entropy_examples():
    assert entropy(np.full((5, 5), 0.4)) == 0.0
    half = np.zeros((4, 4))
    half[:2] = 1.0
    assert entropy(half) == 1.0
    every = (np.arange(256) / 255.0).reshape(16, 16)
    assert entropy(every) == pytest.approx(8.0, abs=1e-12)


def test_entropy_exhaustive_3x3():
    codes = all_3x3_images(4)
    expected = entropy_table(codes, 4)
    got = np.array([entropy(img) for img in codes_to_images(codes)])
    np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)


# ------------------------------------------------------------------- MI

def test_mi_examples(rng):
    a = rng.random((8, 8))
    assert mutual_information(a, a) == pytest.approx(entropy(a), abs=1e-12)
    assert mutual_information(np.full((8, 8), 0.2), a) == 0.0
    assert mutual_information(np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]])) == 1.0


def test_mi_sweep_3x3():
    # the pair space 4**18 is too large; sweep every 8th image against a
    # partner with scrambled pixel order and remapped levels
    codes = all_3x3_images(4)[::8]
    partners = (codes[:, [4, 0, 8, 2, 6, 1, 3, 7, 5]] * 3 + 1) % 4
    expected = mutual_information_table(codes, partners, 4)
    got = np.array([mutual_information(a, b)
                    for a, b in zip(codes_to_images(codes), codes_to_images(partners))])
    np.testing.assert_allclose(got, np.maximum(expected, 0.0), rtol=0, atol=1e-12)


def test_mi_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        mutual_information(np.zeros((3, 3)), np.zeros((3, 4)))


# ------------------------------------------------------------------- AG

def test_ag_examples():
    assert avg_gradient(np.full((6, 6), 0.3)) == 0.0
    ramp = np.tile(np.arange(20) / 255.0, (10, 1))
    assert avg_gradient(ramp) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    board = (np.indices((8, 8)).sum(axis=0) % 2).astype(float)
    assert avg_gradient(board) == pytest.approx(255.0, abs=1e-9)


def test_ag_too_small():
    with pytest.raises(TooSmall):
        avg_gradient(np.zeros((1, 5)))


# ----------------------------------------------------------------- SSIM

def test_ssim_identity(natural):
    assert ssim(natural, natural) == pytest.approx(1.0, abs=1e-9)


def test_ssim_black_white():
    got = ssim(np.zeros((16, 16)), np.ones((16, 16)))
    assert got == pytest.approx(SSIM_C1 / (255.0 ** 2 + SSIM_C1), rel=1e-9)
    assert got == pytest.approx(9.999e-5, abs=1e-8)


def test_ssim_symmetric(rng):
    for _ in range(5):
        a, b = rng.random((32, 32)), rng.random((32, 32))
        assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12


# ----------------------------------------------------------------- PSNR

def test_psnr_examples():
    a = np.full((4, 4), 0.5)
    assert psnr(a, a) == math.inf
    assert psnr(np.zeros((4, 4)), np.ones((4, 4))) == pytest.approx(0.0, abs=1e-12)
    assert psnr(np.zeros((4, 4)), np.full((4, 4), 1 / 255)) == pytest.approx(
        20 * math.log10(255), abs=1e-9)
    assert psnr(np.zeros((4, 4)), np.full((4, 4), 1 / 255)) == pytest.approx(48.1308, abs=1e-4)


def test_degradation_monotone(natural):
    rng = np.random.default_rng(3)
    s_prev, p_prev = math.inf, math.inf
    for sigma in (2, 8, 32):
        noisy = np.clip(natural + rng.normal(0, sigma / 255, natural.shape), 0, 1)
        s, p = ssim(noisy, natural), psnr(noisy, natural)
        assert s < s_prev and p < p_prev
        s_prev, p_prev = s, p


# ------------------------------------------------------------------ VIF

def test_vif_identity(natural):
    assert vif(natural, natural) == pytest.approx(1.0, abs=1e-6)


def test_vif_blur_monotone(natural):
    b1 = ndimage.gaussian_filter(natural, 1, mode="nearest")
    b2 = ndimage.gaussian_filter(natural, 2, mode="nearest")
    assert vif(b2, natural) < vif(b1, natural) < 1.0


def test_vif_constant(natural):
    assert vif(np.full_like(natural, 0.5), natural) == pytest.approx(0.0, abs=1e-6)


def test_vif_too_small():
    with pytest.raises(TooSmall):
        vif(np.zeros((16, 40)), np.zeros((16, 40)))
