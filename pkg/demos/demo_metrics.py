"""
Quality indices on a synthetic scene
====================================

Degrade one scene in a few ways and watch how the seven indices react.
Full-reference indices compare against the clean scene; entropy, average
gradient and NIQE look at the candidate alone.
"""

import numpy as np
from scipy import ndimage

from aefuse import metrics
from aefuse.niqe import niqe, niqe_fit
from aefuse.synthetic import pristine_corpus, salt_and_pepper, scene

rng = np.random.default_rng(0)
clean = scene(rng, 128)

# the no-reference index needs a model of "pristine" statistics; fit it on
# the bundled corpus with 32 px patches so 128 px images yield enough
model = niqe_fit(pristine_corpus(), patch_size=32)

variants = {
    "clean": clean,
    "noise s=8": np.clip(clean + rng.normal(0, 8 / 255, clean.shape), 0, 1),
    "blur s=2": ndimage.gaussian_filter(clean, 2.0, mode="nearest"),
    "salt+pepper 10%": salt_and_pepper(clean, 0.10, rng),
    "dark gamma": clean ** 2.2,
}

print(f"{'variant':<18}{'EN':>7}{'AG':>8}{'SSIM':>8}{'VIF':>8}{'PSNR':>8}{'MI':>7}{'NIQE':>8}")
for name, img in variants.items():
    print(f"{name:<18}"
          f"{metrics.entropy(img):7.3f}"
          f"{metrics.avg_gradient(img):8.3f}"
          f"{metrics.ssim(img, clean):8.4f}"
          f"{metrics.vif(img, clean):8.4f}"
          f"{metrics.psnr(img, clean):8.2f}"
          f"{metrics.mutual_information(img, clean):7.3f}"
          f"{niqe(img, model):8.3f}")

# Noise raises the average gradient while every reference index drops,
# which is why no single index is trusted on its own for picking fusions.
