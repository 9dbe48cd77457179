"""Grayscale image fusion with an evolving ensemble oracle and a distilled network.

Images are 2-D ``float64`` arrays in ``[0, 1]``.  The typical flow is:
run every registered fusion operator on a pair, keep the candidate the
quality evaluator likes best, and train a small convolutional network to
reproduce those picks.  New operators can be absorbed later by scoring
only their output against the cached optimum.
"""

from .errors import AEFuseError
from .evaluators import (
    Evaluator,
    QualityWeights,
    eval_crossmodal,
    eval_pair_quality,
    eval_supervised,
)
from .fusion import (
    FusionMethodId,
    MethodRegistry,
    default_registry,
    fuse_average,
    fuse_laplacian_pyramid,
    fuse_max_energy,
    fuse_ratio_pyramid,
    fuse_two_scale_saliency,
    registry_fuse_all,
)
from .image import ImagePair, Task, load_image, load_pgm, save_pgm
from .learner import FusionNet, LossMode, TrainConfig, forward, train
from .metrics import avg_gradient, entropy, mutual_information, psnr, ssim, vif
from .niqe import NssModel, niqe, niqe_fit
from .oracle import OracleCache, cache_load, cache_store, evolve, select_optimal

__version__ = "0.1.0"

__all__ = [
    "AEFuseError", "Evaluator", "QualityWeights", "eval_crossmodal", "eval_pair_quality",
    "eval_supervised", "FusionMethodId", "MethodRegistry", "default_registry",
    "fuse_average", "fuse_laplacian_pyramid", "fuse_max_energy", "fuse_ratio_pyramid",
    "fuse_two_scale_saliency", "registry_fuse_all", "ImagePair", "Task", "load_image",
    "load_pgm", "save_pgm", "FusionNet", "LossMode", "TrainConfig", "forward", "train",
    "avg_gradient", "entropy", "mutual_information", "psnr", "ssim", "vif", "NssModel",
    "niqe", "niqe_fit", "OracleCache", "cache_load", "cache_store", "evolve",
    "select_optimal",
]
