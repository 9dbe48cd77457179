"""
Distilling the oracle into a small network
==========================================

Train the weight-map network on the oracle's picks and compare its mean
quality score with the oracle and with plain averaging.  The network is
three 3x3 convolution layers (809 parameters); its output is a per-pixel
weight between the two sources.
"""

import numpy as np

from aefuse.evaluators import Evaluator
from aefuse.fusion import default_registry, fuse_average, registry_fuse_all
from aefuse.learner import FusionNet, LossMode, TrainConfig, forward, train
from aefuse.niqe import niqe_fit
from aefuse.oracle import OracleCache, seed_cache
from aefuse.synthetic import pristine_corpus, synthetic_pairs

evaluator = Evaluator(model=niqe_fit(pristine_corpus(), patch_size=32))
pairs = synthetic_pairs(10, seed=5, size=128)
cache = OracleCache(evaluator.tag)
for pair in pairs:
    seed_cache(cache, pair, registry_fuse_all(default_registry(), pair), evaluator)
data = [(p, cache.optima[p.id]) for p in pairs]

# the default schedule: SGD with momentum 0.9 at learning rate 1e-5
cfg = TrainConfig(epochs=50, crop_size=64, batch_size=5,
                  loss_mode=LossMode.SemiSupervised)


def report(r):
    if r.epoch % 10 == 0:
        print(f"epoch {r.epoch:3d}  loss {r.total:.4f}")


init = FusionNet.initialize(cfg.seed)
net, trace = train(init, data, cfg, on_epoch=report)

print(f"loss ratio last/first: {trace[-1].total / trace[0].total:.3f}")
for label, fuse in [("average", fuse_average),
                    ("network (init)", lambda p: forward(init, p)[0]),
                    ("network (trained)", lambda p: forward(net, p)[0]),
                    ("oracle", lambda p: cache.optima[p.id].fused)]:
    print(f"{label:<18} mean E2={np.mean([evaluator.score(p, fuse(p)) for p in pairs]):.4f}")

# With this schedule the loss barely moves: the mean-squared term on the
# 0-255 scale dominates the curvature, and the 0.05-scale initialization
# leaves the deeper layers with tiny gradients.  The small learning rate
# keeps SGD stable but makes 50 epochs far too short to close the gap to
# the oracle.
