"""Acceptance suite: one check per criterion, each with its time budget.

Every criterion prints a single ``[criterion N] PASS|FAIL ...`` line and
then asserts.  Run ``pytest tests/test_acceptance.py -v`` or execute the
module directly to get just the nine lines.
"""

import csv
import hashlib
import io
import itertools
import math
import os
import sys
import tempfile
import time

import numpy as np
import pytest

from aefuse import metrics
from aefuse.cli import main as cli_main
from aefuse.evaluators import Evaluator, QualityWeights, eval_crossmodal, eval_supervised
from aefuse.fusion import (
    FusionMethodId,
    default_registry,
    fuse_average,
    fuse_laplacian_pyramid,
    fuse_max_energy,
    fuse_ratio_pyramid,
    fuse_two_scale_saliency,
    collapse_ratio,
    ratio_pyramid,
)
from aefuse.image import ImagePair, Task, collapse_laplacian, laplacian_pyramid
from aefuse.learner import (
    FusionNet,
    LossMode,
    TrainConfig,
    forward,
    loss_supervised,
    loss_total,
    loss_unsupervised,
    train,
)
from aefuse.niqe import mvg_distance, niqe, niqe_fit
from aefuse.oracle import OracleCache, evolve, seed_cache, select_optimal
from aefuse.synthetic import pristine_corpus, salt_and_pepper, scene, synthetic_pairs

sys.path.insert(0, os.path.dirname(__file__))
from oracles import (  # noqa: E402
    all_3x3_images,
    central_difference,
    codes_to_images,
    entropy_table,
    mutual_information_table,
)

_MODEL = None


def nss_model():
    global _MODEL
    if _MODEL is None:
        _MODEL = niqe_fit(pristine_corpus(), patch_size=32)
    return _MODEL


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-30))


# ------------------------------------------------------------ criterion 1

def criterion_1():
    """Metric golden suite plus brute-force EN/MI on 3x3 4-level images."""
    zeros, ones = np.zeros((16, 16)), np.ones((16, 16))
    every = (np.arange(256) / 255.0).reshape(16, 16)
    half = np.zeros((4, 4))
    half[:2] = 1.0
    ramp = np.tile(np.arange(20) / 255.0, (10, 1))
    board = (np.indices((8, 8)).sum(axis=0) % 2).astype(float)
    rng = np.random.default_rng(0)
    nat = scene(np.random.default_rng(7), 128)
    m = nss_model()
    checks = {
        "EN constant": metrics.entropy(np.full((5, 5), 0.3)) == 0.0,
        "EN coin": metrics.entropy(half) == 1.0,
        "EN uniform": abs(metrics.entropy(every) - 8.0) <= 1e-12,
        "AG constant": metrics.avg_gradient(zeros) == 0.0,
        "AG ramp": abs(metrics.avg_gradient(ramp) - 1 / math.sqrt(2)) <= 1e-12,
        "AG checkerboard": abs(metrics.avg_gradient(board) - 255.0) <= 1e-9,
        "SSIM identity": abs(metrics.ssim(nat, nat) - 1.0) <= 1e-9,
        "SSIM symmetric": all(
            abs(metrics.ssim(a, b) - metrics.ssim(b, a)) <= 1e-12
            for a, b in (rng.random((2, 32, 32)) for _ in range(3))),
        "PSNR identity": metrics.psnr(nat, nat) == math.inf,
        "PSNR 0 dB": abs(metrics.psnr(zeros, ones)) <= 1e-12,
        "PSNR one level": abs(metrics.psnr(zeros, zeros + 1 / 255) - 20 * math.log10(255)) <= 1e-9,
        "MI self": abs(metrics.mutual_information(nat, nat) - metrics.entropy(nat)) <= 1e-12,
        "MI constant": metrics.mutual_information(np.full((8, 8), 0.5), nat[:8, :8]) == 0.0,
        "MI bijection": metrics.mutual_information(np.array([[0.0, 1.0]]),
                                                   np.array([[1.0, 0.0]])) == 1.0,
        "VIF identity": abs(metrics.vif(nat, nat) - 1.0) <= 1e-6,
        "NIQE self distance": mvg_distance(m.feature_mean, m.feature_cov,
                                           m.feature_mean, m.feature_cov) == 0.0,
        "NIQE cov symmetric": np.max(np.abs(m.feature_cov - m.feature_cov.T)) <= 1e-12,
        "E1 identity": eval_supervised(nat, nat, QualityWeights()) == 1.0,
        "E1 SSIM only": eval_supervised(nat ** 2, nat, QualityWeights(1.0, 0.0))
                        == metrics.ssim(nat ** 2, nat),
        "E2 uniform histogram": eval_crossmodal(
            np.kron(every, np.ones((2, 2))), np.kron(every, np.ones((2, 2))),
            QualityWeights(alphas=(0, 1, 0, 0, 0, 0)), m) == 1.0,
    }
    codes = all_3x3_images(4)
    en_err = max(abs(metrics.entropy(img) - e)
                 for img, e in zip(codes_to_images(codes), entropy_table(codes, 4)))
    sub = codes[::8]
    partners = (sub[:, [4, 0, 8, 2, 6, 1, 3, 7, 5]] * 3 + 1) % 4
    mi_ref = np.maximum(mutual_information_table(sub, partners, 4), 0.0)
    mi_err = max(abs(metrics.mutual_information(a, b) - e)
                 for a, b, e in zip(codes_to_images(sub), codes_to_images(partners), mi_ref))
    failed = [k for k, v in checks.items() if not v]
    ok = not failed and en_err <= 1e-12 and mi_err <= 1e-12
    detail = (f"{len(checks) - len(failed)}/{len(checks)} golden examples; "
              f"EN max err {en_err:.1e} over {len(codes)} images; "
              f"MI max err {mi_err:.1e} over {len(sub)} pairs")
    if failed:
        detail += f"; failed: {', '.join(failed)}"
    return ok, detail


# ------------------------------------------------------------ criterion 2

def criterion_2():
    ref = scene(np.random.default_rng(7), 128)
    rng = np.random.default_rng(2)
    s_vals, p_vals = [], []
    for sigma in (2, 8, 32):
        noisy = np.clip(ref + rng.normal(0.0, sigma / 255.0, ref.shape), 0.0, 1.0)
        s_vals.append(metrics.ssim(noisy, ref))
        p_vals.append(metrics.psnr(noisy, ref))
    ok = s_vals[0] > s_vals[1] > s_vals[2] and p_vals[0] > p_vals[1] > p_vals[2]
    return ok, ("SSIM " + " > ".join(f"{v:.4f}" for v in s_vals)
                + "; PSNR " + " > ".join(f"{v:.2f}" for v in p_vals))


# ------------------------------------------------------------ criterion 3

def criterion_3(seeds=20):
    worst = {"supervised": 0.0, "unsupervised": 0.0, "network": 0.0}
    modes = list(LossMode)
    for seed in range(seeds):
        rng = np.random.default_rng(1000 + seed)
        h, w = (int(v) for v in rng.integers(8, 17, 2))
        p, x, y = rng.random((3, h, w))
        _, g = loss_supervised(p, x)
        fd = central_difference(lambda v: loss_supervised(v.reshape(h, w), x, False)[0],
                                p.ravel(), 1e-4)
        worst["supervised"] = max(worst["supervised"], _rel(g.ravel(), fd))
        _, g = loss_unsupervised(p, x, y)
        fd = central_difference(lambda v: loss_unsupervised(v.reshape(h, w), x, y, False)[0],
                                p.ravel(), 1e-4)
        worst["unsupervised"] = max(worst["unsupervised"], _rel(g.ravel(), fd))

        a, b, t = rng.random((3, 8, 8))
        mode = modes[seed % len(modes)]
        net = FusionNet.initialize(seed, scale=0.5)
        _, g = loss_total(net, (a, b), t, mode)
        fd = central_difference(
            lambda th: loss_total(FusionNet(th), (a, b), t, mode, need_grad=False)[0].total,
            net.params.copy(), 1e-5)
        worst["network"] = max(worst["network"], _rel(g, fd))
    ok = all(v <= 1e-3 for v in worst.values())
    return ok, f"{seeds} seeds; worst relative error " + ", ".join(
        f"{k} {v:.1e}" for k, v in worst.items())


# ------------------------------------------------------------ criterion 4

def criterion_4(n_pairs=50, n_orders=20, size=64):
    evaluator = Evaluator(model=nss_model())
    reg = default_registry()
    pairs = [ImagePair(p.id, p.a, p.b, Task.Unknown)
             for p in synthetic_pairs(n_pairs, seed=4, size=size)]
    candidates = {p.id: [(m.id, m(p)) for m in reg] for p in pairs}
    orders = list(itertools.permutations(range(len(reg))))
    picks = np.random.default_rng(4).choice(len(orders), n_orders, replace=False)
    finals, monotone = [], True
    for k in picks:
        order = orders[k]
        cache = OracleCache(evaluator.tag)
        for pair in pairs:
            cands = [candidates[pair.id][i] for i in order]
            seed_cache(cache, pair, cands[:1], evaluator)
            for mid, img in cands[1:]:
                before = cache.optima[pair.id].score
                evolve(cache, pair, mid, img, evaluator)
                monotone &= cache.optima[pair.id].score >= before
        finals.append({pid: (o.method, o.score, o.fused.tobytes(),
                             frozenset(cache.candidates[pid]))
                       for pid, o in cache.optima.items()})
    invariant = all(f == finals[0] for f in finals[1:])
    ok = invariant and monotone
    return ok, (f"{n_pairs} pairs x {n_orders} of {len(orders)} orderings; "
                f"order-independent={invariant}; non-decreasing={monotone}")


# -------------------------------------------------------- criteria 5 and 6

def _distillation_set(n=10, size=128):
    pairs = synthetic_pairs(n, seed=5, size=size)
    evaluator = Evaluator(model=nss_model())
    cache = OracleCache(evaluator.tag)
    reg = default_registry()
    for pair in pairs:
        cands = [(m.id, m(pair)) for m in reg
                 if pair.task is Task.Unknown or pair.task in m.tasks]
        seed_cache(cache, pair, cands, evaluator)
    return pairs, cache, evaluator


def _mean_e2(net, pairs, evaluator):
    return float(np.mean([evaluator.score(p, forward(net, p)[0]) for p in pairs]))


_DISTILL_CFG = dict(batch_size=5, epochs=50, learning_rate=1e-5, crop_size=64, seed=42)


def criterion_5():
    pairs, cache, evaluator = _distillation_set()
    data = [(p, cache.optima[p.id]) for p in pairs]
    cfg = TrainConfig(loss_mode=LossMode.SemiSupervised, **_DISTILL_CFG)
    net, trace = train(FusionNet.initialize(cfg.seed), data, cfg)
    first, last = trace[0].total, trace[-1].total
    net_e2 = _mean_e2(net, pairs, evaluator)
    oracle_e2 = float(np.mean([cache.optima[p.id].score for p in pairs]))
    descent = last < 0.5 * first
    quality = net_e2 >= 0.9 * oracle_e2
    return descent and quality, (
        f"loss epoch1 {first:.4f} -> epoch{cfg.epochs} {last:.4f} "
        f"(ratio {last / first:.3f}, need < 0.5); "
        f"net E2 {net_e2:.4f} vs 0.9 x oracle {0.9 * oracle_e2:.4f}")


def criterion_6():
    pairs, cache, evaluator = _distillation_set()
    rng = np.random.default_rng(6)
    data = []
    for k, p in enumerate(pairs):
        opt = cache.optima[p.id]
        if k in (1, 6):
            # a wrong pseudo label: scrambled pixels of the true optimum
            bad = rng.permutation(opt.fused.ravel()).reshape(opt.fused.shape)
            opt = type(opt)(opt.pair_id, bad, FusionMethodId("corrupt"), opt.score,
                            opt.evaluator_tag)
        data.append((p, opt))
    scores = {}
    for mode in (LossMode.SemiSupervised, LossMode.Supervised):
        cfg = TrainConfig(loss_mode=mode, **_DISTILL_CFG)
        net, _ = train(FusionNet.initialize(cfg.seed), data, cfg)
        scores[mode] = _mean_e2(net, pairs, evaluator)
    semi, sup = scores[LossMode.SemiSupervised], scores[LossMode.Supervised]
    return semi >= sup, f"SemiSupervised E2 {semi:.6f} vs Supervised E2 {sup:.6f}"


# ------------------------------------------------------------ criterion 7

def criterion_7():
    rng = np.random.default_rng(7)
    ops = [fuse_average, fuse_max_energy, fuse_laplacian_pyramid, fuse_ratio_pyramid,
           fuse_two_scale_saliency]
    worst_op = worst_pyr = 0.0
    for _ in range(20):
        a = rng.random((int(rng.integers(32, 97)), int(rng.integers(32, 97))))
        pair = ImagePair("id", a, a)
        worst_op = max(worst_op, max(float(np.max(np.abs(op(pair) - a))) for op in ops))
        worst_pyr = max(worst_pyr,
                        float(np.max(np.abs(collapse_laplacian(laplacian_pyramid(a, 4)) - a))),
                        float(np.max(np.abs(collapse_ratio(ratio_pyramid(a, 4)) - a))))
    ok = worst_op <= 1e-6 and worst_pyr <= 1e-6
    return ok, f"max |F(a,a)-a| {worst_op:.1e}; max pyramid round-trip error {worst_pyr:.1e}"


# ------------------------------------------------------------ criterion 8

def _strip_timing(text):
    rows = list(csv.reader(io.StringIO(text)))
    col = rows[0].index("seconds")
    return [r[:col] + r[col + 1:] for r in rows]


def _full_run(root):
    data = os.path.join(root, "data")
    man = os.path.join(data, "manifest.csv")
    out = os.path.join(root, "run")
    steps = [
        ["--seed", "42", "--out", data, "gen-synthetic", "--count", "10"],
        ["--seed", "42", "--manifest", man, "--out", os.path.join(out, "fused"), "fuse"],
        ["--seed", "42", "--manifest", man, "--out", out, "oracle"],
        ["--seed", "42", "--manifest", man, "--out", out, "train"],
        ["--seed", "42", "--manifest", man, "--out", out, "bench"],
    ]
    for argv in steps:
        code = cli_main(argv)
        if code != 0:
            raise RuntimeError(f"aefuse {' '.join(argv)} exited {code}")
    files = {}
    for dirpath, _, names in os.walk(root):
        for name in names:
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root)
            blob = open(path, "rb").read()
            if name == "bench.csv":
                files[rel] = _strip_timing(blob.decode())
            elif name.endswith((".csv", ".aenet", ".pgm", ".idx", ".cand")):
                files[rel] = hashlib.sha256(blob).hexdigest()
    return files


def criterion_8():
    with tempfile.TemporaryDirectory() as r1, tempfile.TemporaryDirectory() as r2:
        f1, f2 = _full_run(r1), _full_run(r2)
    same = f1 == f2
    csvs = sum(k.endswith(".csv") for k in f1)
    models = sum(k.endswith(".aenet") for k in f1)
    return same, (f"{len(f1)} artifacts compared ({csvs} CSV, {models} model files); "
                  f"identical={same} (bench timing column excluded)")


# ------------------------------------------------------------ criterion 9

def criterion_9():
    m = nss_model()
    self_d = mvg_distance(m.feature_mean, m.feature_cov, m.feature_mean, m.feature_cov)
    rng = np.random.default_rng(9)
    clean = pristine_corpus()
    clean_v = float(np.mean([niqe(x, m) for x in clean]))
    noisy_v = float(np.mean([niqe(salt_and_pepper(x, 0.10, rng), m) for x in clean]))
    ok = self_d == 0.0 and clean_v < noisy_v
    return ok, f"self distance {self_d}; mean NIQE pristine {clean_v:.3f} < noisy {noisy_v:.3f}"


# ---------------------------------------------------------------- harness

CRITERIA = [
    (1, "metric golden suite", criterion_1, 10),
    (2, "SSIM/PSNR degradation monotonicity", criterion_2, 5),
    (3, "gradient checks", criterion_3, 120),
    (4, "evolution monotonicity and permutation invariance", criterion_4, 300),
    (5, "distillation descent", criterion_5, 900),
    (6, "loss-mode comparison", criterion_6, 1800),
    (7, "fusion-operator identity", criterion_7, 10),
    (8, "end-to-end determinism", criterion_8, 1200),
    (9, "NIQE sanity", criterion_9, 60),
]


def run_criterion(number, title, fn, budget):
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    in_time = elapsed < budget
    verdict = "PASS" if ok and in_time else "FAIL"
    line = (f"[criterion {number}] {verdict} {title}: {detail}; "
            f"{elapsed:.1f}s (budget {budget}s)")
    return ok and in_time, line


@pytest.mark.slow
@pytest.mark.parametrize("number,title,fn,budget", CRITERIA, ids=[f"c{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, budget, capsys):
    ok, line = run_criterion(number, title, fn, budget)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
