"""Dataset manifests and the fuse / oracle / train / evolve / bench steps.

These functions back the command-line interface but are usable from
Python directly; they raise library exceptions rather than exiting.
"""

import csv
import io
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import AEFuseError, IoFailure, MissingOracle, PGMError
from .evaluators import Evaluator, crossmodal_from_values, eval_pair_quality
from .fusion import FusionMethodId, catalog_method, registry_fuse_all
from .image import ImagePair, Task, load_image, save_pgm
from .learner import FusionNet, forward, train, trace_csv
from .metrics import MetricId
from .niqe import load_nss, niqe, niqe_fit
from .oracle import OracleCache, evolve, seed_cache
from .synthetic import SYNTHETIC_PREFIX, pristine_corpus

__all__ = ["ManifestError", "ManifestRow", "read_manifest", "load_pairs",
           "resolve_nss_model", "build_evaluator", "fuse_to_dir", "run_oracle",
           "scores_csv", "run_train", "run_evolve", "run_bench"]

MANIFEST_HEADER = ["pair_id", "path_a", "path_b", "path_ref", "task"]
SCORE_COLUMNS = ["EN", "AG", "SSIM", "VIF", "NIQE", "PSNR", "MI"]


class ManifestError(AEFuseError, ValueError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    pair_id: str
    path_a: str
    path_b: str
    path_ref: str
    task: Task


def read_manifest(path):
    """Parse a manifest CSV; relative paths resolve against its directory."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not rows or rows[0] != MANIFEST_HEADER:
        raise ManifestError(f"manifest header must be {','.join(MANIFEST_HEADER)}")
    base = os.path.dirname(os.path.abspath(path))
    out, seen = [], set()
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ManifestError(f"manifest line {n}: expected 5 fields")
        pid, pa, pb, pref, task = (s.strip() for s in row)
        if not pid or pid in seen:
            raise ManifestError(f"manifest line {n}: missing or duplicate pair_id {pid!r}")
        seen.add(pid)
        try:
            task = Task(task or "Unknown")
        except ValueError:
            raise ManifestError(f"pair {pid}: unknown task {task!r}") from None

        def resolve(p):
            return p if not p or os.path.isabs(p) else os.path.join(base, p)

        out.append(ManifestRow(pid, resolve(pa), resolve(pb), resolve(pref), task))
    if not out:
        raise ManifestError("manifest lists no pairs")
    return out


def load_pairs(rows):
    pairs = []
    for row in rows:
        for p in (row.path_a, row.path_b) + ((row.path_ref,) if row.path_ref else ()):
            if not p or not os.path.isfile(p):
                raise ManifestError(f"pair {row.pair_id}: missing input file {p!r}")
        try:
            ref = load_image(row.path_ref) if row.path_ref else None
            pairs.append(ImagePair(row.pair_id, load_image(row.path_a),
                                   load_image(row.path_b), row.task, ref))
        except (IoFailure, PGMError) as exc:
            raise IoFailure(f"pair {row.pair_id}: {exc}") from exc
        except ValueError as exc:
            raise ManifestError(f"pair {row.pair_id}: {exc}") from exc
    return pairs


def write_manifest(path, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for r in rows:
        w.writerow([r.pair_id, r.path_a, r.path_b, r.path_ref, r.task.value])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


_DEFAULT_MODELS = {}


def resolve_nss_model(cfg):
    """Load the configured NSS model, or fit one on the bundled pristine corpus."""
    if cfg.nss_path:
        return load_nss(cfg.nss_path)
    key = (cfg.nss_patch_size, cfg.nss_sharpness_fraction)
    if key not in _DEFAULT_MODELS:
        _DEFAULT_MODELS[key] = niqe_fit(pristine_corpus(), *key)
    return _DEFAULT_MODELS[key]


def build_evaluator(cfg, model=None):
    model = model if model is not None else resolve_nss_model(cfg)
    return Evaluator(cfg.weights, model, cfg.evaluator)


# ------------------------------------------------------------------ fusion

def fuse_to_dir(registry, pairs, out_dir):
    """Write ``<pair_id>.<method>.pgm`` for every applicable method.

    On failure every file written so far is removed.
    """
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        for pair in pairs:
            for mid, img in registry_fuse_all(registry, pair):
                path = os.path.join(out_dir, f"{pair.id}.{mid.name}.pgm")
                save_pgm(img, path)
                written.append(path)
    except BaseException:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise
    return written


# ------------------------------------------------------------------ oracle

def candidate_metrics(pair, img, model):
    """Raw indices of a candidate; reference-based ones average both sources."""
    sources = (pair.a, pair.b)
    return {
        "EN": metrics.entropy(img),
        "AG": metrics.avg_gradient(img),
        "SSIM": float(np.mean([metrics.ssim(img, s) for s in sources])),
        "VIF": float(np.mean([metrics.vif(img, s) for s in sources])),
        "NIQE": niqe(img, model),
        "PSNR": float(np.mean([metrics.psnr(img, s) for s in sources])),
        "MI": float(np.mean([metrics.mutual_information(img, s) for s in sources])),
    }


def _fmt(x):
    return repr(float(x)) if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def run_oracle(cfg, pairs, evaluator=None):
    """Generate candidates, select optima, and collect the score table.

    Returns ``(OracleCache, rows)`` where each row is a dict with the
    score-table columns.
    """
    evaluator = evaluator or build_evaluator(cfg)
    registry = cfg.registry()
    cache = OracleCache(evaluator.tag)
    rows = []
    for pair in pairs:
        cands = registry_fuse_all(registry, pair)
        seed_cache(cache, pair, cands, evaluator)
        chosen = cache.optima[pair.id].method.name
        for mid, img in cands:
            row = {"pair_id": pair.id, "method": mid.name}
            row.update(candidate_metrics(pair, img, evaluator.model))
            row["E2"] = eval_pair_quality(pair.a, pair.b, img, cfg.weights, evaluator.model)
            row["selected"] = int(mid.name == chosen)
            rows.append(row)
    return cache, rows


def scores_csv(rows):
    cols = ["pair_id", "method"] + SCORE_COLUMNS + ["E2", "selected"]
    lines = [",".join(cols)]
    for r in rows:
        vals = [r["pair_id"], r["method"]] + [_fmt(r[c]) for c in SCORE_COLUMNS]
        lines.append(",".join(vals + [_fmt(r["E2"]), str(r["selected"])]))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- train

def training_set(pairs, cache):
    missing = [p.id for p in pairs if p.id not in cache.optima]
    if missing:
        raise MissingOracle(f"no cached optimum for pairs: {', '.join(missing)}")
    return [(p, cache.optima[p.id]) for p in pairs]


def run_train(cfg, pairs, cache):
    """Train from a fresh seeded initialization; returns ``(init, net, trace)``."""
    data = training_set(pairs, cache)
    init = FusionNet.initialize(cfg.train.seed)
    net, trace = train(init, data, cfg.train)
    return init, net, trace, trace_csv(trace)


# ------------------------------------------------------------------ evolve

def run_evolve(cfg, pairs, cache, method_name, evaluator=None):
    """Absorb one new catalog method into ``cache``; returns report rows."""
    evaluator = evaluator or build_evaluator(cfg)
    name, fn, tasks, version, _ = catalog_method(method_name, cfg.method_params.get(method_name))
    mid = FusionMethodId(name, version)
    rows = []
    for pair in pairs:
        if pair.id not in cache.optima:
            raise MissingOracle(f"no cached optimum for pair {pair.id!r}")
        if pair.task is not Task.Unknown and pair.task not in tasks:
            continue
        before = cache.optima[pair.id]
        _, score = evolve(cache, pair, mid, fn(pair), evaluator)
        after = cache.optima[pair.id]
        rows.append({
            "pair_id": pair.id, "old_method": before.method.name, "old_score": before.score,
            "new_score": score, "method": after.method.name, "score": after.score,
            "delta": after.score - before.score,
            "replaced": int(after.method.name != before.method.name),
        })
    return rows


def evolve_csv(rows):
    cols = ["pair_id", "old_method", "old_score", "new_score", "method", "score",
            "delta", "replaced"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) if isinstance(r[c], float) else str(r[c])
                              for c in cols))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- bench

def _mean(values):
    return float(np.mean(values)) if values else float("nan")


def run_bench(cfg, pairs, cache, net, model=None):
    """Compare registry methods, the oracle, and the trained network.

    Returns a list of rows ``{"method", <metrics>, "E2", "seconds"}``;
    each row averages over the pairs the method applies to.
    """
    model = model if model is not None else resolve_nss_model(cfg)
    registry = cfg.registry()
    per = {name: [] for name in registry.names + ["oracle", "ae-net"]}
    for pair in pairs:
        spent = 0.0
        for m in registry:
            if pair.task is not Task.Unknown and pair.task not in m.tasks:
                continue
            t0 = time.perf_counter()
            img = m(pair)
            dt = time.perf_counter() - t0
            spent += dt
            per[m.id.name].append((pair, img, dt))
        if pair.id in cache.optima:
            per["oracle"].append((pair, cache.optima[pair.id].fused, spent))
        t0 = time.perf_counter()
        img, _ = forward(net, pair)
        per["ae-net"].append((pair, img, time.perf_counter() - t0))
    rows = []
    for name, items in per.items():
        row = {"method": name}
        vals = [candidate_metrics(p, img, model) for p, img, _ in items]
        for c in SCORE_COLUMNS:
            row[c] = _mean([v[c] for v in vals])
        row["E2"] = _mean([eval_pair_quality(p.a, p.b, img, cfg.weights, model)
                           for p, img, _ in items])
        row["seconds"] = _mean([dt for _, _, dt in items])
        rows.append(row)
    return rows


def _bench_cell(v):
    return f"{v:.6f}" if math.isfinite(v) else ("inf" if v > 0 else "nan" if v != v else "-inf")


def bench_tables(rows, pairs):
    cols = SCORE_COLUMNS + ["E2", "seconds"]
    csv_lines = [",".join(["method"] + cols)]
    md = []
    if pairs and all(p.id.startswith(SYNTHETIC_PREFIX) for p in pairs):
        md.append("_Dataset: bundled synthetic stand-in pairs, not a real benchmark._\n")
    md.append("| method | " + " | ".join(cols) + " |")
    md.append("|" + "---|" * (len(cols) + 1))
    for r in rows:
        cells = [_bench_cell(r[c]) for c in cols]
        csv_lines.append(",".join([r["method"]] + cells))
        md.append("| " + " | ".join([r["method"]] + cells) + " |")
    return "\n".join(csv_lines) + "\n", "\n".join(md) + "\n"


def recompute_e2(values, weights):
    """E2 from raw single-reference values keyed by column name."""
    return crossmodal_from_values({MetricId(k): v for k, v in values.items()}, weights)
