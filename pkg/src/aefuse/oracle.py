"""Per-pair optimal fusion selection, evolution, and the on-disk cache.

For each pair the cache keeps the best-scoring candidate (the pseudo
label the learner is trained on) together with the scores of every
candidate ever evaluated, so newly added methods can be absorbed by
scoring only the new candidate.
"""

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptIndex,
    DuplicateMethodForPair,
    EmptyCandidates,
    IoFailure,
    UnknownPair,
)
from .fusion import FusionMethodId
from .image import decode_pgm, encode_pgm

__all__ = ["OptimalSolution", "OracleCache", "select_optimal", "evolve",
           "cache_store", "cache_load", "INDEX_NAME", "CANDIDATES_NAME"]

INDEX_NAME = "oracle.idx"
CANDIDATES_NAME = "oracle.cand"
INDEX_MAGIC = "AEORACLE1"


@dataclass(frozen=True)
class OptimalSolution:
    pair_id: str
    fused: np.ndarray
    method: FusionMethodId
    score: float
    evaluator_tag: str


@dataclass
class OracleCache:
    evaluator_tag: str
    optima: dict = field(default_factory=dict)
    candidates: dict = field(default_factory=dict)

    def __contains__(self, pair_id):
        return pair_id in self.optima

    def __len__(self):
        return len(self.optima)

    def copy(self):
        return OracleCache(self.evaluator_tag, dict(self.optima),
                           {k: list(v) for k, v in self.candidates.items()})


def _beats(score, name, best_score, best_name):
    """Strictly higher score wins; exact ties go to the smaller method name."""
    return score > best_score or (score == best_score and name < best_name)


def select_optimal(pair, candidates, evaluator):
    """Pick the candidate with the highest evaluator score.

    Returns ``(OptimalSolution, [(method_id, score), ...])``, the second
    item listing every candidate in input order.
    """
    if not candidates:
        raise EmptyCandidates(f"no candidates for pair {pair.id!r}")
    scored = [(mid, float(evaluator.score(pair, img)), img) for mid, img in candidates]
    best = scored[0]
    for item in scored[1:]:
        if _beats(item[1], item[0].name, best[1], best[0].name):
            best = item
    opt = OptimalSolution(pair.id, best[2], best[0], best[1], evaluator.tag)
    return opt, [(mid, s) for mid, s, _ in scored]


def seed_cache(cache, pair, candidates, evaluator):
    """Record a fresh pair in ``cache`` via :func:`select_optimal`."""
    opt, scores = select_optimal(pair, candidates, evaluator)
    cache.optima[pair.id] = opt
    cache.candidates[pair.id] = scores
    return cache


def evolve(cache, pair, new_method, new_candidate, evaluator):
    """Score one new method's candidate and keep it if it beats the optimum.

    Updates ``cache`` in place and returns it together with the new score.
    """
    if pair.id not in cache.optima:
        raise UnknownPair(f"pair {pair.id!r} is not in the oracle cache")
    if evaluator.tag != cache.evaluator_tag:
        raise CorruptIndex(
            f"evaluator {evaluator.tag} does not match cache tag {cache.evaluator_tag}")
    seen = cache.candidates.setdefault(pair.id, [])
    if any(mid.name == new_method.name for mid, _ in seen):
        raise DuplicateMethodForPair(
            f"method {new_method.name!r} was already evaluated for pair {pair.id!r}")
    score = float(evaluator.score(pair, new_candidate))
    seen.append((new_method, score))
    cur = cache.optima[pair.id]
    if _beats(score, new_method.name, cur.score, cur.method.name):
        cache.optima[pair.id] = OptimalSolution(pair.id, new_candidate, new_method,
                                                score, evaluator.tag)
    return cache, score


# ------------------------------------------------------------ persistence

def _check_field(text, what):
    if "\t" in text or "\n" in text or not text:
        raise ValueError(f"{what} {text!r} cannot be stored in the index")
    return text


def cache_store(cache, directory):
    """Write one PGM per optimum plus the index and candidate tables."""
    try:
        os.makedirs(directory, exist_ok=True)
        lines = [f"{INDEX_MAGIC}\t{_check_field(cache.evaluator_tag, 'tag')}"]
        for pid in sorted(cache.optima):
            opt = cache.optima[pid]
            payload = encode_pgm(opt.fused)
            with open(os.path.join(directory, f"{_check_field(pid, 'pair id')}.optimal.pgm"),
                      "wb") as fh:
                fh.write(payload)
            digest = hashlib.sha256(payload).hexdigest()
            lines.append(f"{pid}\t{opt.method.name}\t{opt.score!r}\t{digest}")
        with open(os.path.join(directory, INDEX_NAME), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        rows = [f"{pid}\t{mid.name}\t{mid.version}\t{score!r}"
                for pid in sorted(cache.candidates) for mid, score in cache.candidates[pid]]
        with open(os.path.join(directory, CANDIDATES_NAME), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("".join(r + "\n" for r in rows))
    except OSError as exc:
        raise IoFailure(f"cannot write oracle cache to {directory}: {exc}") from exc


def cache_load(directory, expected_tag=None):
    """Read a cache written by :func:`cache_store`.

    Raises ``CorruptIndex`` on malformed rows, checksum mismatches, or
    when ``expected_tag`` differs from the stored evaluator tag.
    """
    try:
        with open(os.path.join(directory, INDEX_NAME), encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read oracle index in {directory}: {exc}") from exc
    if not lines or not lines[0].startswith(INDEX_MAGIC + "\t"):
        raise CorruptIndex("missing AEORACLE1 header")
    tag = lines[0].split("\t", 1)[1]
    if expected_tag is not None and tag != expected_tag:
        raise CorruptIndex(f"cache evaluator tag {tag} does not match {expected_tag}")
    cache = OracleCache(tag)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 4:
            raise CorruptIndex(f"index line {lineno}: expected 4 fields")
        pid, name, score, digest = parts
        try:
            with open(os.path.join(directory, f"{pid}.optimal.pgm"), "rb") as fh:
                payload = fh.read()
        except OSError as exc:
            raise IoFailure(f"missing optimum image for {pid!r}: {exc}") from exc
        if hashlib.sha256(payload).hexdigest() != digest:
            raise CorruptIndex(f"checksum mismatch for pair {pid!r}")
        try:
            value = float(score)
        except ValueError:
            raise CorruptIndex(f"index line {lineno}: bad score {score!r}") from None
        cache.optima[pid] = OptimalSolution(pid, decode_pgm(payload), FusionMethodId(name),
                                            value, tag)
        cache.candidates[pid] = []
    cand_path = os.path.join(directory, CANDIDATES_NAME)
    if os.path.exists(cand_path):
        with open(cand_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh.read().splitlines(), start=1):
                parts = line.split("\t")
                if len(parts) != 4 or parts[0] not in cache.optima:
                    raise CorruptIndex(f"candidate table line {lineno} is malformed")
                pid, name, version, score = parts
                cache.candidates[pid].append((FusionMethodId(name, int(version)), float(score)))
        for pid, opt in cache.optima.items():
            for mid, _ in cache.candidates[pid]:
                if mid.name == opt.method.name:
                    cache.optima[pid] = OptimalSolution(pid, opt.fused, mid, opt.score, tag)
    return cache
