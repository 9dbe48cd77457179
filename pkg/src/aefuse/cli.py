"""Command-line front end: ``aefuse <subcommand> [options]``.

Every failure prints one line ``AEERR:<exit code>:<error name>: <message>``
to stderr and exits nonzero:

==== ==========================================================
2    manifest or configuration problem
3    file I/O or image decoding problem
4    evaluator failure while scoring candidates
5    missing oracle cache, cached optimum, or model file
6    stale cache (evaluator tag mismatch) or duplicate method
==== ==========================================================
"""

import argparse
import os
import sys

from .config import RunConfig, parse_config
from .errors import (
    AEFuseError,
    ConfigError,
    CorruptIndex,
    DuplicateMethodForPair,
    IoFailure,
    MissingOracle,
    PGMError,
)
from .image import load_image, save_pgm
from .learner import net_load, net_store
from .niqe import niqe_fit, save_nss
from .oracle import INDEX_NAME, cache_load, cache_store
from .pipeline import (
    ManifestError,
    ManifestRow,
    bench_tables,
    build_evaluator,
    evolve_csv,
    fuse_to_dir,
    load_pairs,
    read_manifest,
    resolve_nss_model,
    run_bench,
    run_evolve,
    run_oracle,
    run_train,
    scores_csv,
    write_manifest,
)
from .synthetic import pristine_corpus, synthetic_pairs

__all__ = ["main", "CliError"]


class CliError(Exception):
    def __init__(self, code, message, name="CliError"):
        super().__init__(message)
        self.code = code
        self.name = name


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _config(args):
    if args.config:
        try:
            cfg = parse_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    else:
        cfg = RunConfig()
    return cfg.with_seed(args.seed) if args.seed is not None else cfg


def _pairs(args):
    if not args.manifest:
        raise ManifestError("--manifest is required")
    return load_pairs(read_manifest(args.manifest))


def _out(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _cache_dir(args, cfg):
    return args.cache or cfg.cache_dir or os.path.join(args.out or ".", "cache")


def _load_cache(args, cfg, expected_tag=None):
    directory = _cache_dir(args, cfg)
    if not os.path.isfile(os.path.join(directory, INDEX_NAME)):
        raise CliError(5, f"no oracle cache in {directory}", "MissingCache")
    return directory, cache_load(directory, expected_tag)


# ------------------------------------------------------------- commands

def cmd_gen_synthetic(args, cfg):
    out = _out(args)
    pair_dir = os.path.join(out, "pairs")
    os.makedirs(pair_dir, exist_ok=True)
    rows = []
    for pair in synthetic_pairs(args.count, seed=cfg.seed, size=args.size):
        names = [f"{pair.id}_a.pgm", f"{pair.id}_b.pgm"]
        save_pgm(pair.a, os.path.join(pair_dir, names[0]))
        save_pgm(pair.b, os.path.join(pair_dir, names[1]))
        ref = ""
        if pair.ref is not None:
            ref = f"pairs/{pair.id}_ref.pgm"
            save_pgm(pair.ref, os.path.join(out, ref))
        rows.append(ManifestRow(pair.id, "pairs/" + names[0], "pairs/" + names[1], ref,
                                pair.task))
    write_manifest(os.path.join(out, "manifest.csv"), rows)
    print(f"wrote {len(rows)} synthetic pairs to {out}")


def cmd_fit_nss(args, cfg):
    if args.images:
        corpus = [load_image(p) for p in args.images]
    else:
        corpus = pristine_corpus()
    model = niqe_fit(corpus, cfg.nss_patch_size, cfg.nss_sharpness_fraction)
    path = os.path.join(_out(args), "nss.model")
    save_nss(model, path)
    print(f"wrote {path}")


def cmd_fuse(args, cfg):
    pairs = _pairs(args)
    written = fuse_to_dir(cfg.registry(), pairs, _out(args))
    print(f"wrote {len(written)} fused images")


def cmd_oracle(args, cfg):
    pairs = _pairs(args)
    out = _out(args)
    cache, rows = run_oracle(cfg, pairs)
    cache_store(cache, _cache_dir(args, cfg))
    _write_text(os.path.join(out, "scores.csv"), scores_csv(rows))
    print(f"selected optima for {len(cache)} pairs ({cache.evaluator_tag})")


def cmd_train(args, cfg):
    pairs = _pairs(args)
    _, cache = _load_cache(args, cfg)
    out = _out(args)
    init, net, trace, trace_text = run_train(cfg, pairs, cache)
    net_store(init, os.path.join(out, "init.aenet"))
    net_store(net, os.path.join(out, "model.aenet"))
    _write_text(os.path.join(out, "trace.csv"), trace_text)
    final = trace[-1].total if trace else float("nan")
    print(f"final mean loss: {final!r}")


def cmd_evolve(args, cfg):
    pairs = _pairs(args)
    evaluator = build_evaluator(cfg)
    directory, cache = _load_cache(args, cfg, evaluator.tag)
    rows = run_evolve(cfg, pairs, cache, args.method, evaluator)
    cache_store(cache, directory)
    _write_text(os.path.join(_out(args), "evolve.csv"), evolve_csv(rows))
    print(f"replacements: {sum(r['replaced'] for r in rows)}")


def cmd_bench(args, cfg):
    pairs = _pairs(args)
    model_path = args.model or os.path.join(args.out or ".", "model.aenet")
    if not os.path.isfile(model_path):
        raise CliError(5, f"no trained model at {model_path}", "MissingModel")
    net = net_load(model_path)
    _, cache = _load_cache(args, cfg)
    rows = run_bench(cfg, pairs, cache, net, resolve_nss_model(cfg))
    text_csv, text_md = bench_tables(rows, pairs)
    out = _out(args)
    _write_text(os.path.join(out, "bench.csv"), text_csv)
    _write_text(cfg.report_path or os.path.join(out, "bench.md"), text_md)
    print(text_md, end="")


COMMANDS = {
    "fuse": (cmd_fuse, "run every registry method on every pair", 1),
    "oracle": (cmd_oracle, "score candidates and cache the per-pair optimum", 4),
    "train": (cmd_train, "distill the cached optima into the fusion network", 1),
    "evolve": (cmd_evolve, "absorb a new fusion method into the cache", 4),
    "bench": (cmd_bench, "compare methods, oracle and network", 4),
    "gen-synthetic": (cmd_gen_synthetic, "write a synthetic dataset and manifest", 1),
    "fit-nss": (cmd_fit_nss, "fit a natural-scene-statistics model", 1),
}


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="key=value run config")
    parser.add_argument("--manifest", default=default, help="pair manifest CSV")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--cache", default=default, help="oracle cache directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="aefuse", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext, _) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext)
        _global_flags(p, suppress=True)
        if name == "evolve":
            p.add_argument("--method", required=True, help="catalog name of the new method")
        elif name == "bench":
            p.add_argument("--model", help="AENET1 model (default: <out>/model.aenet)")
        elif name == "gen-synthetic":
            p.add_argument("--count", type=int, default=10)
            p.add_argument("--size", type=int, default=128)
        elif name == "fit-nss":
            p.add_argument("images", nargs="*", help="pristine images (default: bundled corpus)")
    return parser


def _exit_code(exc, fallback):
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, (ManifestError, ConfigError)):
        return 2
    if isinstance(exc, (IoFailure, PGMError, OSError)):
        return 3
    if isinstance(exc, MissingOracle):
        return 5
    if isinstance(exc, (CorruptIndex, DuplicateMethodForPair)):
        return 6
    if isinstance(exc, KeyError):
        return 2
    return fallback


def main(argv=None):
    args = build_parser().parse_args(argv)
    fn, _, fallback = COMMANDS[args.command]
    try:
        fn(args, _config(args))
    except (AEFuseError, CliError, OSError, KeyError, ValueError) as exc:
        code = _exit_code(exc, fallback)
        name = getattr(exc, "name", None) if isinstance(exc, CliError) else type(exc).__name__
        msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"AEERR:{code}:{name}: {' '.join(msg.split())}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
