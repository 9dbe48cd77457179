"""Run configuration: a flat ``key=value`` file with dotted section keys.

Example::

    # registry
    registry.methods = avg,maxsel,lp,rp,tsal
    method.lp.levels = 4
    weights.alpha0 = 0.1666
    train.epochs = 255

Absent keys take defaults; unknown keys are rejected.
"""

import math
from dataclasses import dataclass, field, replace

from .errors import ConfigRangeError, ConfigTypeError, UnknownKey
from .evaluators import DEFAULT_NORMS, QualityWeights
from .fusion import CATALOG, DEFAULT_METHODS, MethodRegistry
from .learner import LossMode, TrainConfig
from .metrics import MetricId

__all__ = ["RunConfig", "parse_config", "parse_config_text"]


@dataclass(frozen=True)
class RunConfig:
    methods: tuple = DEFAULT_METHODS
    method_params: dict = field(default_factory=dict)
    weights: QualityWeights = field(default_factory=QualityWeights)
    evaluator: str = "E2"
    nss_path: str = None
    nss_patch_size: int = 32
    nss_sharpness_fraction: float = 0.75
    train: TrainConfig = field(default_factory=TrainConfig)
    cache_dir: str = None
    report_path: str = None
    seed: int = 42

    def registry(self):
        return MethodRegistry.from_catalog(self.methods, self.method_params)

    def with_seed(self, seed):
        return replace(self, seed=seed, train=replace(self.train, seed=seed))


def _as_int(value, key, line):
    try:
        return int(value)
    except ValueError:
        raise ConfigTypeError(f"{key} expects an integer, got {value!r}", line) from None


def _as_float(value, key, line):
    try:
        out = float(value)
    except ValueError:
        raise ConfigTypeError(f"{key} expects a number, got {value!r}", line) from None
    if math.isnan(out):
        raise ConfigTypeError(f"{key} must not be NaN", line)
    return out


def _nonneg(x, key, line):
    if x < 0:
        raise ConfigRangeError(f"{key} must be non-negative, got {x}", line)
    return x


def _positive(x, key, line):
    if x <= 0:
        raise ConfigRangeError(f"{key} must be positive, got {x}", line)
    return x


_TRAIN_KEYS = {
    "batch_size": lambda v, k, n: _positive(_as_int(v, k, n), k, n),
    "epochs": lambda v, k, n: _nonneg(_as_int(v, k, n), k, n),
    "learning_rate": lambda v, k, n: _nonneg(_as_float(v, k, n), k, n),
    "crop_size": lambda v, k, n: _as_int(v, k, n),
    "seed": lambda v, k, n: _as_int(v, k, n),
    "momentum": lambda v, k, n: _as_float(v, k, n),
}


def parse_config_text(text):
    """Parse configuration text; errors name the offending line."""
    methods = DEFAULT_METHODS
    params = {}
    beta = {"beta": 0.5, "beta1": 0.5}
    alphas = [1 / 6] * 6
    norms = dict(DEFAULT_NORMS)
    train = {}
    top = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigTypeError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise UnknownKey(f"duplicate key {key!r}", lineno)
        seen.add(key)
        parts = key.split(".")
        if key == "registry.methods":
            names = tuple(s.strip() for s in value.split(",") if s.strip())
            for name in names:
                if name not in CATALOG:
                    raise ConfigRangeError(f"unknown fusion method {name!r}", lineno)
            if not names or len(set(names)) != len(names):
                raise ConfigRangeError("registry.methods must be a non-empty unique list", lineno)
            methods = names
        elif parts[0] == "method" and len(parts) == 3:
            name, pname = parts[1], parts[2]
            if name not in CATALOG or pname not in CATALOG[name][1]:
                raise UnknownKey(f"unknown method parameter {key!r}", lineno)
            default = CATALOG[name][1][pname]
            conv = _as_int if isinstance(default, int) else _as_float
            params.setdefault(name, {})[pname] = conv(value, key, lineno)
        elif key in ("weights.beta", "weights.beta1"):
            beta[parts[1]] = _nonneg(_as_float(value, key, lineno), key, lineno)
        elif parts[0] == "weights" and len(parts) == 2 and parts[1] in {f"alpha{i}" for i in range(6)}:
            alphas[int(parts[1][5:])] = _nonneg(_as_float(value, key, lineno), key, lineno)
        elif parts[0] == "norm" and len(parts) == 3 and parts[2] in ("lo", "hi"):
            try:
                mid = MetricId(parts[1])
            except ValueError:
                raise UnknownKey(f"unknown metric in {key!r}", lineno) from None
            old = norms[mid]
            val = _as_float(value, key, lineno)
            norms[mid] = replace(old, **{parts[2]: val})
            if not norms[mid].lo < norms[mid].hi:
                raise ConfigRangeError(f"{key} leaves an empty range", lineno)
        elif key == "evaluator":
            if value not in ("E1", "E2"):
                raise ConfigRangeError(f"evaluator must be E1 or E2, got {value!r}", lineno)
            top["evaluator"] = value
        elif key == "nss.path":
            top["nss_path"] = value
        elif key == "nss.patch_size":
            top["nss_patch_size"] = _positive(_as_int(value, key, lineno), key, lineno)
        elif key == "nss.sharpness_fraction":
            frac = _as_float(value, key, lineno)
            if not 0 < frac <= 1:
                raise ConfigRangeError(f"{key} must lie in (0, 1]", lineno)
            top["nss_sharpness_fraction"] = frac
        elif parts[0] == "train" and len(parts) == 2 and parts[1] == "loss_mode":
            try:
                train["loss_mode"] = LossMode(value)
            except ValueError:
                raise ConfigRangeError(f"unknown loss mode {value!r}", lineno) from None
        elif parts[0] == "train" and len(parts) == 2 and parts[1] in _TRAIN_KEYS:
            train[parts[1]] = _TRAIN_KEYS[parts[1]](value, key, lineno)
            try:
                TrainConfig(**{parts[1]: train[parts[1]]})
            except ValueError as exc:
                raise ConfigRangeError(str(exc), lineno) from None
        elif key == "cache.dir":
            top["cache_dir"] = value
        elif key == "report.path":
            top["report_path"] = value
        elif key == "seed":
            top["seed"] = _as_int(value, key, lineno)
        else:
            raise UnknownKey(f"unknown key {key!r}", lineno)
    if beta["beta"] + beta["beta1"] <= 0:
        raise ConfigRangeError("weights.beta + weights.beta1 must be positive")
    if sum(alphas) <= 0:
        raise ConfigRangeError("the alpha weights must not all be zero")
    weights = QualityWeights(beta["beta"], beta["beta1"], tuple(alphas), norms)
    if "seed" in top and "seed" not in train:
        train["seed"] = top["seed"]
    return RunConfig(methods=methods, method_params=params, weights=weights,
                     train=TrainConfig(**train), **top)


def parse_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
