"""Classical fusion operators and the method registry that runs them."""

from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .errors import NoApplicableMethod, TooManyLevels, WeightOutOfRange
from .image import (
    Task,
    box_filter,
    collapse_laplacian,
    convolve,
    gaussian_pyramid,
    laplacian_pyramid,
    max_pyramid_levels,
    upsample2,
)

__all__ = [
    "fuse_average",
    "fuse_max_energy",
    "fuse_laplacian_pyramid",
    "fuse_ratio_pyramid",
    "fuse_two_scale_saliency",
    "saliency_weights",
    "FusionMethodId",
    "MethodRegistry",
    "CATALOG",
    "default_registry",
    "registry_fuse_all",
]

LAPLACIAN_3x3 = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])
RATIO_EPS = 1e-3
SALIENCY_EPS = 1e-10


def fuse_average(pair, weight=0.5):
    if not 0.0 <= weight <= 1.0:
        raise WeightOutOfRange(f"weight must lie in [0, 1], got {weight}")
    if weight == 1.0:
        return pair.a.copy()
    if weight == 0.0:
        return pair.b.copy()
    return np.clip(weight * pair.a + (1.0 - weight) * pair.b, 0.0, 1.0)


def local_energy(img, radius):
    lap = convolve(img, LAPLACIAN_3x3)
    size = 2 * radius + 1
    return convolve(lap * lap, np.ones((size, size)))


def fuse_max_energy(pair, window_radius=1):
    """Per pixel, take the source with the larger local Laplacian energy.

    Ties go to ``pair.a``.
    """
    if window_radius < 1:
        raise ValueError("window_radius must be at least 1")
    ea = local_energy(pair.a, window_radius)
    eb = local_energy(pair.b, window_radius)
    return np.where(ea >= eb, pair.a, pair.b)


def _check_levels(pair, levels):
    top = max_pyramid_levels(pair.shape)
    if not 2 <= levels <= top:
        raise TooManyLevels(f"levels must lie in [2, {top}] for a {pair.shape} image, got {levels}")


def fuse_laplacian_pyramid(pair, levels=4):
    """Max-absolute band-pass selection with an averaged base level."""
    _check_levels(pair, levels)
    la = laplacian_pyramid(pair.a, levels)
    lb = laplacian_pyramid(pair.b, levels)
    fused = [np.where(np.abs(ba) >= np.abs(bb), ba, bb) for ba, bb in zip(la[:-1], lb[:-1])]
    fused.append(0.5 * (la[-1] + lb[-1]))
    return np.clip(collapse_laplacian(fused), 0.0, 1.0)


def ratio_pyramid(img, levels):
    """Ratios ``(G_k + eps) / (expand(G_{k+1}) + eps)`` plus the base level."""
    g = gaussian_pyramid(img, levels)
    ratios = []
    for k in range(levels - 1):
        up = upsample2(g[k + 1], g[k].shape[1], g[k].shape[0])
        ratios.append((g[k] + RATIO_EPS) / (up + RATIO_EPS))
    ratios.append(g[-1])
    return ratios


def collapse_ratio(levels):
    out = levels[-1]
    for ratio in reversed(levels[:-1]):
        up = upsample2(out, ratio.shape[1], ratio.shape[0])
        out = ratio * (up + RATIO_EPS) - RATIO_EPS
    return out


def fuse_ratio_pyramid(pair, levels=4):
    """Keep the ratio deviating most from 1 at each band; average the base."""
    _check_levels(pair, levels)
    ra = ratio_pyramid(pair.a, levels)
    rb = ratio_pyramid(pair.b, levels)
    fused = [np.where(np.abs(a - 1.0) >= np.abs(b - 1.0), a, b)
             for a, b in zip(ra[:-1], rb[:-1])]
    fused.append(0.5 * (ra[-1] + rb[-1]))
    return np.clip(collapse_ratio(fused), 0.0, 1.0)


def saliency_weights(pair, base_radius=15, detail_radius=3):
    """Detail weight maps ``(w_a, w_b)`` from mean-filter saliency; they sum to 1."""
    sal_a = np.abs(box_filter(pair.a, detail_radius) - box_filter(pair.a, base_radius))
    sal_b = np.abs(box_filter(pair.b, detail_radius) - box_filter(pair.b, base_radius))
    w_a = sal_a / (sal_a + sal_b + SALIENCY_EPS)
    return w_a, 1.0 - w_a


def fuse_two_scale_saliency(pair, base_radius=15, detail_radius=3):
    base_a = box_filter(pair.a, base_radius)
    base_b = box_filter(pair.b, base_radius)
    w_a, w_b = saliency_weights(pair, base_radius, detail_radius)
    fused = 0.5 * (base_a + base_b) + w_a * (pair.a - base_a) + w_b * (pair.b - base_b)
    return np.clip(fused, 0.0, 1.0)


# ---------------------------------------------------------------- registry

@dataclass(frozen=True, order=True)
class FusionMethodId:
    name: str
    version: int = 1

    def __str__(self):
        return self.name


ALL_TASKS = frozenset(Task)

# name -> (operator, parameter defaults, task tags)
CATALOG = {
    "avg": (fuse_average, {"weight": 0.5}, ALL_TASKS),
    "maxsel": (fuse_max_energy, {"window_radius": 1},
               frozenset({Task.MultiFocus, Task.InfraredVisible, Task.Medical, Task.CVS})),
    "lp": (fuse_laplacian_pyramid, {"levels": 4},
           frozenset({Task.MultiFocus, Task.MultiExposure, Task.InfraredVisible, Task.Medical})),
    "rp": (fuse_ratio_pyramid, {"levels": 4},
           frozenset({Task.MultiExposure, Task.InfraredVisible, Task.CVS})),
    "tsal": (fuse_two_scale_saliency, {"base_radius": 15, "detail_radius": 3},
             frozenset({Task.InfraredVisible, Task.MultiExposure, Task.Medical, Task.CVS})),
}
DEFAULT_METHODS = ("avg", "maxsel", "lp", "rp", "tsal")


@dataclass(frozen=True)
class RegisteredMethod:
    id: FusionMethodId
    fn: object
    tasks: frozenset = ALL_TASKS
    params: dict = field(default_factory=dict)

    def __call__(self, pair):
        return self.fn(pair)


class MethodRegistry:
    """Ordered, duplicate-free collection of fusion methods."""

    def __init__(self, methods=()):
        self._methods = []
        for m in methods:
            self._add(m)

    def _add(self, method):
        if method.id.name in self.names:
            raise ValueError(f"duplicate method name {method.id.name!r}")
        self._methods.append(method)

    def register(self, name, fn, tasks=ALL_TASKS, version=1, params=None):
        """Return a new registry with ``fn`` appended."""
        new = MethodRegistry(self._methods)
        new._add(RegisteredMethod(FusionMethodId(name, version), fn, frozenset(tasks),
                                  dict(params or {})))
        return new

    @classmethod
    def from_catalog(cls, names=DEFAULT_METHODS, params=None):
        """Build a registry from catalog names with optional parameter overrides."""
        params = params or {}
        reg = cls()
        for name in names:
            reg = reg.register(name, *catalog_method(name, params.get(name))[1:])
        return reg

    @property
    def names(self):
        return [m.id.name for m in self._methods]

    def __iter__(self):
        return iter(self._methods)

    def __len__(self):
        return len(self._methods)

    def __getitem__(self, name):
        for m in self._methods:
            if m.id.name == name:
                return m
        raise KeyError(name)

    def __contains__(self, name):
        return name in self.names


def catalog_method(name, overrides=None):
    """``(name, fn, tasks, version, params)`` for a catalog operator."""
    try:
        fn, defaults, tasks = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown fusion method {name!r}; known: {sorted(CATALOG)}") from None
    params = dict(defaults)
    for key, value in (overrides or {}).items():
        if key not in defaults:
            raise KeyError(f"method {name!r} has no parameter {key!r}")
        params[key] = type(defaults[key])(value)
    return name, partial(fn, **params), tasks, 1, params


def default_registry():
    return MethodRegistry.from_catalog()


def registry_fuse_all(reg, pair):
    """Run every method applicable to ``pair.task``, in registration order."""
    if len(reg) == 0:
        raise NoApplicableMethod("registry is empty")
    chosen = [m for m in reg if pair.task is Task.Unknown or pair.task in m.tasks]
    if not chosen:
        raise NoApplicableMethod(
            f"no registered method handles task {pair.task.value} (pair {pair.id!r})")
    return [(m.id, m(pair)) for m in chosen]
