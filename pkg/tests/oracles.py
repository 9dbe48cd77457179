"""Independent brute-force reference computations used by the tests."""

import itertools

import numpy as np


def all_3x3_images(levels=4):
    """Every 3x3 image over ``levels`` evenly spaced gray levels, as codes."""
    return np.array(list(itertools.product(range(levels), repeat=9)), dtype=np.int64)


def entropy_table(codes, levels):
    """Row-wise entropy in bits from explicit probability tables."""
    counts = (codes[:, :, None] == np.arange(levels)).sum(axis=1)
    p = counts / codes.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(p), 0.0)
    return terms.sum(axis=1)


def mutual_information_table(ca, cb, levels):
    joint = ca * levels + cb
    return (entropy_table(ca, levels) + entropy_table(cb, levels)
            - entropy_table(joint, levels * levels))


def codes_to_images(codes, levels=4):
    """Stack of 3x3 images in ``[0, 1]`` for rows of level codes."""
    step = 255 // (levels - 1)
    return (codes.reshape(-1, 3, 3) * step) / 255.0


def central_difference(f, x, h):
    """Gradient of scalar ``f`` at vector ``x`` by central differences."""
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g
