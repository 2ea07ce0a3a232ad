"""Bundled synthetic datasets for benchmarks and tests.

Four families, all seeded and sized for desk-scale runs: a linear-Gaussian
factor model, a sinusoidal manifold, a noisy rank-one matrix, and a mixed
continuous/binary table. The sine and mixed families carry genuinely
nonlinear feature couplings; the other two are linear.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, FeatureSchema
from .errors import ConfigError

NONLINEAR = ("sine", "mixed")


def linear_gaussian(n=1000, k=8, latent=3, noise=0.05, seed=0):
    """Features are linear mixes of a few Gaussian factors plus small noise."""
    rng = np.random.default_rng(seed)
    mixing = rng.normal(size=(latent, k))
    factors = rng.normal(size=(n, latent))
    values = factors @ mixing + noise * rng.normal(size=(n, k))
    return Dataset(values, [FeatureSchema(f"lg{j}") for j in range(k)])


def sine(n=500, noise=0.02, seed=0):
    """One driving coordinate and three smooth functions of it."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=n)
    cols = [
        x,
        np.sin(3.0 * x) + noise * rng.normal(size=n),
        np.cos(2.0 * x) + noise * rng.normal(size=n),
        x**2 + noise * rng.normal(size=n),
    ]
    names = ["t", "sin3t", "cos2t", "tsq"]
    return Dataset(np.column_stack(cols), [FeatureSchema(name) for name in names])


def rank_one(n=400, k=6, noise=0.01, seed=0):
    """Noisy outer product u v^T; ideal terrain for low-rank methods."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.5, 1.5, size=n)
    v = rng.uniform(-1.0, 1.0, size=k)
    values = np.outer(u, v) + noise * rng.normal(size=(n, k))
    return Dataset(values, [FeatureSchema(f"r{j}") for j in range(k)])


def mixed(n=500, noise=0.05, seed=0):
    """Correlated continuous columns plus binary columns thresholded on them."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = 0.8 * x1 + noise * rng.normal(size=n)
    x3 = np.tanh(1.5 * x1) + noise * rng.normal(size=n)
    b1 = (x1 > 0).astype(float)
    b2 = (x1 + x2 > 0.5).astype(float)
    values = np.column_stack([x1, x2, x3, b1, b2])
    schema = [
        FeatureSchema("x1"),
        FeatureSchema("x2"),
        FeatureSchema("x3"),
        FeatureSchema("b1", "binary"),
        FeatureSchema("b2", "binary"),
    ]
    return Dataset(values, schema)


GENERATORS = {
    "linear": linear_gaussian,
    "sine": sine,
    "rank1": rank_one,
    "mixed": mixed,
}

SUITE = tuple(GENERATORS)


def make(name, seed=0, **kwargs):
    """Build a bundled dataset by name."""
    if name not in GENERATORS:
        raise ConfigError(f"unknown synthetic dataset {name!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[name](seed=seed, **kwargs)
