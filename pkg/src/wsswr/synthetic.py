"""Seeded random two-class problems for tests, demos and benchmarks."""

from __future__ import annotations

import numpy as np

from .data import Dataset, SparseVector


def from_arrays(X, y, name: str = "") -> Dataset:
    """Dataset from a dense (l, n) array and +1/-1 labels."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return Dataset([SparseVector.from_dense(row) for row in X], y, X.shape[1], name=name)


def _labels(rng, l: int) -> np.ndarray:
    y = np.where(rng.random(l) < 0.5, 1.0, -1.0)
    # both classes always present
    y[0], y[1] = 1.0, -1.0
    return y


def uniform_problem(l: int, n_features: int, seed: int, name: str = "") -> Dataset:
    """Features uniform in [-1, 1] with random labels (hard, many support vectors)."""
    rng = np.random.default_rng(seed)
    return from_arrays(rng.uniform(-1, 1, (l, n_features)), _labels(rng, l), name)


def gaussian_blobs(l: int, n_features: int, seed: int, separation: float = 1.0,
                   name: str = "") -> Dataset:
    """Two overlapping Gaussian classes, scaled to [-1, 1] per feature."""
    rng = np.random.default_rng(seed)
    y = _labels(rng, l)
    X = rng.normal(size=(l, n_features)) + 0.5 * separation * y[:, None]
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return from_arrays(2 * (X - lo) / span - 1, y, name)


def sparse_binary(l: int, n_features: int, density: float, seed: int, name: str = "") -> Dataset:
    """0/1 features with a noisy linear rule, loosely like text or census indicators."""
    rng = np.random.default_rng(seed)
    X = (rng.random((l, n_features)) < density).astype(float)
    w = rng.normal(size=n_features)
    score = X @ w + 0.5 * rng.normal(size=l)
    y = np.where(score > np.median(score), 1.0, -1.0)
    if np.all(y == y[0]):
        y = _labels(rng, l)
    return from_arrays(X, y, name)
