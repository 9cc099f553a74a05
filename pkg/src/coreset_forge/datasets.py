"""Synthetic clustered instances."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameter
from .metric import PointSet


def planted_centers(k: int, d: int, separation: float, rng) -> np.ndarray:
    """k centers with pairwise distance >= separation, drawn uniformly from a box."""
    side = 2.0 * separation * max(1.0, k ** (1.0 / d))
    centers = []
    for _ in range(10_000 * k):
        c = rng.uniform(0.0, side, d)
        if all(np.linalg.norm(c - o) >= separation for o in centers):
            centers.append(c)
            if len(centers) == k:
                return np.array(centers)
    raise InvalidParameter("could not place centers at the requested separation")


def cluster_sizes(n: int, k: int, imbalance: float = 0.0) -> np.ndarray:
    """Sizes proportional to exp(-imbalance * i), summing to n, each at least 1."""
    if n < k:
        raise InvalidParameter(f"need n >= k, got n={n}, k={k}")
    share = np.exp(-imbalance * np.arange(k))
    sizes = np.maximum(1, np.floor(n * share / share.sum()).astype(np.int64))
    sizes[0] += n - sizes.sum()
    return sizes


def gaussian_mixture(
    n: int, d: int, k: int, *, separation: float = 20.0, std: float = 1.0, imbalance: float = 0.0, seed=0
):
    """Isotropic Gaussian blobs. Returns (PointSet, planted centers, labels)."""
    rng = np.random.default_rng(seed)
    centers = planted_centers(k, d, separation, rng)
    sizes = cluster_sizes(n, k, imbalance)
    labels = np.repeat(np.arange(k), sizes)
    X = centers[labels] + std * rng.standard_normal((n, d))
    return PointSet(X), centers, labels


def describe_mixture(n, d, k, separation, std, imbalance, seed) -> dict:
    return {
        "kind": "gmm",
        "n": n,
        "d": d,
        "k": k,
        "separation": separation,
        "std": std,
        "imbalance": imbalance,
        "seed": seed,
        "smallest_cluster": int(cluster_sizes(n, k, imbalance).min()),
    }
