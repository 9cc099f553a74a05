"""Monte Carlo estimate of Pr[sum w_i X_i - mu > eps * mu] for Bernoulli(p) X_i."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from ..errors import InvalidParameter

_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class MonteCarloEstimate:
    successes: int
    trials: int
    low: float
    high: float
    gamma: float  # smallest gamma with max w <= gamma * sum(w) / (eps * m)

    @property
    def estimate(self) -> float:
        return self.successes / self.trials


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def anticoncentration_mc(m: int, p: float, eps: float, weights=None, trials: int = 10**6, seed=0):
    if trials < 1:
        raise InvalidParameter("trials must be >= 1")
    if not 0 < p <= 0.25:
        raise InvalidParameter(f"p must lie in (0, 1/4], got {p}")
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (m,) or np.any(w <= 0):
        raise InvalidParameter("need m positive weights")
    total = w.sum()
    mu = p * total
    gamma = float(w.max() * eps * m / total) if eps > 0 else math.inf

    rng = np.random.default_rng(seed)
    step = max(1, _CHUNK_ELEMENTS // m)
    hits = 0
    for start in range(0, trials, step):
        rows = min(step, trials - start)
        X = rng.random((rows, m)) < p
        hits += int(np.count_nonzero(X @ w - mu > eps * mu))
    low, high = wilson_interval(hits, trials)
    return MonteCarloEstimate(hits, trials, low, high, gamma)


def fitted_rate(probability: float, eps: float, m: int, p: float) -> float:
    """c such that probability = exp(-c * eps^2 * m * p)."""
    if probability <= 0:
        return math.inf
    return -math.log(probability) / (eps * eps * m * p)
