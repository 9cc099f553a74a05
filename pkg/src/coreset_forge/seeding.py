"""Reference solution A: D^z seeding, single-swap local search, cluster statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, InvalidParameter
from .metric import PointSet, Solution, assign, check_power, powered, weighted_sum

# Swaps must improve the cost by more than this fraction to be accepted.
SWAP_TOLERANCE = 1e-6


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def dz_seed_weighted(coords, weights, k, z, seed) -> Solution:
    """D^z seeding on a weighted point array (weights may be real).

    First center drawn proportionally to weight, every further one proportionally
    to weight * current cost. Centers are always input points.
    """
    z = check_power(z)
    X = np.asarray(coords, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if k < 1:
        raise InvalidParameter(f"k must be >= 1, got {k}")
    if k > X.shape[0]:
        raise InvalidParameter(f"k={k} exceeds the {X.shape[0]} input points", code="k_too_large")
    rng = _rng(seed)

    chosen = [int(rng.choice(X.shape[0], p=w / w.sum()))]
    cur = powered(cdist(X, X[chosen[0]][None, :], "sqeuclidean")[:, 0], z)
    for _ in range(1, k):
        mass = w * cur
        total = mass.sum()
        # zero remaining mass means every distinct point is already a center
        if not total > 0:
            distinct = np.unique(X, axis=0).shape[0]
            raise InvalidParameter(f"k={k} exceeds the {distinct} distinct points", code="k_too_large")
        nxt = int(rng.choice(X.shape[0], p=mass / total))
        chosen.append(nxt)
        cur = np.minimum(cur, powered(cdist(X, X[nxt][None, :], "sqeuclidean")[:, 0], z))
    return Solution(X[chosen])


def dz_seed(P: PointSet, k: int, z: int, seed) -> Solution:
    """k centers from P by D^z sampling, deterministic in ``seed``."""
    return dz_seed_weighted(P.coords, P.multiplicity, k, z, seed)


def _two_nearest(X, C, z):
    """Per point: powered distance to nearest and second-nearest center, nearest index."""
    D = powered(cdist(X, C, "sqeuclidean"), z)
    if C.shape[0] == 1:
        return D[:, 0], np.full(X.shape[0], np.inf), np.zeros(X.shape[0], dtype=np.int64)
    order = np.argsort(D, axis=1, kind="stable")[:, :2]
    rows = np.arange(X.shape[0])
    return D[rows, order[:, 0]], D[rows, order[:, 1]], order[:, 0]


def local_search_refine(
    P: PointSet,
    S: Solution,
    z: int,
    max_swaps: int,
    *,
    n_candidates: int | None = 64,
    seed=0,
) -> Solution:
    """Single-swap local search with candidate centers drawn from P.

    Each sweep scores every (center, candidate) swap and applies the best one if
    it improves the cost by more than ``SWAP_TOLERANCE`` relative. Stops when a
    sweep finds nothing or after ``max_swaps`` sweeps. When P has more than
    ``n_candidates`` distinct points a D^z-weighted candidate subset is used.
    """
    z = check_power(z)
    if S.d != P.d:
        raise DimensionMismatch(f"solution dimension {S.d} != point dimension {P.d}")
    if max_swaps <= 0:
        return S

    X = P.coords
    w = P.multiplicity.astype(np.float64)
    C = np.array(S.centers)
    near, second, idx = _two_nearest(X, C, z)
    current = weighted_sum(w, near)

    _, first = np.unique(X, axis=0, return_index=True)
    candidates = np.sort(first)
    if n_candidates is not None and candidates.size > n_candidates:
        rng = _rng(seed)
        mass = w[candidates] * near[candidates]
        if mass.sum() > 0:
            probs = mass / mass.sum()
            npos = int(np.count_nonzero(probs))
            candidates = rng.choice(candidates, size=min(n_candidates, npos), replace=False, p=probs)
        else:
            candidates = rng.choice(candidates, size=n_candidates, replace=False)

    for _ in range(max_swaps):
        best = (current, None, None)
        for c in candidates:
            dc = powered(cdist(X, X[c][None, :], "sqeuclidean")[:, 0], z)
            base = np.minimum(near, dc)
            # without center i, points assigned to i fall back to min(second, candidate)
            fix = np.bincount(idx, weights=w * (np.minimum(second, dc) - base), minlength=C.shape[0])
            vals = w @ base + fix
            i = int(np.argmin(vals))
            if vals[i] < best[0]:
                best = (vals[i], i, c)
        _, i, c = best
        if i is None:
            break
        trial = C.copy()
        trial[i] = X[c]
        t_near, t_second, t_idx = _two_nearest(X, trial, z)
        val = weighted_sum(w, t_near)
        if not val < current * (1.0 - SWAP_TOLERANCE):
            break
        C = trial
        near, second, idx, current = t_near, t_second, t_idx, val
    return Solution(C)


@dataclass(frozen=True, eq=False)
class Clustering:
    """Reference solution with its induced clusters C_i.

    ``point_cost`` is cost(p, A) per point (multiplicity-free); ``delta`` is the
    average cost cost(C_i, A) / |C_i| (0 for empty clusters).
    """

    solution: Solution
    z: int
    assignment: np.ndarray
    point_cost: np.ndarray
    cluster_size: np.ndarray
    cluster_cost: np.ndarray
    delta: np.ndarray
    multiplicity: np.ndarray

    @property
    def k(self) -> int:
        return self.solution.k

    @property
    def total_cost(self) -> float:
        return math.fsum(self.cluster_cost.tolist())

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == i)


def build_clustering(P: PointSet, S: Solution, z: int) -> Clustering:
    z = check_power(z)
    index, cost = assign(P, S, z)
    k = S.k
    mult = P.multiplicity
    sizes = np.bincount(index, weights=mult, minlength=k)
    if not P.real_weights:
        sizes = sizes.astype(np.int64)
    costs = np.array([weighted_sum(mult[index == i], cost[index == i]) for i in range(k)])
    delta = np.divide(costs, sizes, out=np.zeros(k), where=sizes > 0)
    return Clustering(S, z, index, cost, sizes, costs, delta, mult)


def reference_solution(
    P: PointSet, k: int, z: int, seed, *, swaps: int = 8, n_candidates: int | None = 32
) -> Solution:
    """D^z seeding followed by local search: the constant-factor A used for sampling."""
    ss = np.random.SeedSequence(seed)
    seed_a, seed_b = ss.spawn(2)
    S = dz_seed(P, k, z, np.random.default_rng(seed_a))
    return local_search_refine(P, S, z, swaps, n_candidates=n_candidates, seed=np.random.default_rng(seed_b))
