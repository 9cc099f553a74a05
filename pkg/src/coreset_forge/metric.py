"""Point storage, Euclidean (k, z) costs and the power triangle inequality."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, InvalidParameter

# Rows per block when materialising point-to-center distances.
_CHUNK_ELEMENTS = 1 << 22


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointSet:
    """An n x d instance with positive multiplicities.

    Multiplicities are integers. ``real_weights=True`` relaxes this to positive
    reals; such sets are only meant as input to :func:`~coreset_forge.sampler.preprocess`,
    which rounds them back to integers.
    """

    coords: np.ndarray
    multiplicity: np.ndarray = None
    real_weights: bool = False

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[None, :]
        if coords.ndim != 2 or coords.shape[0] < 1 or coords.shape[1] < 1:
            raise InvalidParameter(f"coords must be a non-empty n x d matrix, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise InvalidParameter("coordinates must be finite", code="non_finite")

        if self.multiplicity is None:
            mult = np.ones(coords.shape[0], dtype=np.int64)
        else:
            raw = np.asarray(self.multiplicity)
            if raw.shape != (coords.shape[0],):
                raise DimensionMismatch(
                    f"{raw.shape[0] if raw.ndim else 0} multiplicities for {coords.shape[0]} points"
                )
            if self.real_weights:
                mult = raw.astype(np.float64)
                if not np.all(np.isfinite(mult)) or np.any(mult <= 0):
                    raise InvalidParameter("weights must be finite and positive", code="bad_weight")
            else:
                if raw.dtype.kind == "f":
                    if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                        raise InvalidParameter(
                            "multiplicities must be integers (use real_weights=True for weighted input)",
                            code="non_integer_multiplicity",
                        )
                mult = raw.astype(np.int64)
                if np.any(mult < 1):
                    raise InvalidParameter("multiplicities must be >= 1", code="bad_multiplicity")

        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "multiplicity", _frozen(mult))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def total_mass(self):
        """N = sum of multiplicities (an int unless weights are real)."""
        if self.real_weights:
            return math.fsum(self.multiplicity.tolist())
        return int(self.multiplicity.sum())

    def distinct_count(self) -> int:
        return int(np.unique(self.coords, axis=0).shape[0])

    def subset(self, index) -> "PointSet":
        index = np.asarray(index)
        return PointSet(self.coords[index], self.multiplicity[index], self.real_weights)

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return (
            self.real_weights == other.real_weights
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.multiplicity, other.multiplicity)
        )

    __hash__ = None

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class Solution:
    """k candidate centers."""

    centers: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim == 1:
            centers = centers[None, :]
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise InvalidParameter(f"a solution needs at least one center, got shape {centers.shape}")
        if not np.all(np.isfinite(centers)):
            raise InvalidParameter("center coordinates must be finite", code="non_finite")
        object.__setattr__(self, "centers", _frozen(centers))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Solution):
            return NotImplemented
        return np.array_equal(self.centers, other.centers)

    __hash__ = None


def check_power(z) -> int:
    if int(z) != z or z < 1:
        raise InvalidParameter(f"z must be a positive integer, got {z!r}")
    return int(z)


@dataclass(frozen=True)
class PowerParams:
    z: int
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "z", check_power(self.z))
        eps = float(self.epsilon)
        if not 0.0 < eps < 0.5:
            raise InvalidParameter(f"epsilon must lie in (0, 1/2), got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, PointSet):
        return x.coords
    if isinstance(x, Solution):
        return x.centers
    a = np.asarray(x, dtype=np.float64)
    return a[None, :] if a.ndim == 1 else a


def powered(sq_dist: np.ndarray, z: int) -> np.ndarray:
    """Raise squared distances to dist**z.

    Even z stays in squared form; odd z goes through a square root first.
    """
    if z % 2 == 0:
        return sq_dist if z == 2 else sq_dist ** (z // 2)
    d = np.sqrt(sq_dist)
    return d if z == 1 else d**z


def nearest(points, centers, z: int):
    """Index of the nearest center (lowest index on ties) and the powered distance."""
    z = check_power(z)
    X = _as_matrix(points)
    C = _as_matrix(centers)
    if X.shape[1] != C.shape[1]:
        raise DimensionMismatch(f"points have dimension {X.shape[1]}, centers {C.shape[1]}")
    n = X.shape[0]
    index = np.empty(n, dtype=np.int64)
    sq = np.empty(n, dtype=np.float64)
    step = max(1, _CHUNK_ELEMENTS // max(1, C.shape[0]))
    for start in range(0, n, step):
        block = cdist(X[start : start + step], C, "sqeuclidean")
        # argmin returns the first minimum, which is the lowest-index tie rule.
        idx = np.argmin(block, axis=1)
        index[start : start + step] = idx
        sq[start : start + step] = block[np.arange(block.shape[0]), idx]
    return index, powered(sq, z)


def point_cost(p, S, z: int) -> float:
    """min over centers of dist(p, s)**z."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise DimensionMismatch("point_cost expects a single point")
    _, cost = nearest(p[None, :], S, z)
    return float(cost[0])


def assign(P, S, z: int):
    """Return (nearest-center index per point, per-point cost vector)."""
    return nearest(P, S, z)


def cost_vector(P, S, z: int) -> np.ndarray:
    return nearest(P, S, z)[1]


def weighted_sum(weights, values) -> float:
    """Correctly rounded sum of weights * values (independent of summation order)."""
    prod = np.asarray(weights, dtype=np.float64) * np.asarray(values, dtype=np.float64)
    return math.fsum(prod.tolist())


def total_cost(P: PointSet, S, z: int) -> float:
    """cost(P, S) = sum_p multiplicity[p] * min_s dist(p, s)**z."""
    return weighted_sum(P.multiplicity, cost_vector(P, S, z))


def power_triangle_bound(a_cost: float, c_cost: float, z: int, eps: float) -> float:
    """Upper bound on d(a,b)**z from d(a,c)**z and d(b,c)**z.

    (1+eps)**(z-1) * d(a,c)**z + ((1+eps)/eps)**(z-1) * d(b,c)**z
    """
    z = check_power(z)
    if not eps > 0:
        raise InvalidParameter(f"eps must be positive, got {eps!r}")
    return (1.0 + eps) ** (z - 1) * a_cost + ((1.0 + eps) / eps) ** (z - 1) * c_cost
