"""Gaussian random projection used to reduce the ambient dimension before sampling.

This is a Johnson-Lindenstrauss map, not a terminal embedding: it only controls
distances between points that exist when the map is drawn. The pipeline therefore
creates every center (reference solution, audit suites) after projecting, so all
costs are measured inside the projected space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParameter
from .metric import PointSet, Solution

# Target dimension constant in m = ceil(C * eps^-2 * ln(distinct points)).
TARGET_DIM_CONSTANT = 8.0


class IdentityProjectionWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ProjectionMap:
    d: int
    m: int
    seed: int
    matrix: np.ndarray | None  # m x d, None when the map is the identity

    @property
    def identity(self) -> bool:
        return self.matrix is None

    @property
    def out_dim(self) -> int:
        return self.d if self.identity else self.m

    def to_dict(self) -> dict:
        return {"d": self.d, "m": self.m, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectionMap":
        return make_projection(int(data["d"]), int(data["m"]), int(data["seed"]), warn=False)


def make_projection(d: int, m: int, seed: int, *, warn: bool = True) -> ProjectionMap:
    """m x d matrix of i.i.d. N(0, 1) entries scaled by 1/sqrt(m); identity if m >= d."""
    if m < 1 or d < 1:
        raise InvalidParameter(f"projection dimensions must be positive, got d={d}, m={m}")
    if m >= d:
        if warn:
            warnings.warn(f"target dimension {m} >= input dimension {d}; using identity", IdentityProjectionWarning)
        return ProjectionMap(d, m, seed, None)
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((m, d)) / math.sqrt(m)
    matrix.setflags(write=False)
    return ProjectionMap(d, m, seed, matrix)


def apply(pmap: ProjectionMap, x):
    """Image of a PointSet, Solution or raw array under the map."""
    if isinstance(x, PointSet):
        return PointSet(apply(pmap, x.coords), x.multiplicity, x.real_weights)
    if isinstance(x, Solution):
        return Solution(apply(pmap, x.centers), x.label)
    X = np.asarray(x, dtype=np.float64)
    if X.shape[-1] != pmap.d:
        raise DimensionMismatch(f"input dimension {X.shape[-1]} != map dimension {pmap.d}")
    if pmap.identity:
        return X.copy()
    return X @ pmap.matrix.T


def default_target_dim(eps: float, n_distinct: int, d: int) -> int:
    m = math.ceil(TARGET_DIM_CONSTANT * eps**-2 * math.log(max(n_distinct, 2)))
    return min(m, d)
