"""Ring decomposition of the reference clusters and bucketing of rings into groups.

Every point ends up with exactly one label:

* ``proxied``   inner-ring points, zero-cost points and points of min buckets;
                represented in the coreset by their cluster center
* ``main``      ring j of some cluster, bucket b  (0 < b < z*log2(4z/eps))
* ``main-max``  ring j, any bucket b >= z*log2(4z/eps)
* ``outer``     outer ring of a cluster, bucket b
* ``outer-max`` outer ring of a cluster, bucket b >= z*log2(4z/eps)

Dyadic bands are half-open, [2^j, 2^(j+1)), so boundaries land in one ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameter
from .metric import PowerParams, weighted_sum
from .seeding import Clustering

INNER, MAIN, OUTER = 0, 1, 2
_NO_RING = np.iinfo(np.int64).min


def dyadic_floor(x: np.ndarray) -> np.ndarray:
    """floor(log2(x)) for positive x, exact at powers of two."""
    _, e = np.frexp(np.asarray(x, dtype=np.float64))
    return e.astype(np.int64) - 1


class GroupKey(NamedTuple):
    kind: str
    ring: int | None = None
    bucket: int | None = None

    def __str__(self):
        if self.kind == "main":
            return f"main[j={self.ring},b={self.bucket}]"
        if self.kind == "main-max":
            return f"main-max[j={self.ring}]"
        if self.kind == "outer":
            return f"outer[b={self.bucket}]"
        return self.kind

    @property
    def is_outer(self) -> bool:
        return self.kind in ("outer", "outer-max")

    @classmethod
    def parse(cls, text: str) -> "GroupKey":
        if "[" not in text:
            return cls(text)
        kind, rest = text.rstrip("]").split("[", 1)
        fields = dict(part.split("=") for part in rest.split(","))
        ring = int(fields["j"]) if "j" in fields else None
        bucket = int(fields["b"]) if "b" in fields else None
        return cls(kind, ring, bucket)


@dataclass(frozen=True, eq=False)
class RingInfo:
    kind: np.ndarray  # INNER / MAIN / OUTER per point
    ring: np.ndarray  # j per point, _NO_RING where cost(p, A) = 0


def ring_decompose(clu: Clustering, params: PowerParams) -> RingInfo:
    """Classify each point as inner / main / outer and give its dyadic ring index."""
    z, eps = params.z, params.epsilon
    cost = clu.point_cost
    delta = clu.delta[clu.assignment]

    ring = np.full(cost.shape, _NO_RING, dtype=np.int64)
    pos = cost > 0
    ring[pos] = dyadic_floor(cost[pos] / delta[pos])

    kind = np.full(cost.shape, MAIN, dtype=np.int8)
    kind[cost <= (eps / z) ** z * delta] = INNER
    kind[cost > (z / eps) ** (2 * z) * delta] = OUTER
    kind[~pos] = INNER
    return RingInfo(kind, ring)


def max_bucket_threshold(params: PowerParams) -> float:
    """Buckets b >= z*log2(4z/eps) are merged into the max group."""
    return params.z * math.log2(4 * params.z / params.epsilon)


def bucket_scale(params: PowerParams) -> float:
    return (params.epsilon / (4 * params.z)) ** params.z


@dataclass(frozen=True, eq=False)
class GroupCatalog:
    """Partition of P into proxied points and sampled groups."""

    params: PowerParams
    keys: list  # per point: GroupKey or None (proxied)
    groups: dict  # GroupKey -> sorted member indices
    group_cost: dict  # GroupKey -> cost(G, A)
    group_mass: dict  # GroupKey -> total multiplicity of G
    ring_index: np.ndarray
    ring_kind: np.ndarray
    proxied: np.ndarray  # bool mask

    @property
    def n(self) -> int:
        return self.proxied.shape[0]

    def label(self, p: int) -> str:
        key = self.keys[p]
        return "proxied" if key is None else str(key)

    def outer_groups(self):
        return [g for g in self.groups if g.is_outer]

    def to_json(self) -> dict:
        return {
            "epsilon": self.params.epsilon,
            "z": self.params.z,
            "n_points": int(self.n),
            "n_proxied": int(self.proxied.sum()),
            "groups": [
                {
                    "id": str(g),
                    "kind": g.kind,
                    "ring": g.ring,
                    "bucket": g.bucket,
                    "size": int(idx.size),
                    "mass": float(self.group_mass[g]),
                    "cost": self.group_cost[g],
                }
                for g, idx in self.groups.items()
            ],
        }


def _bucket_labels(ring_costs: np.ndarray, level_cost: float, k: int, params: PowerParams):
    """Bucket b per ring and whether it is min / max."""
    ratio = ring_costs * k / (bucket_scale(params) * level_cost)
    b = dyadic_floor(ratio)
    return b, b <= 0, b >= max_bucket_threshold(params)


def build_groups(clu: Clustering, rings: RingInfo, params: PowerParams) -> GroupCatalog:
    """Bucket main rings per ring level and outer rings per cluster."""
    n = clu.point_cost.shape[0]
    if rings.kind.shape[0] != n:
        raise InvalidParameter("ring classification and clustering disagree on the point count")
    mult = clu.multiplicity.astype(np.float64)
    k = clu.k
    assign = clu.assignment
    keys: list = [None] * n

    main = np.flatnonzero(rings.kind == MAIN)
    for j in np.unique(rings.ring[main]):
        in_j = main[rings.ring[main] == j]
        clusters = np.unique(assign[in_j])
        members = [in_j[assign[in_j] == i] for i in clusters]
        costs = np.array([weighted_sum(mult[m], clu.point_cost[m]) for m in members])
        level = math.fsum(costs.tolist())
        b, is_min, is_max = _bucket_labels(costs, level, k, params)
        for m, bb, lo, hi in zip(members, b, is_min, is_max):
            if lo:
                continue
            key = GroupKey("main-max", int(j)) if hi else GroupKey("main", int(j), int(bb))
            for p in m:
                keys[p] = key

    outer = np.flatnonzero(rings.kind == OUTER)
    if outer.size:
        clusters = np.unique(assign[outer])
        members = [outer[assign[outer] == i] for i in clusters]
        costs = np.array([weighted_sum(mult[m], clu.point_cost[m]) for m in members])
        level = math.fsum(costs.tolist())
        b, is_min, is_max = _bucket_labels(costs, level, k, params)
        for m, bb, lo, hi in zip(members, b, is_min, is_max):
            if lo:
                continue
            key = GroupKey("outer-max") if hi else GroupKey("outer", bucket=int(bb))
            for p in m:
                keys[p] = key

    groups: dict = {}
    for p, key in enumerate(keys):
        if key is not None:
            groups.setdefault(key, []).append(p)
    ordered = sorted(groups, key=_group_order)
    groups = {g: np.asarray(groups[g], dtype=np.int64) for g in ordered}
    group_cost = {g: weighted_sum(mult[idx], clu.point_cost[idx]) for g, idx in groups.items()}
    group_mass = {g: math.fsum(mult[idx].tolist()) for g, idx in groups.items()}
    proxied = np.array([key is None for key in keys], dtype=bool)
    return GroupCatalog(params, keys, groups, group_cost, group_mass, rings.ring, rings.kind, proxied)


def _group_order(g: GroupKey):
    kinds = {"main": 0, "main-max": 0, "outer": 1, "outer-max": 1}
    ring = g.ring if g.ring is not None else 0
    bucket = g.bucket if g.bucket is not None else 10**9
    return (kinds[g.kind], ring, bucket)


def partition(clu: Clustering, params: PowerParams) -> GroupCatalog:
    return build_groups(clu, ring_decompose(clu, params), params)


def outer_support(cat: GroupCatalog, clu: Clustering, G: GroupKey) -> np.ndarray:
    """All points of the clusters whose outer ring meets G, as sorted indices."""
    if not isinstance(G, GroupKey) or not G.is_outer:
        raise InvalidParameter(f"{G} is not an outer group", code="not_outer_group")
    members = cat.groups.get(G, np.empty(0, dtype=np.int64))
    clusters = np.unique(clu.assignment[members])
    return np.flatnonzero(np.isin(clu.assignment, clusters))
