"""Group-wise sensitivity sampling and coreset assembly.

Every sampled group G draws delta points with replacement, point p with
probability mult[p] * cost(p, A) / cost(G, A), and gives each draw the weight
cost(G, A) / (delta * cost(p, A)). Proxied points are represented by the center
of their cluster, weighted by the proxied mass of that cluster. The offset is
always zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGroupError, InvalidParameter
from .metric import PointSet, PowerParams, weighted_sum
from .partition import GroupCatalog, GroupKey, partition
from .projection import ProjectionMap, apply, make_projection
from .randomness import derived_int, substream
from .seeding import Clustering, build_clustering, dz_seed, reference_solution

# Multiplicities above this lose integer precision once mixed with float weights.
_MAX_EXACT_MULTIPLICITY = 2**52


class DeltaCapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for one coreset build.

    ``delta`` fixes the per-group sample count; when None it comes from
    :func:`default_delta`. ``max_distinct`` triggers the pre-coreset pass when
    the input has more distinct points than that.
    """

    delta: int | None = None
    seed: int = 0
    c_delta: float = 200.0
    use_min_factor: bool = False
    project_dim: int | None = None
    max_distinct: int | None = None
    weight_scale: float | None = None
    exact_weights: bool = False
    seeding_swaps: int = 8
    seeding_candidates: int = 32

    def __post_init__(self):
        if self.delta is not None and int(self.delta) < 1:
            raise InvalidParameter(f"delta must be >= 1, got {self.delta}")
        if not self.c_delta > 0:
            raise InvalidParameter(f"c_delta must be positive, got {self.c_delta}")
        if self.project_dim is not None and self.project_dim < 1:
            raise InvalidParameter(f"project_dim must be positive, got {self.project_dim}")
        if self.max_distinct is not None and self.max_distinct < 1:
            raise InvalidParameter(f"max_distinct must be positive, got {self.max_distinct}")
        if self.weight_scale is not None and not self.weight_scale > 0:
            raise InvalidParameter(f"weight_scale must be positive, got {self.weight_scale}")


def delta_formula(k: int, params: PowerParams, c_delta: float = 200.0, use_min_factor: bool = False) -> float:
    """c_delta * k * ln(k/eps) * eps^-2 [* min(eps^-z, k)], before rounding and capping."""
    if k < 1:
        raise InvalidParameter(f"k must be >= 1, got {k}")
    eps, z = params.epsilon, params.z
    value = c_delta * k * math.log(k / eps) * eps**-2
    if use_min_factor:
        value *= min(eps ** (-z), k)
    return value


def default_delta(k: int, params: PowerParams, cfg: SamplerConfig = SamplerConfig(), total_mass=None) -> int:
    """Samples per group; capped at the total mass N (with a DeltaCapWarning) when given."""
    raw = math.ceil(delta_formula(k, params, cfg.c_delta, cfg.use_min_factor))
    if total_mass is not None and raw > total_mass:
        warnings.warn(f"delta={raw} exceeds total mass {total_mass}; capped", DeltaCapWarning)
        return max(1, int(math.floor(total_mass)))
    return raw


@dataclass(eq=False)
class WeightedCoreset:
    """Weighted points Omega with offset 0.

    ``provenance[i]`` is ``"sampled:<group id>"`` or ``"center:<cluster index>"``.
    """

    points: np.ndarray
    weights: np.ndarray
    provenance: list
    offset: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.points.ndim != 2 or self.weights.shape != (self.points.shape[0],):
            raise InvalidParameter("points must be m x d with one weight per point")
        if len(self.provenance) != self.points.shape[0]:
            raise InvalidParameter("one provenance tag per point is required")
        if np.any(self.weights <= 0):
            raise InvalidParameter("coreset weights must be positive")
        if self.offset != 0:
            raise InvalidParameter("this construction always uses offset 0")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights.tolist())

    @classmethod
    def identity(cls, P: PointSet) -> "WeightedCoreset":
        """P itself with its multiplicities as weights."""
        return cls(P.coords, P.multiplicity.astype(np.float64), ["input"] * P.n)


def sample_group(P: PointSet, clu: Clustering, cat: GroupCatalog, G: GroupKey, delta: int, seed):
    """delta weighted draws from group G; returns (point indices, summed weights).

    Duplicate draws of a point are merged by adding their weights.
    """
    if delta < 1:
        raise InvalidParameter(f"delta must be >= 1, got {delta}")
    members = cat.groups[G]
    cost = clu.point_cost[members]
    mass = P.multiplicity[members].astype(np.float64) * cost
    group_cost = cat.group_cost[G]
    if not group_cost > 0 or np.any(cost <= 0):
        raise EmptyGroupError(f"group {G} has a member with zero cost")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = rng.choice(members.size, size=int(delta), replace=True, p=mass / mass.sum())
    local, counts = np.unique(draws, return_counts=True)
    weights = counts * group_cost / (delta * cost[local])
    return members[local], weights


def proxy_centers(clu: Clustering, cat: GroupCatalog):
    """(center, weight) per cluster; weight = proxied mass of that cluster, zeros omitted."""
    mass = np.bincount(clu.assignment, weights=clu.multiplicity * cat.proxied, minlength=clu.k)
    return [(i, clu.solution.centers[i], float(mass[i])) for i in range(clu.k) if mass[i] > 0]


@dataclass
class PreprocessReport:
    weight_scale: float = 1.0
    dropped_points: int = 0
    projection: ProjectionMap | None = None
    precoreset_applied: bool = False
    distinct_before: int = 0
    distinct_after: int = 0

    def to_json(self) -> dict:
        return {
            "weight_scale": self.weight_scale,
            "dropped_points": self.dropped_points,
            "projection": None if self.projection is None else self.projection.to_dict(),
            "projection_identity": None if self.projection is None else self.projection.identity,
            "precoreset_applied": self.precoreset_applied,
            "distinct_before": self.distinct_before,
            "distinct_after": self.distinct_after,
        }


def _integer_weights(weights: np.ndarray, scale: float | None):
    """Scale and round weights to integers; returns (multiplicities, scale)."""
    if scale is None:
        if np.all(weights == np.round(weights)):
            scale = 1.0
        else:
            scale = 1.0 / weights[weights > 0].min()
    m = np.rint(weights * scale)
    if m.max(initial=0) > _MAX_EXACT_MULTIPLICITY:
        raise InvalidParameter("weight range too wide to round to exact integer multiplicities")
    return m.astype(np.int64), float(scale)


def projection_for(d: int, cfg: SamplerConfig) -> ProjectionMap | None:
    """The map preprocessing applies for this config (None when projection is off)."""
    if cfg.project_dim is None:
        return None
    return make_projection(d, cfg.project_dim, derived_int(cfg.seed, "projection"))


def preprocess(P: PointSet, params: PowerParams, cfg: SamplerConfig = SamplerConfig(), *, k: int | None = None):
    """Bring P into the shape the sampler expects: integer weights, low dimension, few distinct points.

    Returns the prepared PointSet and a :class:`PreprocessReport`. Coreset weights
    built on the prepared set must be divided by ``report.weight_scale``.
    """
    report = PreprocessReport()
    coords, weights = P.coords, P.multiplicity.astype(np.float64)

    if cfg.exact_weights:
        Q = PointSet(coords, weights, real_weights=True)
    elif P.real_weights or cfg.weight_scale is not None:
        mult, report.weight_scale = _integer_weights(weights, cfg.weight_scale)
        keep = mult > 0
        report.dropped_points = int((~keep).sum())
        if not keep.any():
            raise InvalidParameter("every weight rounds to zero; raise weight_scale")
        Q = PointSet(coords[keep], mult[keep])
    else:
        Q = P

    report.projection = projection_for(Q.d, cfg)
    if report.projection is not None:
        Q = apply(report.projection, Q)

    report.distinct_before = report.distinct_after = Q.distinct_count()
    if cfg.max_distinct is not None and report.distinct_before > cfg.max_distinct:
        if k is None:
            raise InvalidParameter("the pre-coreset pass needs k")
        Q, scale = _precoreset(Q, k, params.z, cfg.max_distinct, cfg.seed, exact=cfg.exact_weights)
        report.weight_scale *= scale
        report.precoreset_applied = True
        report.distinct_after = Q.distinct_count()
    return Q, report


def _precoreset(P: PointSet, k: int, z: int, size: int, seed, exact: bool):
    """One round of plain sensitivity sampling against a D^z seeding."""
    A = dz_seed(P, k, z, substream(seed, "precoreset-seed"))
    clu = build_clustering(P, A, z)
    mult = P.multiplicity.astype(np.float64)
    mass = mult * clu.point_cost
    total = math.fsum(mass.tolist())
    rng = substream(seed, "precoreset-draws")
    draws = rng.choice(P.n, size=size, replace=True, p=mass / mass.sum())
    idx, counts = np.unique(draws, return_counts=True)
    w = counts * total / (size * clu.point_cost[idx])
    # zero-cost points coincide with centers of A and are carried over exactly
    zero_mass = np.bincount(clu.assignment, weights=mult * (clu.point_cost == 0), minlength=k)
    centers = np.flatnonzero(zero_mass > 0)
    coords = np.vstack([P.coords[idx], A.centers[centers]])
    weights = np.concatenate([w, zero_mass[centers]])
    if exact:
        return PointSet(coords, weights, real_weights=True), 1.0
    mult_int, scale = _integer_weights(weights, None)
    keep = mult_int > 0
    return PointSet(coords[keep], mult_int[keep]), scale


def build_coreset(P: PointSet, k: int, params: PowerParams, cfg: SamplerConfig = SamplerConfig()) -> WeightedCoreset:
    """Preprocess, compute A, partition into groups, sample every group, add weighted centers."""
    z = params.z
    Q, prep = preprocess(P, params, cfg, k=k)
    A = reference_solution(
        Q, k, z, derived_int(cfg.seed, "reference"), swaps=cfg.seeding_swaps, n_candidates=cfg.seeding_candidates
    )
    clu = build_clustering(Q, A, z)
    cat = partition(clu, params)

    raw_delta = math.ceil(delta_formula(k, params, cfg.c_delta, cfg.use_min_factor))
    if cfg.delta is not None:
        delta, capped = int(cfg.delta), False
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DeltaCapWarning)
            delta = default_delta(k, params, cfg, total_mass=Q.total_mass)
        capped = delta < raw_delta

    points, weights, prov, table = [], [], [], []
    for G in cat.groups:
        idx, w = sample_group(Q, clu, cat, G, delta, substream(cfg.seed, "group", str(G)))
        points.append(Q.coords[idx])
        weights.append(w)
        prov.extend([f"sampled:{G}"] * idx.size)
        table.append(
            {
                "id": str(G),
                "members": int(cat.groups[G].size),
                "mass": cat.group_mass[G],
                "cost": cat.group_cost[G],
                "stored": int(idx.size),
                "weight": math.fsum(w.tolist()),
            }
        )
    centers = proxy_centers(clu, cat)
    if centers:
        points.append(np.array([c for _, c, _ in centers]))
        weights.append(np.array([w for _, _, w in centers]))
        prov.extend(f"center:{i}" for i, _, _ in centers)

    pts = np.vstack(points) if points else np.empty((0, Q.d))
    wts = np.concatenate(weights) / prep.weight_scale if weights else np.empty(0)
    info = {
        "k": k,
        "z": z,
        "epsilon": params.epsilon,
        "delta": delta,
        "delta_formula": raw_delta,
        "delta_capped": capped,
        "c_delta": cfg.c_delta,
        "use_min_factor": cfg.use_min_factor,
        "seed": cfg.seed,
        "input_mass": P.total_mass,
        "prepared_mass": Q.total_mass,
        "reference_cost": clu.total_cost,
        "n_groups": len(cat.groups),
        "proxied_mass": float(sum(w for _, _, w in centers)),
        "groups": table,
        "preprocess": prep.to_json(),
    }
    coreset = WeightedCoreset(pts, wts, prov, 0.0, info)
    info["total_weight"] = coreset.total_weight
    info["size"] = coreset.size
    return coreset
