"""Empirical coreset auditing.

The coreset guarantee quantifies over every k-center solution; an audit can only
check finite suites of solutions. The suites lean toward the directions that are
known to be hard: locally optimal solutions, solutions tuned on the coreset
itself, and the Hadamard family on the basis instance.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidParameter, UndefinedDistortion
from .lower_bounds.basis import BasisInstance, hadamard_solutions, looks_like_basis
from .metric import PointSet, Solution, assign, check_power, cost_vector, powered, total_cost, weighted_sum
from .randomness import substream
from .sampler import WeightedCoreset
from .seeding import dz_seed_weighted

SUITE_KINDS = ("RandomBox", "SubsetOfP", "DzSeeded", "LloydRefined", "CoresetAdversarial", "HadamardFamily")
REPORT_SCHEMA = "coreset-forge/distortion-report/1"

LLOYD_ITERATIONS = 20
# Candidate medoids per cluster and the member subsample they are scored on.
MEDOID_CANDIDATES = 32
MEDOID_SCORING_SAMPLE = 512


@dataclass(frozen=True)
class SolutionSuite:
    kind: str
    count: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SUITE_KINDS:
            raise InvalidParameter(f"unknown suite kind {self.kind!r}; expected one of {SUITE_KINDS}")
        if self.count < 1:
            raise InvalidParameter("suite count must be >= 1")

    def to_json(self) -> dict:
        return {"kind": self.kind, "count": self.count, "seed": self.seed}


def coreset_cost(coreset: WeightedCoreset, S, z: int) -> float:
    return weighted_sum(coreset.weights, cost_vector(coreset.points, S, z)) + coreset.offset


def distortion(P: PointSet, coreset: WeightedCoreset, S, z: int, reference_cost: float | None = None) -> float:
    """|cost(Omega, S) + offset - cost(P, S)| / cost(P, S)."""
    full = total_cost(P, S, z) if reference_cost is None else reference_cost
    if not full > 0:
        raise UndefinedDistortion("cost(P, S) is zero; distortion is undefined")
    return abs(coreset_cost(coreset, S, z) - full) / full


def lloyd_refine(X, w, S: Solution, z: int, iterations: int = LLOYD_ITERATIONS, seed=0) -> Solution:
    """Alternating assignment / center update on weighted points.

    z = 2 moves each center to its cluster's weighted centroid. Other z move it to
    the best input point of the cluster among a sampled candidate set. A round is
    kept only if it lowers the total cost, so the result never costs more than S.
    """
    z = check_power(z)
    X = np.asarray(X, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    C = np.array(S.centers)
    rng = substream(seed, "lloyd")
    idx, cost = assign(X, C, z)
    current = float(w @ cost)
    for _ in range(iterations):
        new = C.copy()
        for i in range(C.shape[0]):
            members = np.flatnonzero(idx == i)
            if members.size == 0:
                continue
            wm = w[members]
            if z == 2:
                new[i] = wm @ X[members] / wm.sum()
            else:
                new[i] = _medoid_step(X[members], wm, C[i], float(wm @ cost[members]), z, rng)
        if np.array_equal(new, C):
            break
        new_idx, new_cost = assign(X, new, z)
        value = float(w @ new_cost)
        if not value < current:
            break
        C, idx, cost, current = new, new_idx, new_cost, value
    return Solution(C, label=S.label)


def _medoid_step(Xc, wc, current, current_cost, z, rng):
    m = Xc.shape[0]
    cand = rng.choice(m, size=min(m, MEDOID_CANDIDATES), replace=False)
    sample = rng.choice(m, size=min(m, MEDOID_SCORING_SAMPLE), replace=False)
    scores = wc[sample] @ powered(cdist(Xc[sample], Xc[cand], "sqeuclidean"), z)
    best = Xc[cand[int(np.argmin(scores))]]
    best_cost = float(wc @ powered(cdist(Xc, best[None, :], "sqeuclidean")[:, 0], z))
    return best if best_cost < current_cost else current


def _distinct_rows(X: np.ndarray) -> np.ndarray:
    _, first = np.unique(X, axis=0, return_index=True)
    return np.sort(first)


def generate_suite(P: PointSet, k: int, z: int, suite: SolutionSuite, coreset: WeightedCoreset | None = None):
    """Deterministic list of k-center solutions in P's ambient space."""
    z = check_power(z)
    kind = suite.kind
    out = []
    if kind == "HadamardFamily":
        q = looks_like_basis(P, k)
        if q is None:
            raise InvalidParameter("HadamardFamily needs the basis instance e_1..e_d in R^{2d} with d = k*q")
        inst = BasisInstance(k, q, math.nan, z, float(q), P)
        return [s for s in hadamard_solutions(inst)][: suite.count]
    if kind == "CoresetAdversarial" and coreset is None:
        raise InvalidParameter("CoresetAdversarial needs a coreset")

    X, w = P.coords, P.multiplicity.astype(np.float64)
    lo, hi = X.min(axis=0), X.max(axis=0)
    distinct = _distinct_rows(X) if kind == "SubsetOfP" else None
    for t in range(suite.count):
        rng = substream(suite.seed, kind, t)
        label = f"{kind}-{t}"
        if kind == "RandomBox":
            S = Solution(rng.uniform(lo, hi, size=(k, P.d)), label)
        elif kind == "SubsetOfP":
            S = Solution(X[rng.choice(distinct, size=min(k, distinct.size), replace=False)], label)
        elif kind == "DzSeeded":
            S = Solution(dz_seed_weighted(X, w, k, z, rng).centers, label)
        elif kind == "LloydRefined":
            init = dz_seed_weighted(X, w, k, z, rng)
            S = lloyd_refine(X, w, Solution(init.centers, label), z, seed=int(rng.integers(2**31)))
        else:
            init = dz_seed_weighted(coreset.points, coreset.weights, k, z, rng)
            S = lloyd_refine(
                coreset.points, coreset.weights, Solution(init.centers, label), z, seed=int(rng.integers(2**31))
            )
        out.append(S)
    return out


@dataclass
class DistortionReport:
    errors: np.ndarray
    labels: list
    reference_costs: np.ndarray
    coreset_costs: np.ndarray
    total_weight: float
    input_mass: float
    epsilon: float | None = None
    suites: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    excluded: int = 0

    @property
    def max(self) -> float:
        return float(self.errors.max(initial=0.0))

    @property
    def mean(self) -> float:
        return float(self.errors.mean()) if self.errors.size else 0.0

    def quantiles(self, qs=(0.5, 0.9, 0.99)) -> dict:
        if not self.errors.size:
            return {str(q): 0.0 for q in qs}
        return {str(q): float(np.quantile(self.errors, q)) for q in qs}

    @property
    def total_weight_ok(self) -> bool | None:
        """w(Omega) within (1 +- 2 eps) N."""
        if self.epsilon is None:
            return None
        return abs(self.total_weight - self.input_mass) <= 2 * self.epsilon * self.input_mass

    def by_suite(self) -> dict:
        out: dict = {}
        for label, e in zip(self.labels, self.errors):
            kind = label.rsplit("-", 1)[0]
            out[kind] = max(out.get(kind, 0.0), float(e))
        return out

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "n_solutions": int(self.errors.size),
            "excluded_zero_cost": self.excluded,
            "max": self.max,
            "mean": self.mean,
            "quantiles": self.quantiles(),
            "max_by_suite": self.by_suite(),
            "epsilon": self.epsilon,
            "total_weight": self.total_weight,
            "input_mass": self.input_mass,
            "total_weight_ok": self.total_weight_ok,
            "suites": self.suites,
            "meta": self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["solution", "reference_cost", "coreset_cost", "distortion"])
        for row in zip(self.labels, self.reference_costs, self.coreset_costs, self.errors):
            writer.writerow([row[0], repr(float(row[1])), repr(float(row[2])), repr(float(row[3]))])
        return buf.getvalue()


def audit_solutions(
    P: PointSet,
    coreset: WeightedCoreset,
    solutions,
    z: int,
    *,
    eps: float | None = None,
    reference_costs=None,
    threads: int = 1,
) -> DistortionReport:
    """Distortion of ``coreset`` on every solution; zero-cost solutions are skipped."""
    solutions = list(solutions)
    if not solutions:
        raise InvalidParameter("nothing to audit: empty solution list")
    if reference_costs is None:
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            reference_costs = list(pool.map(lambda S: total_cost(P, S, z), solutions))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        core = list(pool.map(lambda S: coreset_cost(coreset, S, z), solutions))
    ref = np.asarray(reference_costs, dtype=np.float64)
    core = np.asarray(core, dtype=np.float64)
    keep = ref > 0
    errors = np.abs(core[keep] - ref[keep]) / ref[keep]
    labels = [S.label or f"solution-{i}" for i, S in enumerate(solutions)]
    return DistortionReport(
        errors=errors,
        labels=[lab for lab, ok in zip(labels, keep) if ok],
        reference_costs=ref[keep],
        coreset_costs=core[keep],
        total_weight=coreset.total_weight,
        input_mass=float(P.total_mass),
        epsilon=eps,
        meta={k: v for k, v in coreset.info.items() if k in ("delta", "seed", "c_delta", "k", "z", "size")},
        excluded=int((~keep).sum()),
    )


def audit(
    P: PointSet,
    coreset: WeightedCoreset,
    suites,
    k: int,
    z: int,
    *,
    eps: float | None = None,
    threads: int = 1,
) -> DistortionReport:
    """Generate every suite, then measure the coreset's distortion on all of them."""
    suites = list(suites)
    if not suites:
        raise InvalidParameter("audit needs at least one suite")
    solutions = []
    for suite in suites:
        solutions.extend(generate_suite(P, k, z, suite, coreset))
    report = audit_solutions(P, coreset, solutions, z, eps=eps, threads=threads)
    report.suites = [s.to_json() for s in suites]
    return report


def uniform_baseline(P: PointSet, size: int, seed) -> WeightedCoreset:
    """``size`` draws uniformly by mass, each with weight N / size, duplicates merged."""
    if size < 1:
        raise InvalidParameter("baseline size must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mass = P.multiplicity.astype(np.float64)
    draws = rng.choice(P.n, size=int(size), replace=True, p=mass / mass.sum())
    idx, counts = np.unique(draws, return_counts=True)
    N = float(P.total_mass)
    return WeightedCoreset(
        P.coords[idx], counts * N / size, ["uniform"] * idx.size, 0.0, {"kind": "uniform", "draws": int(size)}
    )
