import csv
import io
import json
import math

import numpy as np
import pytest

from coreset_forge.datasets import gaussian_mixture
from coreset_forge.errors import InvalidParameter, UndefinedDistortion
from coreset_forge.evaluate import (
    REPORT_SCHEMA,
    SolutionSuite,
    audit,
    audit_solutions,
    coreset_cost,
    distortion,
    generate_suite,
    lloyd_refine,
    uniform_baseline,
)
from coreset_forge.lower_bounds.basis import gen_basis_instance, hadamard_cost, orthogonal_unit_vector
from coreset_forge.metric import PointSet, PowerParams, Solution, cost_vector, total_cost
from coreset_forge.sampler import SamplerConfig, WeightedCoreset, build_coreset
from coreset_forge.seeding import dz_seed

from conftest import brute_cost


@pytest.fixture(scope="module")
def small():
    P, _, _ = gaussian_mixture(600, 3, 4, seed=8)
    return P


def test_identity_coreset_zero_distortion(small):
    core = WeightedCoreset.identity(small)
    r = np.random.default_rng(0)
    for _ in range(20):
        S = Solution(r.normal(size=(4, 3)) * 20)
        assert distortion(small, core, S, 2) <= 1e-12
    report = audit(small, core, [SolutionSuite("RandomBox", 10), SolutionSuite("DzSeeded", 5)], 4, 1)
    assert report.max <= 1e-12


def test_doubled_weights_distortion_one(small):
    core = WeightedCoreset(small.coords, np.full(small.n, 2.0), ["x"] * small.n)
    assert distortion(small, core, Solution([[1.0, 2.0, 3.0]]), 2) == 1.0


def test_hand_built_distortion():
    P = PointSet([[0.0], [1.0], [2.0], [4.0], [7.0]])
    S = Solution([[0.0], [5.0]])
    # costs (z=2): 0, 1, 4, 1, 4 -> 10
    core = WeightedCoreset(np.array([[1.0], [4.0]]), np.array([3.0, 2.0]), ["a", "b"])
    # 3 * 1 + 2 * 1 = 5 -> |5 - 10| / 10
    assert distortion(P, core, S, 2) == 0.5


def test_zero_reference_cost_rejected():
    P = PointSet([[1.0, 1.0]])
    core = WeightedCoreset.identity(P)
    with pytest.raises(UndefinedDistortion):
        distortion(P, core, Solution([[1.0, 1.0]]), 2)


def test_audit_skips_zero_cost_solutions():
    P = PointSet([[0.0], [1.0]])
    core = WeightedCoreset.identity(P)
    report = audit_solutions(P, core, [Solution([[0.0], [1.0]], "exact"), Solution([[3.0]], "far")], 2)
    assert report.excluded == 1 and report.labels == ["far"]


def test_random_box_in_bounding_box(small):
    for S in generate_suite(small, 4, 2, SolutionSuite("RandomBox", 25, 3)):
        assert S.k == 4 and S.d == 3
        assert np.all(S.centers >= small.coords.min(0)) and np.all(S.centers <= small.coords.max(0))


def test_subset_of_p(small):
    rows = {tuple(x) for x in small.coords}
    for S in generate_suite(small, 4, 2, SolutionSuite("SubsetOfP", 10, 1)):
        assert all(tuple(c) in rows for c in S.centers)
        assert np.unique(S.centers, axis=0).shape[0] == 4


@pytest.mark.parametrize("z", [1, 2, 3])
def test_lloyd_never_increases_cost(small, z):
    w = small.multiplicity.astype(float)
    for seed in range(5):
        init = dz_seed(small, 4, z, seed)
        refined = lloyd_refine(small.coords, w, init, z, seed=seed)
        assert total_cost(small, refined, z) <= total_cost(small, init, z)


def test_suites_deterministic_and_sized(small):
    core = build_coreset(small, 4, PowerParams(2, 0.2), SamplerConfig(delta=200))
    for kind in ("RandomBox", "SubsetOfP", "DzSeeded", "LloydRefined", "CoresetAdversarial"):
        a = generate_suite(small, 4, 2, SolutionSuite(kind, 3, 9), core)
        b = generate_suite(small, 4, 2, SolutionSuite(kind, 3, 9), core)
        assert len(a) == 3 and all(x == y for x, y in zip(a, b))
        assert all(S.k == 4 and S.d == small.d for S in a)


def test_coreset_adversarial_needs_coreset(small):
    with pytest.raises(InvalidParameter):
        generate_suite(small, 4, 2, SolutionSuite("CoresetAdversarial", 1))


def test_hadamard_family_only_on_basis(small):
    with pytest.raises(InvalidParameter):
        generate_suite(small, 4, 2, SolutionSuite("HadamardFamily", 4))


def test_hadamard_audit_matches_analytic_costs():
    inst = gen_basis_instance(2, 1 / 24)
    core = WeightedCoreset.identity(inst.points)
    report = audit(inst.points, core, [SolutionSuite("HadamardFamily", inst.q)], inst.k, 2)
    assert len(report.labels) == inst.q
    for i, ref in enumerate(report.reference_costs):
        assert ref == pytest.approx(hadamard_cost(inst.d, inst.q, i), rel=1e-9)


def test_suite_validation():
    with pytest.raises(InvalidParameter):
        SolutionSuite("Nope", 3)
    with pytest.raises(InvalidParameter):
        SolutionSuite("RandomBox", 0)
    with pytest.raises(InvalidParameter):
        audit(PointSet([[0.0]]), WeightedCoreset.identity(PointSet([[0.0]])), [], 1, 2)


def test_distortion_scale_invariant(small):
    core = build_coreset(small, 4, PowerParams(2, 0.2), SamplerConfig(delta=150, seed=2))
    r = np.random.default_rng(5)
    for z in (1, 2, 3):
        S = Solution(r.normal(size=(4, 3)) * 10)
        base = distortion(small, core, S, z)
        lam = 3.7
        scaled = distortion(
            PointSet(lam * small.coords), WeightedCoreset(lam * core.points, core.weights, core.provenance), Solution(lam * S.centers), z
        )
        assert scaled == pytest.approx(base, abs=1e-9)


@pytest.mark.parametrize("z", [1, 2, 3, 4])
def test_orthogonal_center_coreset_cost(z):
    inst = gen_basis_instance(2, 1 / 12)
    r = np.random.default_rng(z)
    t = inst.d - 2
    R = r.normal(size=(t, inst.ambient_dim))
    w = r.uniform(0.5, 2.0, size=t)
    v = orthogonal_unit_vector(inst.points.coords, R)
    core = WeightedCoreset(R, w, ["r"] * t)
    S = Solution(np.tile(v, (inst.k, 1)))
    expected = math.fsum(w * (np.sum(R**2, axis=1) + 1) ** (z / 2))
    assert coreset_cost(core, S, z) == pytest.approx(expected, rel=1e-9)


def test_uniform_baseline_full_size_total_weight(small):
    base = uniform_baseline(small, small.n, 0)
    assert base.total_weight == pytest.approx(small.total_mass, rel=1e-12)
    assert np.all(base.weights > 0)


def test_uniform_baseline_deterministic(small):
    a, b = uniform_baseline(small, 50, 3), uniform_baseline(small, 50, 3)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)
    with pytest.raises(InvalidParameter):
        uniform_baseline(small, 0, 0)


def test_uniform_baseline_unbiased():
    r = np.random.default_rng(2)
    P = PointSet(r.normal(size=(80, 2)) * 5, r.integers(1, 4, size=80))
    S = Solution(r.normal(size=(2, 2)))
    f = cost_vector(P, S, 2)
    truth = total_cost(P, S, 2)
    est = []
    for t in range(10_000):
        b = uniform_baseline(P, 20, t)
        idx = [int(np.flatnonzero((P.coords == p).all(axis=1))[0]) for p in b.points]
        est.append(float(np.dot(b.weights, f[idx])))
    assert abs(np.mean(est) - truth) / truth <= 0.01


def test_report_serialization(small):
    core = build_coreset(small, 4, PowerParams(2, 0.2), SamplerConfig(delta=150))
    report = audit(small, core, [SolutionSuite("RandomBox", 5), SolutionSuite("DzSeeded", 3)], 4, 2, eps=0.2)
    data = json.loads(json.dumps(report.to_json()))
    assert data["schema"] == REPORT_SCHEMA and data["n_solutions"] == 8
    assert data["max"] >= max(data["quantiles"].values())
    assert set(data["max_by_suite"]) == {"RandomBox", "DzSeeded"}
    assert data["total_weight_ok"] in (True, False)
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0] == ["solution", "reference_cost", "coreset_cost", "distortion"] and len(rows) == 9
    assert float(rows[1][3]) == report.errors[0]
    assert np.all(report.errors >= 0) and report.max == report.errors.max()


def test_threads_do_not_change_results(small):
    core = build_coreset(small, 4, PowerParams(1, 0.2), SamplerConfig(delta=150))
    suites = [SolutionSuite("RandomBox", 12, 1)]
    a = audit(small, core, suites, 4, 1, threads=1)
    b = audit(small, core, suites, 4, 1, threads=4)
    assert np.array_equal(a.errors, b.errors)


def test_brute_force_reference_costs(small):
    core = WeightedCoreset.identity(small)
    sols = generate_suite(small, 4, 3, SolutionSuite("DzSeeded", 2, 0))
    report = audit_solutions(small, core, sols, 3)
    for S, ref in zip(sols, report.reference_costs):
        assert ref == pytest.approx(brute_cost(small.coords, S.centers, 3, small.multiplicity), rel=1e-9)
