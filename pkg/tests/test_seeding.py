import itertools
import math

import numpy as np
import pytest

from coreset_forge.datasets import gaussian_mixture
from coreset_forge.errors import InvalidParameter
from coreset_forge.metric import PointSet, Solution, total_cost
from coreset_forge.seeding import build_clustering, dz_seed, local_search_refine, reference_solution

from conftest import brute_cost


def test_dz_seed_exhaustive():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]])
    P = PointSet(np.vstack([X, X[:2]]))
    S = dz_seed(P, 4, 2, 0)
    assert total_cost(P, S, 2) == 0.0
    assert np.unique(S.centers, axis=0).shape[0] == 4


def test_dz_seed_rejects_large_k():
    P = PointSet([[0.0], [0.0], [1.0]])
    with pytest.raises(InvalidParameter) as err:
        dz_seed(P, 3, 2, 0)
    assert err.value.code == "k_too_large"


def test_dz_seed_first_draw_by_mass():
    P = PointSet([[0.0, 0.0], [1000.0, 0.0]], [999, 1])
    hits = sum(dz_seed(P, 1, 2, s).centers[0, 0] == 0.0 for s in range(10_000))
    assert abs(hits / 10_000 - 0.999) <= 0.02


def test_dz_seed_deterministic(blobs):
    assert dz_seed(blobs, 3, 2, 42) == dz_seed(blobs, 3, 2, 42)


def test_dz_seed_quality_on_planted_mixture():
    P, centers, _ = gaussian_mixture(2000, 5, 6, seed=11)
    planted = total_cost(P, Solution(centers), 2)
    costs = [total_cost(P, dz_seed(P, 6, 2, s), 2) for s in range(50)]
    assert np.median(costs) <= 4 * planted


def test_local_search_keeps_optimal_solution():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [11.0, 0.0], [30.0, 1.0]])
    P = PointSet(X)
    best = min(itertools.combinations(range(5), 2), key=lambda c: brute_cost(X, X[list(c)], 2, np.ones(5)))
    S = Solution(X[list(best)])
    assert local_search_refine(P, S, 2, 5, seed=0) == S


def test_local_search_zero_swaps_is_verbatim(blobs):
    S = Solution([[100.0, 100.0], [-3.0, 2.0], [7.0, 7.0]])
    assert local_search_refine(blobs, S, 2, 0) is S


def test_local_search_never_increases_cost():
    r = np.random.default_rng(5)
    for t in range(100):
        P = PointSet(r.normal(size=(int(r.integers(8, 40)), 2)) * r.uniform(1, 10))
        z = int(r.integers(1, 4))
        k = int(r.integers(1, 4))
        S = dz_seed(P, k, z, t)
        refined = local_search_refine(P, S, z, 3, seed=t)
        assert total_cost(P, refined, z) <= total_cost(P, S, z)


def test_build_clustering_examples():
    clu = build_clustering(PointSet([[0.0, 0.0], [2.0, 0.0]]), Solution([[0.0, 0.0]]), 2)
    assert clu.cluster_size.tolist() == [2]
    assert clu.cluster_cost.tolist() == [4.0]
    assert clu.delta.tolist() == [2.0]

    clu = build_clustering(PointSet([[1.0, 1.0]] * 4), Solution([[1.0, 1.0], [5.0, 5.0]]), 3)
    assert clu.cluster_cost.tolist() == [0.0, 0.0] and clu.delta.tolist() == [0.0, 0.0]


def test_build_clustering_matches_recomputation():
    r = np.random.default_rng(9)
    for _ in range(20):
        n = int(r.integers(5, 30))
        X = r.normal(size=(n, 3))
        mult = r.integers(1, 5, size=n)
        C = r.normal(size=(int(r.integers(1, 5)), 3))
        z = int(r.integers(1, 5))
        P = PointSet(X, mult)
        clu = build_clustering(P, Solution(C), z)
        per = brute_cost(X, C, z)
        idx = [int(np.argmin([np.linalg.norm(x - c) for c in C])) for x in X]
        for i in range(C.shape[0]):
            members = [p for p in range(n) if idx[p] == i]
            size = sum(int(mult[p]) for p in members)
            cost = sum(mult[p] * per[p] for p in members)
            assert clu.cluster_size[i] == size
            assert math.isclose(clu.cluster_cost[i], cost, rel_tol=1e-9, abs_tol=1e-12)
            assert clu.delta[i] == (clu.cluster_cost[i] / size if size else 0.0)
        assert clu.cluster_size.sum() == P.total_mass
        assert math.isclose(clu.total_cost, total_cost(P, Solution(C), z), rel_tol=1e-9)


def test_reference_solution_deterministic(blobs):
    a = reference_solution(blobs, 3, 1, 4)
    assert a == reference_solution(blobs, 3, 1, 4)
    assert a.k == 3
