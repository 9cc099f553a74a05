"""Euclidean hard instance: the standard basis e_1..e_d placed in R^{2d}.

The adversarial solutions copy one row of a normalized Hadamard matrix into
each of k coordinate blocks of width q (d = k * q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameter
from ..metric import PointSet, Solution, check_power

# Relative slack when rounding the exact block width down to a power of two.
_POW2_SLACK = 1e-9


def sylvester_hadamard(q: int) -> np.ndarray:
    """Normalized Sylvester Hadamard matrix: q x q, entries +-1/sqrt(q), orthonormal rows."""
    if q < 1 or q & (q - 1):
        raise InvalidParameter(f"Sylvester construction needs a power of two, got {q}")
    H = np.ones((1, 1))
    while H.shape[0] < q:
        H = np.block([[H, H], [H, -H]])
    return H / math.sqrt(q)


def exact_block_width(eps: float, z: int) -> float:
    """The real-valued block width q before rounding to a power of two."""
    if z == 2:
        return 1.0 / (36.0 * eps * eps)
    return 1.0 / (min(1.0, (z / 2.0) ** 2) * 32.0**2 * eps * eps)


@dataclass(frozen=True, eq=False)
class BasisInstance:
    k: int
    q: int
    eps: float
    z: int
    q_exact: float
    points: PointSet

    @property
    def d(self) -> int:
        return self.k * self.q

    @property
    def ambient_dim(self) -> int:
        return 2 * self.d

    @property
    def q_deviation(self) -> float:
        """Relative shortfall of the power-of-two width against the exact one."""
        return 1.0 - self.q / self.q_exact

    def describe(self) -> dict:
        return {
            "kind": "basis",
            "k": self.k,
            "q": self.q,
            "d": self.d,
            "ambient_dim": self.ambient_dim,
            "eps": self.eps,
            "z": self.z,
            "q_exact": self.q_exact,
            "q_deviation": self.q_deviation,
        }


def basis_points(d: int) -> PointSet:
    """e_1..e_d as rows of a d x 2d matrix."""
    return PointSet(np.eye(d, 2 * d))


def gen_basis_instance(k: int, eps: float, z: int = 2) -> BasisInstance:
    """Hard instance for (k, eps, z); the block width is rounded down to a power of two."""
    z = check_power(z)
    if k < 2 or k % 2:
        raise InvalidParameter(f"k must be a positive even integer, got {k}")
    if not 0 < eps < 0.5:
        raise InvalidParameter(f"eps must lie in (0, 1/2), got {eps}")
    q_exact = exact_block_width(eps, z)
    if q_exact * (1 + _POW2_SLACK) < 2:
        raise InvalidParameter(
            f"eps={eps} gives block width {q_exact:.4g} < 2; choose a smaller eps", code="eps_too_large"
        )
    q = 1 << int(math.floor(math.log2(q_exact * (1 + _POW2_SLACK))))
    return BasisInstance(k, q, float(eps), z, q_exact, basis_points(k * q))


def hadamard_solutions(inst: BasisInstance) -> list[Solution]:
    """The q solutions; solution i puts Hadamard row i into every coordinate block."""
    H = sylvester_hadamard(inst.q)
    out = []
    for i in range(inst.q):
        centers = np.zeros((inst.k, inst.ambient_dim))
        for j in range(inst.k):
            centers[j, j * inst.q : (j + 1) * inst.q] = H[i]
        out.append(Solution(centers, label=f"hadamard-{i}"))
    return out


def hadamard_cost(d: int, q: int, row: int) -> float:
    """Closed-form z=2 cost of Hadamard solution ``row`` (0 is the all-positive row)."""
    if row == 0:
        return 2.0 * d - 2.0 * d / math.sqrt(q)
    return 2.0 * d - d / math.sqrt(q)


def unit_center_bound(d: int, k: int, z: int = 2) -> float:
    """Lower bound on the cost of e_1..e_d against k unit-norm centers.

    For z = 2 this holds for any unit-norm centers; for other z it needs the
    centers to be closed under negation.
    """
    if d < 1 or k < 1:
        raise InvalidParameter("d and k must be positive")
    z = check_power(z)
    if z == 2:
        return 2.0 * d - 2.0 * math.sqrt(d * k)
    return 2 ** (z / 2) * d - 2 ** (z / 2) * max(1.0, z / 2) * math.sqrt(d * k)


def orthogonal_unit_vector(*blocks, dim: int | None = None) -> np.ndarray:
    """A unit vector orthogonal to every row of the given matrices."""
    rows = [np.atleast_2d(np.asarray(b, dtype=np.float64)) for b in blocks]
    M = np.vstack(rows)
    dim = M.shape[1] if dim is None else dim
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > s.max(initial=0) * max(M.shape) * np.finfo(float).eps))
    if rank >= dim:
        raise InvalidParameter("no orthogonal direction: the rows span the whole space")
    v = vt[rank]
    return v / np.linalg.norm(v)


def orthogonal_center_solution(inst: BasisInstance, extra=None) -> Solution:
    """All k centers at one unit vector orthogonal to P (and to ``extra`` rows if given).

    Without ``extra`` this is e_{d+1}.
    """
    if extra is None or len(extra) == 0:
        v = np.zeros(inst.ambient_dim)
        v[inst.d] = 1.0
    else:
        v = orthogonal_unit_vector(inst.points.coords, extra)
    return Solution(np.tile(v, (inst.k, 1)), label="orthogonal")


def orthogonal_cost(d: int, z: int) -> float:
    """Cost of e_1..e_d when every center sits at a unit vector orthogonal to all of them."""
    return 2 ** (z / 2) * d


def looks_like_basis(P: PointSet, k: int) -> int | None:
    """Return q if P is exactly e_1..e_d in R^{2d} with d = k*q, q a power of two."""
    n, D = P.coords.shape
    if D != 2 * n or n % k or not np.array_equal(P.coords, np.eye(n, D)):
        return None
    q = n // k
    return q if q >= 1 and not q & (q - 1) else None
