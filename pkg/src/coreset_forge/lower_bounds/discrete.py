"""Random bipartite client/center metrics and their star composition.

Within a copy, every client-center pair is at distance 1 with probability 1/4
and 2^(1/z) otherwise; all client-client and center-center distances are
2^(1/z). Powered distances are therefore exactly 1 or 2.

Star composition glues k copies through hub centers: c_inf at D_inf from every
client, c_4inf at 4 * D_inf, and per copy i a center c2_i at 2^(1/z) from the
clients of copy i. Copies are mutually "infinitely" far; that distance is
represented by 8 * D_inf, which exceeds every distance a candidate solution can
use since c_4inf is always available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import InvalidParameter
from ..metric import check_power

EDGE_PROBABILITY = 0.25
CROSS_COPY_FACTOR = 8.0


@dataclass(frozen=True, eq=False)
class DiscreteInstance:
    """``copies`` subinstances of ``n_clients`` clients and ``n_centers`` centers each.

    Center ids: copy centers first (copy c owns ids c*n_centers .. (c+1)*n_centers - 1),
    then for star instances c_inf, c_4inf and c2_0 .. c2_{copies-1}.
    Client ids run copy by copy in the same way.
    """

    n_clients: int
    n_centers: int
    z: int
    copies: int
    packed_edges: np.ndarray  # (copies, n_clients, ceil(n_centers / 8)) bit matrix, 1 = length-1 edge
    d_inf: float | None = None
    eps: float | None = None

    @property
    def star(self) -> bool:
        return self.d_inf is not None

    @property
    def total_clients(self) -> int:
        return self.copies * self.n_clients

    @property
    def hub(self) -> int:
        self._require_star()
        return self.copies * self.n_centers

    @property
    def far_hub(self) -> int:
        self._require_star()
        return self.copies * self.n_centers + 1

    def square_center(self, copy: int) -> int:
        self._require_star()
        return self.copies * self.n_centers + 2 + copy

    @property
    def n_candidates(self) -> int:
        extra = 2 + self.copies if self.star else 0
        return self.copies * self.n_centers + extra

    def _require_star(self):
        if not self.star:
            raise InvalidParameter("plain subinstances have no hub centers")

    def edges(self, copy: int = 0) -> np.ndarray:
        """Boolean n_clients x n_centers matrix of length-1 edges in one copy."""
        return np.unpackbits(self.packed_edges[copy], axis=-1, count=self.n_centers).astype(bool)

    def short_edge_count(self, center: int) -> int:
        """n_1(c): clients at distance 1 from a copy center."""
        copy, local = divmod(center, self.n_centers)
        return int(self.edges(copy)[:, local].sum())

    def length_domain(self) -> set:
        """All client-center distances that occur inside copies."""
        bits = np.unique(np.unpackbits(self.packed_edges, axis=-1, count=self.n_centers))
        return {1.0 if b else 2.0 ** (1.0 / self.z) for b in bits.tolist()}

    def powered_distances(self, center: int) -> np.ndarray:
        """dist(client, center)^z for every client id."""
        if not 0 <= center < self.n_candidates:
            raise InvalidParameter(f"unknown center id {center}", code="unknown_center")
        z = self.z
        far = (CROSS_COPY_FACTOR * self.d_inf) ** z if self.star else math.inf
        out = np.full(self.total_clients, far)
        if center < self.copies * self.n_centers:
            copy, local = divmod(center, self.n_centers)
            col = self.edges(copy)[:, local]
            out[copy * self.n_clients : (copy + 1) * self.n_clients] = np.where(col, 1.0, 2.0)
        elif center == self.hub:
            out[:] = self.d_inf**z
        elif center == self.far_hub:
            out[:] = (4.0 * self.d_inf) ** z
        else:
            copy = center - self.copies * self.n_centers - 2
            out[copy * self.n_clients : (copy + 1) * self.n_clients] = 2.0
        return out

    def describe(self) -> dict:
        info = {
            "kind": "star" if self.star else "subinstance",
            "n_clients_per_copy": self.n_clients,
            "n_centers_per_copy": self.n_centers,
            "copies": self.copies,
            "z": self.z,
            "edge_probability": EDGE_PROBABILITY,
        }
        if self.star:
            info["d_inf"] = self.d_inf
            info["eps"] = self.eps
            info["in_asymptotic_regime"] = self.n_centers >= self.eps**-5
        return info


def _random_edges(rng, copies, n_clients, n_centers):
    bits = rng.random((copies, n_clients, n_centers)) < EDGE_PROBABILITY
    return np.packbits(bits, axis=-1)


def gen_subinstance(n_clients: int, n_centers: int, z: int, seed) -> DiscreteInstance:
    """One random bipartite instance (k = 1 building block)."""
    z = check_power(z)
    if n_clients < 1 or n_centers < 1:
        raise InvalidParameter("need at least one client and one center")
    rng = np.random.default_rng(seed)
    return DiscreteInstance(n_clients, n_centers, z, 1, _random_edges(rng, 1, n_clients, n_centers))


def default_clients_per_copy(eps: float, n_centers: int) -> int:
    """n_U = 10 eps^-2 ln|C|, rounded up."""
    return max(1, math.ceil(10.0 * eps**-2 * math.log(n_centers)))


def gen_star_instance(
    k: int, eps: float, n_centers_per_copy: int, z: int, seed, n_clients_per_copy: int | None = None
) -> DiscreteInstance:
    """k independent copies joined through the hub centers, D_inf = n_U * k / eps."""
    z = check_power(z)
    if k < 1 or n_centers_per_copy < 1:
        raise InvalidParameter("k and the per-copy center count must be positive")
    if not 0 < eps < 0.5:
        raise InvalidParameter(f"eps must lie in (0, 1/2), got {eps}")
    n_u = n_clients_per_copy or default_clients_per_copy(eps, n_centers_per_copy)
    rng = np.random.default_rng(seed)
    edges = _random_edges(rng, k, n_u, n_centers_per_copy)
    return DiscreteInstance(n_u, n_centers_per_copy, z, k, edges, d_inf=n_u * k / eps, eps=float(eps))


class DiscreteCost(NamedTuple):
    cost: float
    short_weight: float  # weight of clients whose nearest selected center is at distance 1
    total_weight: float


def discrete_cost_breakdown(inst: DiscreteInstance, S, omega=None, round_to: float | None = None) -> DiscreteCost:
    """Cost of all clients (or the weighted subset ``omega``) against center ids S.

    ``omega`` is a pair (client ids, weights). ``round_to`` rounds every weight to
    the nearest multiple of that value first.
    """
    S = [int(c) for c in S]
    if not S:
        raise InvalidParameter("S must contain at least one center")
    best = inst.powered_distances(S[0])
    for c in S[1:]:
        best = np.minimum(best, inst.powered_distances(c))
    if omega is None:
        clients = np.arange(inst.total_clients)
        weights = np.ones(inst.total_clients)
    else:
        clients = np.asarray(omega[0], dtype=np.int64)
        weights = np.asarray(omega[1], dtype=np.float64)
        if clients.shape != weights.shape:
            raise InvalidParameter("omega needs one weight per client")
        if np.any((clients < 0) | (clients >= inst.total_clients)):
            raise InvalidParameter("omega refers to unknown clients")
    if round_to is not None:
        weights = np.round(weights / round_to) * round_to
    vals = best[clients]
    cost = math.fsum((weights * vals).tolist())
    short = math.fsum(weights[vals == 1.0].tolist())
    return DiscreteCost(cost, short, math.fsum(weights.tolist()))


def discrete_cost(inst: DiscreteInstance, S, omega=None, round_to: float | None = None) -> float:
    return discrete_cost_breakdown(inst, S, omega, round_to).cost


def star_reference_costs(inst: DiscreteInstance) -> dict:
    """Closed forms for the three hub solutions of a star instance."""
    n = float(inst.copies * inst.n_clients)
    return {
        "squares": 2.0 * n,
        "hub": n * inst.d_inf**inst.z,
        "far_hub": n * (4.0 * inst.d_inf) ** inst.z,
    }
