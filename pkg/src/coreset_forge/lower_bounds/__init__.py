from .anticoncentration import MonteCarloEstimate, anticoncentration_mc, fitted_rate, wilson_interval
from .basis import (
    BasisInstance,
    gen_basis_instance,
    hadamard_cost,
    hadamard_solutions,
    orthogonal_center_solution,
    orthogonal_cost,
    sylvester_hadamard,
    unit_center_bound,
)
from .discrete import (
    DiscreteInstance,
    discrete_cost,
    discrete_cost_breakdown,
    gen_star_instance,
    gen_subinstance,
    star_reference_costs,
)
