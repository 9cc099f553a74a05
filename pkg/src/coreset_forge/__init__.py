"""Coresets for (k, z)-clustering by group-wise sensitivity sampling, with lower-bound
instances and an empirical distortion audit."""

from .errors import (
    CoresetError,
    DimensionMismatch,
    EmptyGroupError,
    InvalidParameter,
    PointFormatError,
    UndefinedDistortion,
)
from .evaluate import (
    DistortionReport,
    SolutionSuite,
    audit,
    audit_solutions,
    coreset_cost,
    distortion,
    generate_suite,
    lloyd_refine,
    uniform_baseline,
)
from .metric import PointSet, PowerParams, Solution, assign, cost_vector, point_cost, power_triangle_bound, total_cost
from .partition import GroupCatalog, GroupKey, outer_support, partition, ring_decompose
from .projection import ProjectionMap, apply, make_projection
from .sampler import (
    SamplerConfig,
    WeightedCoreset,
    build_coreset,
    default_delta,
    preprocess,
    proxy_centers,
    sample_group,
)
from .seeding import Clustering, build_clustering, dz_seed, local_search_refine, reference_solution

__version__ = "0.1.0"
