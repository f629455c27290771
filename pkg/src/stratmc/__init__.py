"""Stratified Monte Carlo estimators, their exact laws, and order checks."""

from .discrete import DiscreteDist
from .errors import (
    AllocationError,
    DimensionError,
    EmptyPieceError,
    GeneratorInfeasibleError,
    MassMismatchError,
    NotARefinementError,
    PreconditionError,
    RangeError,
    StratError,
    SupportSizeError,
)
from .estimators import (
    DrawRecord,
    Replication,
    estimate_integral,
    estimate_integral_censored,
    estimate_sup,
    estimate_sup_censored,
    replicate,
)
from .exact_dist import (
    CensoredSupCdf,
    cdf_sup_censored,
    dist_integral,
    dist_integral_censored,
    dist_sup,
    lp_loss,
    poisson_binomial,
    variance_integral_noisy,
)
from .function_model import FunctionOracle, NoiseSpec, PiecewiseConstantFn
from .measure_space import (
    BaseMeasure,
    Box,
    Partition,
    RefinementWitness,
    Stratum,
    coarsest_partition,
    finest_partition,
    merge_strata,
    partition_from_json,
    refinement_witness,
    split_stratum,
)
from .orders import (
    OrderVerdict,
    dkw_validate,
    dominates_cx,
    dominates_icx,
    dominates_st,
    dominates_st_cdf,
    karlin_novikoff_check,
    majorizes,
    mixture_max_check,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationError",
    "BaseMeasure",
    "Box",
    "CensoredSupCdf",
    "DimensionError",
    "DiscreteDist",
    "DrawRecord",
    "EmptyPieceError",
    "FunctionOracle",
    "GeneratorInfeasibleError",
    "MassMismatchError",
    "NoiseSpec",
    "NotARefinementError",
    "OrderVerdict",
    "Partition",
    "PiecewiseConstantFn",
    "PreconditionError",
    "RangeError",
    "RefinementWitness",
    "Replication",
    "StratError",
    "Stratum",
    "SupportSizeError",
    "cdf_sup_censored",
    "coarsest_partition",
    "dist_integral",
    "dist_integral_censored",
    "dist_sup",
    "dkw_validate",
    "dominates_cx",
    "dominates_icx",
    "dominates_st",
    "dominates_st_cdf",
    "estimate_integral",
    "estimate_integral_censored",
    "estimate_sup",
    "estimate_sup_censored",
    "finest_partition",
    "karlin_novikoff_check",
    "lp_loss",
    "majorizes",
    "merge_strata",
    "mixture_max_check",
    "partition_from_json",
    "poisson_binomial",
    "refinement_witness",
    "replicate",
    "split_stratum",
    "variance_integral_noisy",
]
