"""treemax: a numerical laboratory for sharp two-weight bounds of
fractional maximal operators on tree-structured probability spaces."""

from .bellman import (
    BellmanPoint,
    bellman_cap,
    bellman_lower,
    bliss_functional,
    bliss_functional_raw,
    bliss_inequality_check,
    check_merge_superadditivity,
    check_tail_extension,
)
from .constants import Exponents, cpq, sharpness_regime
from .maximal import (
    Linearization,
    SimpleFunction,
    average,
    frac_maximal,
    frac_maximal_by_scan,
    linearize,
    node_integrals,
    weighted_average,
)
from .sharpness import (
    ExtremalWeights,
    extremal_pair,
    frac_sigma_average,
    indicator_prefix_trend,
    jensen_route_gap,
    jensen_route_rhs,
    lower_bound_trial,
    power_profile,
    power_substitution_check,
    ratio_experiment,
    ratio_vs_refinement,
    reciprocal_convexity_gap,
    reciprocal_convexity_inner,
    technical_gap_grid,
    verify_extremal_testing,
)
from .stepfun import StepFunction, concat, rearrange_decreasing, running_average
from .tree import (
    TreeNode,
    TreeSpace,
    ancestors,
    audit_tree,
    build_random_tree,
    build_sharpness_tree,
    build_uniform_dyadic,
)
from .weights import (
    CarlesonSequence,
    WeightPair,
    carleson_constant,
    carleson_from_linearization,
    dual_weight,
    embedding_check,
    main_inequality_check,
    operator_norm_lower,
    testing_constant,
    testing_ratios,
    weighted_lp_norm,
)

__version__ = "0.1.0"
