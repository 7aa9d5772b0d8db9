"""Causal transition model estimation and planning over classes of discrete factored MDPs."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .factored_mdp import (
    Environment,
    FactoredSpace,
    FactoredTransitionModel,
    FeatureVector,
    TabularTransitionModel,
    enumerate_assignments,
    sample_transition,
    sup_l1_distance,
    to_tabular,
    transition_prob,
)
from .independence import (
    EmpiricalJoint,
    TestVerdict,
    independence_test,
    l1_to_product_of_marginals,
    tester_sample_size,
)
from .structure import (
    CausalGraph,
    StructureReport,
    epsilon_dependency_subgraph,
    estimate_structure,
    graph_edit_distance,
    intersect_graphs,
)
from .bn import bn_l1_error, estimate_bn, per_cell_budget
from .pipeline import (
    Budget,
    CtmResult,
    EnvironmentClass,
    compute_budgets,
    diversity_check,
    estimate_ctm,
    evenness_residual,
    lambda_sufficiency,
    mixture_sampler,
)
from .planning import (
    PlanningTask,
    Policy,
    ValueTable,
    epsilon_lambda_bound,
    evaluate_policy,
    suboptimality_gap,
    value_iteration,
)
from .universe import (
    LinearGaussianSpec,
    UniverseSpec,
    build_wellness_universe,
    gaussian_bin_cpt,
    random_universe,
)
