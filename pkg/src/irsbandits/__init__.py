"""Budgeted Bayesian bandits with information-relaxation sampling.

Policies, Monte-Carlo performance bounds and exact small-instance oracles
for multi-armed bandits whose plays consume a finite budget.
"""

from ._backend import BACKEND
from .bayes import (ArmSpec, BanditInstance, BeliefState, RewardModel, bernoulli_instance,
                    estimate_path, posterior_mean, update_belief)
from .bounds import BoundEstimate, estimate_bound, estimate_bounds, suboptimality_gap_bound
from .config import ExperimentConfig, load_config, parse_config
from .errors import CapabilityError, ConfigError
from .harness import RegretReport, budget_sweep, run_episode, run_experiment, simulate
from .oracle import bellman_vstar, exact_bound, exact_policy_value
from .policies import POLICIES, PolicyConfig, PolicyState, get_policy
from .random_cost import (RANDOM_COST_POLICIES, CostModel, RandomCostArm, RandomCostInstance,
                          RandomCostState, get_random_cost_policy)
from .solvers import allocation_dp, emax_lattice_dp, expected_max_ratio, index_bisect

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ArmSpec", "BanditInstance", "BeliefState", "RewardModel", "bernoulli_instance",
    "estimate_path", "posterior_mean", "update_belief", "BoundEstimate", "estimate_bound",
    "estimate_bounds", "suboptimality_gap_bound", "ExperimentConfig", "load_config",
    "parse_config", "CapabilityError", "ConfigError", "RegretReport", "budget_sweep",
    "run_episode", "run_experiment", "simulate", "bellman_vstar", "exact_bound",
    "exact_policy_value", "POLICIES", "PolicyConfig", "PolicyState", "get_policy",
    "RANDOM_COST_POLICIES", "CostModel", "RandomCostArm", "RandomCostInstance",
    "RandomCostState", "get_random_cost_policy", "allocation_dp", "emax_lattice_dp",
    "expected_max_ratio", "index_bisect",
]
