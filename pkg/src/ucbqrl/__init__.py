"""Optimistic reinforcement learning for quantile objectives in tabular MDPs."""

from .dist import (
    FiniteDist,
    cdf,
    cdf_left,
    dirac,
    inv_sample,
    jump,
    make_dist,
    mix,
    quantile,
    shift,
    tv,
    upper_envelope,
    w1,
)
from .driver import ExperimentConfig, RegretRecord, run, run_instance, weissman_mc, write_records
from .estimators import QuantilePlanner, UCBQRL
from .mdp import MarkovPolicy, TabularMDP, gen_random, read_mdp, simulate_episode, validate, write_mdp
from .optimism import (
    ConfidenceSpec,
    EmpiricalModel,
    margin_kappa,
    min_mixture_cdf,
    optimistic_plan,
    radius,
    regret_bound,
    update_counts,
)
from .planning import (
    ValueTable,
    brute_force_best,
    eval_policy,
    extract_greedy,
    opt_allocation,
    qmdp_plan,
)

__version__ = "0.1.0"

__all__ = [
    "brute_force_best",
    "cdf",
    "cdf_left",
    "ConfidenceSpec",
    "dirac",
    "EmpiricalModel",
    "eval_policy",
    "ExperimentConfig",
    "extract_greedy",
    "FiniteDist",
    "gen_random",
    "inv_sample",
    "jump",
    "make_dist",
    "margin_kappa",
    "MarkovPolicy",
    "min_mixture_cdf",
    "mix",
    "opt_allocation",
    "optimistic_plan",
    "qmdp_plan",
    "quantile",
    "QuantilePlanner",
    "radius",
    "read_mdp",
    "regret_bound",
    "RegretRecord",
    "run",
    "run_instance",
    "shift",
    "simulate_episode",
    "TabularMDP",
    "tv",
    "UCBQRL",
    "update_counts",
    "upper_envelope",
    "validate",
    "ValueTable",
    "w1",
    "weissman_mc",
    "write_mdp",
    "write_records",
]
