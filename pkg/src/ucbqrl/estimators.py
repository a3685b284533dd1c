"""scikit-learn style wrappers around the planner and the learner.

``fit`` takes an MDP (object, dict, or instance-file path) in place of a
design matrix; ``predict`` maps ``(stage, state)`` rows to actions; ``score``
is the exact tau-quantile of the fitted policy on a (possibly different) MDP.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_level, check_mdp, check_positive_int, check_stage_state
from .driver import PLANNER_MODES, learn
from .optimism import margin_kappa
from .planning import brute_force_best, eval_policy, extract_greedy, qmdp_plan


class _PolicyMixin:
    def predict(self, X):
        check_is_fitted(self, "policy_")
        H, S = self.policy_.actions.shape
        X = check_stage_state(X, H, S)
        return self.policy_.actions[X[:, 0], X[:, 1]]

    def score(self, X, y=None):
        check_is_fitted(self, "policy_")
        m = check_mdp(X)
        return eval_policy(m.kernel, m.rewards, self.policy_).value(0, m.start_state, self.tau)


class QuantilePlanner(_PolicyMixin, BaseEstimator):
    """Plan for the tau-quantile of the return with a known kernel.

    Parameters
    ----------
    tau : float
        Target quantile level in (0, 1).
    method : {"envelope", "brute_force"}
        ``envelope`` runs the quantile dynamic program and extracts the
        tau-greedy policy; ``brute_force`` enumerates every deterministic
        Markov policy.
    """

    def __init__(self, tau=0.5, method="envelope"):
        self.tau = tau
        self.method = method

    def fit(self, X, y=None):
        tau = check_level(self.tau, "tau")
        if self.method not in PLANNER_MODES:
            raise ValueError(f"method must be one of {PLANNER_MODES}, got {self.method!r}")
        m = check_mdp(X)
        self.value_table_ = qmdp_plan(m.kernel, m.rewards)
        if self.method == "brute_force":
            self.policy_, self.value_ = brute_force_best(m, tau)
        else:
            self.policy_ = extract_greedy(self.value_table_, m.kernel, m.rewards, tau)
            self.value_ = self.value_table_.value(0, m.start_state, tau)
        self.n_states_, self.n_actions_, self.horizon_ = m.num_states, m.num_actions, m.horizon
        return self


class UCBQRL(_PolicyMixin, BaseEstimator):
    """Optimistic learner for the tau-quantile objective.

    ``fit`` simulates ``n_episodes`` episodes on the given instance and keeps
    the per-episode regret records in ``records_``.
    """

    def __init__(self, tau=0.5, delta=0.1, n_episodes=100, seed=0, planner="envelope"):
        self.tau = tau
        self.delta = delta
        self.n_episodes = n_episodes
        self.seed = seed
        self.planner = planner

    def fit(self, X, y=None):
        tau = check_level(self.tau, "tau")
        delta = check_level(self.delta, "delta")
        episodes = check_positive_int(self.n_episodes, "n_episodes")
        if self.planner not in PLANNER_MODES:
            raise ValueError(f"planner must be one of {PLANNER_MODES}, got {self.planner!r}")
        m = check_mdp(X)
        self.kappa_ = margin_kappa(m)
        self.records_, self.policy_ = learn(
            m, tau, delta, episodes, self.seed, self.planner, self.kappa_
        )
        self.cum_regret_ = self.records_[-1].cum_regret
        self.regret_curve_ = np.array([r.cum_regret for r in self.records_])
        self.n_states_, self.n_actions_, self.horizon_ = m.num_states, m.num_actions, m.horizon
        return self
