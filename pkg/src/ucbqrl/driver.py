"""The learning loop, exact regret accounting and result files."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .mdp import MarkovPolicy, TabularMDP, read_mdp, simulate_episode
from .optimism import (
    ConfidenceSpec,
    EmpiricalModel,
    brute_force_optimistic,
    confidence_violations,
    margin_kappa,
    optimistic_plan,
    regret_bound,
    update_counts,
)
from .planning import MAX_POLICIES, brute_force_best, eval_policy, qmdp_plan

log = logging.getLogger(__name__)

PLANNER_MODES = ("envelope", "brute_force")
CSV_COLUMNS = (
    "episode",
    "v_star",
    "v_pi_t",
    "optimistic_value",
    "regret_t",
    "cum_regret",
    "bound_t",
    "confidence_event_ok",
)


class OracleMismatchError(RuntimeError):
    """The DP optimum and the enumerated Markov optimum disagree."""


@dataclass(frozen=True)
class ExperimentConfig:
    mdp_path: Optional[str]
    tau: float
    delta: float
    episodes: int
    seed: int = 0
    planner_mode: str = "envelope"
    output_path: Optional[str] = None

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau!r}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.episodes < 1:
            raise ValueError(f"episodes must be >= 1, got {self.episodes!r}")
        if self.planner_mode not in PLANNER_MODES:
            raise ValueError(f"planner_mode must be one of {PLANNER_MODES}")


@dataclass(frozen=True)
class RegretRecord:
    episode: int
    v_star: float
    v_pi_t: float
    optimistic_value: float
    regret_t: float
    cum_regret: float
    bound_t: float
    confidence_event_ok: bool
    # not written to CSV
    representative_value: float = float("nan")
    violating_cells: int = 0
    policy: Optional[MarkovPolicy] = None


def optimal_value(m: TabularMDP, tau: float) -> float:
    """Optimal tau-quantile at the start state.

    The DP value is cross-checked against exhaustive enumeration when that
    is affordable; a disagreement raises :class:`OracleMismatchError`.
    """
    v_dp = qmdp_plan(m.kernel, m.rewards).value(0, m.start_state, tau)
    if m.n_policies <= MAX_POLICIES:
        pol, v_bf = brute_force_best(m, tau)
        if abs(v_dp - v_bf) > 1e-9:
            raise OracleMismatchError(
                f"tau={tau}: DP value {v_dp!r} != best Markov policy value {v_bf!r} "
                f"(policy {pol.actions.tolist()})"
            )
    return v_dp


def learn(
    m: TabularMDP,
    tau: float,
    delta: float,
    episodes: int,
    seed: int = 0,
    planner_mode: str = "envelope",
    kappa: Optional[float] = None,
) -> tuple[list[RegretRecord], MarkovPolicy]:
    """Run the optimistic learner for ``episodes`` episodes on a known instance.

    Returns the per-episode records and the policy planned after the last
    episode.  Rollouts only feed the counts; all values in the records are
    exact evaluations under the true kernel.
    """
    m.check()
    H, S, A = m.horizon, m.num_states, m.num_actions
    s0 = m.start_state
    spec = ConfidenceSpec(delta, tau, S, A, episodes, H)
    v_star = optimal_value(m, tau)
    if kappa is None:
        kappa = margin_kappa(m)
    bounds = regret_bound(spec, kappa, range(1, episodes + 1))

    true_values: dict = {}

    def true_value(pol: MarkovPolicy) -> float:
        key = pol.key()
        if key not in true_values:
            true_values[key] = eval_policy(m.kernel, m.rewards, pol).value(0, s0, tau)
        return true_values[key]

    if planner_mode not in PLANNER_MODES:
        raise ValueError(f"planner_mode must be one of {PLANNER_MODES}")

    memo: dict = {}

    def plan(em):
        out = optimistic_plan(em, spec, m.rewards, tau, memo)
        if planner_mode == "brute_force":
            pol, val = brute_force_optimistic(em, spec, m, tau)
            return val, pol, out.kernel
        return out.value(s0, tau), out.policy, out.kernel

    em = EmpiricalModel.empty(S, A, H)
    opt_val, _, rep_kernel = plan(em)
    pol = MarkovPolicy.zeros(H, S)
    records = []
    cum = 0.0
    for t in range(episodes):
        violations = confidence_violations(m.kernel, em, spec)
        v_pi = true_value(pol)
        rep_val = eval_policy(rep_kernel, m.rewards, pol).value(0, s0, tau)
        regret = v_star - v_pi
        cum += regret
        records.append(
            RegretRecord(
                episode=t,
                v_star=v_star,
                v_pi_t=v_pi,
                optimistic_value=opt_val,
                regret_t=regret,
                cum_regret=cum,
                bound_t=bounds[t],
                confidence_event_ok=violations == 0,
                representative_value=rep_val,
                violating_cells=violations,
                policy=pol,
            )
        )
        trace = simulate_episode(m, pol, (seed, t))
        em = update_counts(em, trace)
        opt_val, pol, rep_kernel = plan(em)
    return records, pol


def run_instance(
    m: TabularMDP,
    tau: float,
    delta: float,
    episodes: int,
    seed: int = 0,
    planner_mode: str = "envelope",
    kappa: Optional[float] = None,
) -> list[RegretRecord]:
    return learn(m, tau, delta, episodes, seed, planner_mode, kappa)[0]


def run(cfg: ExperimentConfig) -> list[RegretRecord]:
    m = read_mdp(cfg.mdp_path)
    records = run_instance(m, cfg.tau, cfg.delta, cfg.episodes, cfg.seed, cfg.planner_mode)
    if cfg.output_path:
        write_records(records, cfg.output_path)
    return records


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_records(records: Sequence[RegretRecord], path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in records:
                w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror}") from exc


def read_records(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_bound_curve(spec: ConfidenceSpec, kappa: float, T_axis: Sequence[int], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("episodes", "bound"))
    for T, b in zip(T_axis, regret_bound(spec, kappa, T_axis)):
        w.writerow((T, _fmt(b)))


def weissman_mc(p, n: int, eps: float, trials: int, seed: int = 0) -> float:
    """Monte Carlo rate of ``||p_hat - p||_1 >= eps`` for ``n`` categorical draws."""
    if trials < 1000:
        raise ValueError(f"need at least 1000 trials, got {trials}")
    p = np.asarray(p, dtype=float)
    rng = np.random.Generator(np.random.Philox(seed))
    counts = rng.multinomial(n, p, size=trials)
    dev = np.abs(counts / n - p).sum(axis=1)
    return float(np.mean(dev >= eps - 1e-12))


def weissman_bound(S: int, n: int, eps: float) -> float:
    return (2**S - 2) * float(np.exp(-n * eps**2 / 2))
