"""Exact quantile dynamic programming with a known kernel."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .dist import (
    PROB_TOL,
    FiniteDist,
    _check_simplex,
    cdf_matrix,
    dirac,
    mix,
    quantile,
    quantiles,
    shift,
    union_support,
    upper_envelope,
)
from .mdp import MarkovPolicy, TabularMDP

MAX_POLICIES = 10**6
TIE_TOL = 1e-12


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ValueTable:
    """Return laws ``dists[h][s]`` for h = 0..H; the stage-H row is Dirac(0)."""

    dists: tuple

    @property
    def horizon(self) -> int:
        return len(self.dists) - 1

    def value(self, h: int, s: int, tau: float) -> float:
        return quantile(self.dists[h][s], tau)

    def __getitem__(self, h):
        return self.dists[h]


def _shapes(kernel: np.ndarray, rewards: np.ndarray) -> tuple[int, int, int]:
    kernel = np.asarray(kernel)
    rewards = np.asarray(rewards)
    if rewards.ndim != 3 or kernel.shape != rewards.shape + (rewards.shape[1],):
        raise ValueError(
            f"kernel {kernel.shape} and rewards {rewards.shape} are not H x S x A x S / H x S x A"
        )
    return rewards.shape


def backup(row: np.ndarray, reward: float, continuation: Sequence[FiniteDist]) -> FiniteDist:
    """Law of ``reward + Z`` where Z is the continuation mixture under ``row``."""
    return shift(mix(row, continuation), reward)


def eval_policy(kernel, rewards, pol: MarkovPolicy) -> ValueTable:
    """Exact return law of ``pol`` from every (stage, state)."""
    H, S, A = _shapes(kernel, rewards)
    acts = pol.actions
    if acts.shape != (H, S):
        raise ValueError(f"policy shape {acts.shape} does not match (H, S) = {(H, S)}")
    if acts.min() < 0 or acts.max() >= A:
        raise ValueError("policy action out of range")
    nxt = [dirac(0.0)] * S
    table = [nxt]
    for h in range(H - 1, -1, -1):
        nxt = [backup(kernel[h, s, acts[h, s]], rewards[h, s, acts[h, s]], nxt) for s in range(S)]
        table.append(nxt)
    return ValueTable(tuple(reversed(table)))


def qmdp_plan(kernel, rewards) -> ValueTable:
    """Optimal quantile curves: at each (h, s) the pointwise-in-q envelope over actions."""
    H, S, A = _shapes(kernel, rewards)
    nxt = [dirac(0.0)] * S
    table = [nxt]
    for h in range(H - 1, -1, -1):
        nxt = [
            upper_envelope([backup(kernel[h, s, a], rewards[h, s, a], nxt) for a in range(A)])
            for s in range(S)
        ]
        table.append(nxt)
    return ValueTable(tuple(reversed(table)))


def opt_allocation(p, continuations: Sequence[FiniteDist], tau: float, grid_n: int = 1000) -> float:
    """Budgeted allocation program over next-state quantile levels.

    Maximises ``min_{i: q_i != 1} V_{q_i}(s_i)`` subject to ``sum_i p_i q_i <= tau``.
    A value ``v`` is reachable iff the levels ``q_i`` can sit just above
    ``P(X_i < v)``, i.e. iff ``sum_i p_i P(X_i < v) < tau``; the answer is the
    largest reachable support point.  ``grid_n`` is only used by
    :func:`opt_allocation_grid`.
    """
    p = np.asarray(p, dtype=float)
    _check_simplex(p, "p")
    if len(p) != len(continuations):
        raise ValueError("p and continuations differ in length")
    if not 0 < tau < 1:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    used = [i for i in range(len(p)) if p[i] > 0]
    dists = [continuations[i] for i in used]
    w = p[used]
    xs = union_support(dists)
    # P(X_i < xs[k]) = F_i(xs[k-1]) on the merged grid
    below = np.vstack([np.zeros(len(dists)), cdf_matrix(dists, xs)[:-1]])
    budget = below @ w
    feasible = np.flatnonzero(budget < tau - PROB_TOL)
    return float(xs[feasible[-1]])


def opt_allocation_grid(p, continuations: Sequence[FiniteDist], tau: float, grid_n: int = 1000) -> float:
    """Brute-force the allocation program on the level grid {1/n, ..., 1} (S <= 3).

    Level 1 means "excluded from the minimum".  Levels are never 0, whose
    quantile is -inf.
    """
    p = np.asarray(p, dtype=float)
    S = len(p)
    if S > 3:
        raise ValueError("grid search is limited to S <= 3")
    levels = np.arange(1, grid_n + 1) / grid_n
    vals = [np.where(levels < 1.0, quantiles(c, levels), np.inf) for c in continuations]
    slack = tau + PROB_TOL
    if S == 1:
        ok = p[0] * levels <= slack
        return float(vals[0][ok].max()) if ok.any() else -np.inf
    idx = np.meshgrid(*[np.arange(grid_n)] * (S - 1), indexing="ij")
    spent = sum(p[i] * levels[idx[i]] for i in range(S - 1))
    inner = np.minimum.reduce([vals[i][idx[i]] for i in range(S - 1)])
    remaining = slack - spent
    # the last state takes the largest affordable level
    if p[-1] > 0:
        k = np.floor(np.maximum(remaining, 0.0) / p[-1] * grid_n + 1e-9).astype(int)
        k = np.minimum(k, grid_n)
        last = np.where(k >= 1, vals[-1][np.maximum(k, 1) - 1], -np.inf)
    else:
        last = np.full(remaining.shape, np.inf)
    total = np.where(remaining >= 0, np.minimum(inner, last), -np.inf)
    return float(total.max())


def greedy_actions(q_values: np.ndarray) -> np.ndarray:
    """Argmax over the last axis, ties (within 1e-12) to the lowest index."""
    top = q_values.max(axis=-1, keepdims=True)
    return np.argmax(q_values >= top - TIE_TOL, axis=-1)


def extract_greedy(vt: ValueTable, kernel, rewards, tau: float) -> MarkovPolicy:
    """tau-greedy decision rule with respect to the continuation laws in ``vt``."""
    H, S, A = _shapes(kernel, rewards)
    if vt.horizon != H or len(vt[0]) != S:
        raise ValueError("value table does not match the kernel")
    q = np.empty((H, S, A))
    for h in range(H):
        for s in range(S):
            for a in range(A):
                q[h, s, a] = rewards[h, s, a] + quantile(mix(kernel[h, s, a], vt[h + 1]), tau)
    return MarkovPolicy(greedy_actions(q))


def _guard(m: TabularMDP) -> None:
    if m.n_policies > MAX_POLICIES:
        raise EnumerationTooLarge(
            f"A^(S*H) = {m.num_actions}^{m.num_states * m.horizon} policies exceeds {MAX_POLICIES}"
        )


def iter_start_laws(m: TabularMDP) -> Iterator[tuple[tuple, FiniteDist]]:
    """Yield ``(flat action table, return law from the start state)`` for every
    deterministic Markov policy, in lexicographic order of the h-major table.

    Laws of policy suffixes are cached, so shared tails are evaluated once.
    """
    _guard(m)
    H, S, A = m.horizon, m.num_states, m.num_actions
    cache: dict = {(): [dirac(0.0)] * S}

    def laws(suffix: tuple) -> list:
        # suffix holds decisions for stages H - len(suffix)/S .. H-1
        hit = cache.get(suffix)
        if hit is not None:
            return hit
        h = H - len(suffix) // S
        head, tail = suffix[:S], suffix[S:]
        nxt = laws(tail)
        out = [backup(m.kernel[h, s, head[s]], m.rewards[h, s, head[s]], nxt) for s in range(S)]
        cache[suffix] = out
        return out

    s0 = m.start_state
    for table in itertools.product(range(A), repeat=S * H):
        nxt = laws(table[S:])
        a = table[s0]
        yield table, backup(m.kernel[0, s0, a], m.rewards[0, s0, a], nxt)


def brute_force_best(m: TabularMDP, tau: float) -> tuple[MarkovPolicy, float]:
    """Exhaustive search over deterministic Markov policies.

    Ties go to the lexicographically smallest action table.
    """
    best_tab, best_val = None, -np.inf
    for table, law in iter_start_laws(m):
        v = quantile(law, tau)
        if v > best_val + TIE_TOL:
            best_tab, best_val = table, v
    return MarkovPolicy(np.array(best_tab).reshape(m.horizon, m.num_states)), best_val


def brute_force_values(m: TabularMDP, taus: Sequence[float]) -> np.ndarray:
    """Best achievable value for each level in ``taus`` (one enumeration pass)."""
    best = np.full(len(taus), -np.inf)
    for _, law in iter_start_laws(m):
        best = np.maximum(best, [quantile(law, t) for t in taus])
    return best
