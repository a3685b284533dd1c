"""Optimistic planning over l1 confidence balls around the empirical kernel."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dist import (
    FiniteDist,
    _check_simplex,
    _from_cdf_values,
    cdf_matrix,
    dirac,
    mix,
    quantile,
    shift,
    union_support,
    upper_envelope,
)
from .mdp import EpisodeTrace, MarkovPolicy, TabularMDP
from .planning import TIE_TOL, ValueTable, _guard, greedy_actions


@dataclass(frozen=True)
class ConfidenceSpec:
    """Confidence level, target level and problem sizes that fix the radius.

    ``c`` is the smallest constant the high-probability argument admits.
    """

    delta: float
    tau: float
    S: int
    A: int
    T: int
    H: int

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau!r}")
        if min(self.S, self.A, self.T, self.H) < 1:
            raise ValueError("S, A, T, H must be positive")

    @property
    def log_term(self) -> float:
        """log(2 S A T H / delta)."""
        return math.log(2 * self.S * self.A * self.T * self.H / self.delta)

    @property
    def c(self) -> float:
        top = 2.0
        # the union-bound term vanishes for S = 1 (a single next state)
        if self.S > 1:
            n_cells = self.S * self.A * self.T * self.H * (2**self.S - 2)
            top = max(top, math.sqrt(2 * math.log(n_cells / self.delta)))
        return top / math.sqrt(self.log_term)

    def with_T(self, T: int) -> "ConfidenceSpec":
        return ConfidenceSpec(self.delta, self.tau, self.S, self.A, int(T), self.H)


def radius(spec: ConfidenceSpec, n) -> float:
    """l1 radius ``c * sqrt(log(2SATH/delta) / max(1, n))``."""
    n = np.maximum(1, np.asarray(n))
    out = spec.c * np.sqrt(spec.log_term / n)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    pair_counts: np.ndarray
    triple_counts: np.ndarray

    @classmethod
    def empty(cls, S: int, A: int, H: int) -> "EmpiricalModel":
        return cls(np.zeros((H, S, A), dtype=np.int64), np.zeros((H, S, A, S), dtype=np.int64))

    @property
    def p_hat(self) -> np.ndarray:
        """Empirical kernel; unvisited pairs get the row with all mass on state 0."""
        n = self.pair_counts[..., None]
        p = self.triple_counts / np.maximum(1, n)
        unvisited = self.pair_counts == 0
        p[unvisited] = 0.0
        p[unvisited, 0] = 1.0
        return p


def update_counts(em: EmpiricalModel, trace: EpisodeTrace) -> EmpiricalModel:
    pair = em.pair_counts.copy()
    triple = em.triple_counts.copy()
    H, S, A = pair.shape
    for st in trace:
        if not (0 <= st.h < H and 0 <= st.state < S and 0 <= st.action < A and 0 <= st.next_state < S):
            raise IndexError(f"trace step out of range: {st}")
        pair[st.h, st.state, st.action] += 1
        triple[st.h, st.state, st.action, st.next_state] += 1
    return EmpiricalModel(pair, triple)


def _min_mixture_cdf_rows(p_hat: np.ndarray, rad: float, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise greedy minimiser of ``p @ F[k]`` over the l1 ball of radius ``rad``.

    Mass (at most rad/2) moves onto the lowest-F state, taken from the
    highest-F states first.
    """
    K, S = F.shape
    order = np.argsort(F, axis=1, kind="stable")
    ps = p_hat[order]  # p_hat permuted per row, ascending F
    add = np.minimum(rad / 2.0, 1.0 - ps[:, 0])
    # walk from the highest F down to the second lowest, draining mass
    rev = ps[:, :0:-1]
    drained_before = np.cumsum(rev, axis=1) - rev
    take = np.clip(add[:, None] - drained_before, 0.0, rev)
    new = ps.copy()
    new[:, 0] += add
    new[:, :0:-1] -= take
    new = np.maximum(new, 0.0)
    p = np.empty_like(new)
    np.put_along_axis(p, order, new, axis=1)
    return np.einsum("ks,ks->k", p, F), p


def min_mixture_cdf(p_hat, rad: float, F_values) -> tuple[float, np.ndarray]:
    """Minimise ``sum_i p_i F_i`` over ``{p in simplex : ||p - p_hat||_1 <= rad}``."""
    p_hat = np.asarray(p_hat, dtype=float)
    _check_simplex(p_hat, "p_hat")
    if rad < 0:
        raise ValueError(f"radius must be nonnegative, got {rad!r}")
    F = np.asarray(F_values, dtype=float)
    if F.shape != p_hat.shape:
        raise ValueError("F_values and p_hat differ in length")
    val, p = _min_mixture_cdf_rows(p_hat, rad, F[None, :])
    return float(val[0]), p[0]


def _scan_grid(continuation: Sequence[FiniteDist]) -> tuple[np.ndarray, np.ndarray]:
    # CDFs are step functions, so their minima only change at support atoms
    xs = union_support(continuation)
    return xs, cdf_matrix(continuation, xs)


def optimistic_continuation(
    p_hat: np.ndarray, rad: float, continuation: Sequence[FiniteDist], grid=None
) -> tuple[FiniteDist, np.ndarray, np.ndarray]:
    """Lowest continuation CDF reachable inside the ball, as a distribution.

    Returns the law, the scan points and the per-point minimising rows.
    ``grid`` may carry a precomputed ``_scan_grid(continuation)``.
    """
    xs, F = grid if grid is not None else _scan_grid(continuation)
    values, rows = _min_mixture_cdf_rows(p_hat, rad, F)
    if np.any(np.diff(values) < -1e-12) or abs(values[-1] - 1.0) > 1e-9:
        raise AssertionError("optimistic CDF envelope is not a proper CDF")
    return _from_cdf_values(xs, values), xs, rows


def _representative_row(law: FiniteDist, xs: np.ndarray, rows: np.ndarray, tau: float) -> np.ndarray:
    # the row certifying quantile >= x* keeps the CDF below tau just left of x*,
    # i.e. at the last scan point strictly below x*
    x_star = quantile(law, tau)
    k = int(np.searchsorted(xs, x_star - 1e-12, side="left")) - 1
    return rows[max(k, 0)]


@dataclass(frozen=True)
class OptimisticPlan:
    values: ValueTable
    policy: MarkovPolicy
    kernel: np.ndarray  # representative kernel, H x S x A x S
    q_values: np.ndarray = field(repr=False)  # H x S x A optimistic tau-values

    def value(self, s: int, tau: float) -> float:
        return self.values.value(0, s, tau)

    def __iter__(self):
        return iter((self.values, self.policy, self.kernel))


def _content_key(dists: Sequence[FiniteDist]) -> tuple:
    return tuple((d.support.tobytes(), d.masses.tobytes()) for d in dists)


def optimistic_plan(
    em: EmpiricalModel, spec: ConfidenceSpec, rewards, tau: float, memo: Optional[dict] = None
) -> OptimisticPlan:
    """Backward recursion on lowest-CDF continuations, enveloped over actions.

    ``memo`` (a dict owned by the caller) reuses per-cell backups across
    calls whose empirical row, radius and continuation laws are unchanged;
    successive episodes of one run change only ``H`` cells.
    """
    rewards = np.asarray(rewards, dtype=float)
    H, S, A = rewards.shape
    if em.pair_counts.shape != (H, S, A):
        raise ValueError("count table and rewards disagree in shape")
    p_hat = em.p_hat
    rads = np.broadcast_to(radius(spec, em.pair_counts), (H, S, A))
    rep = np.empty((H, S, A, S))
    q = np.empty((H, S, A))
    nxt = [dirac(0.0)] * S
    table = [nxt]
    for h in range(H - 1, -1, -1):
        grid = None
        stage_key = _content_key(nxt) if memo is not None else None
        cur = []
        for s in range(S):
            options = []
            for a in range(A):
                key = (p_hat[h, s, a].tobytes(), float(rads[h, s, a]), stage_key, tau)
                hit = memo.get(key) if memo is not None else None
                if hit is None:
                    if grid is None:
                        grid = _scan_grid(nxt)
                    law, xs, rows = optimistic_continuation(p_hat[h, s, a], rads[h, s, a], nxt, grid)
                    hit = (law, _representative_row(law, xs, rows, tau), quantile(law, tau))
                    if memo is not None:
                        memo[key] = hit
                law, rep[h, s, a], q_cont = hit
                q[h, s, a] = rewards[h, s, a] + q_cont
                options.append(shift(law, rewards[h, s, a]))
            cur.append(upper_envelope(options))
        nxt = cur
        table.append(nxt)
    return OptimisticPlan(ValueTable(tuple(reversed(table))), MarkovPolicy(greedy_actions(q)), rep, q)


def policy_optimistic_law(em: EmpiricalModel, spec: ConfidenceSpec, rewards, pol: MarkovPolicy, s0: int) -> FiniteDist:
    """Lowest start-state return CDF of a fixed policy over all kernels in the balls."""
    rewards = np.asarray(rewards, dtype=float)
    H, S, A = rewards.shape
    p_hat = em.p_hat
    rads = np.broadcast_to(radius(spec, em.pair_counts), (H, S, A))
    nxt = [dirac(0.0)] * S
    for h in range(H - 1, -1, -1):
        grid = _scan_grid(nxt)
        nxt = [
            shift(optimistic_continuation(p_hat[h, s, a], rads[h, s, a], nxt, grid)[0], rewards[h, s, a])
            for s, a in enumerate(pol.actions[h])
        ]
    return nxt[s0]


def brute_force_optimistic(
    em: EmpiricalModel, spec: ConfidenceSpec, m: TabularMDP, tau: float
) -> tuple[MarkovPolicy, float]:
    """Joint maximum over Markov policies and kernels in the balls, by enumeration.

    For a fixed policy the rectangular ball structure makes the stage-wise
    lowest CDF exact at every threshold, so this is the exact optimistic
    value per policy.  Ties go to the lexicographically smallest table.
    """
    _guard(m)
    H, S, A = m.horizon, m.num_states, m.num_actions
    p_hat = em.p_hat
    rads = np.broadcast_to(radius(spec, em.pair_counts), (H, S, A))
    cache: dict = {(): [dirac(0.0)] * S}

    def laws(suffix):
        hit = cache.get(suffix)
        if hit is not None:
            return hit
        h = H - len(suffix) // S
        head, tail = suffix[:S], suffix[S:]
        nxt = laws(tail)
        grid = _scan_grid(nxt)
        out = [
            shift(optimistic_continuation(p_hat[h, s, a], rads[h, s, a], nxt, grid)[0], m.rewards[h, s, a])
            for s, a in enumerate(head)
        ]
        cache[suffix] = out
        return out

    s0 = m.start_state
    best, best_val = None, -np.inf
    for table in itertools.product(range(A), repeat=S * H):
        a = table[s0]
        law = optimistic_continuation(p_hat[0, s0, a], rads[0, s0, a], laws(table[S:]))[0]
        v = m.rewards[0, s0, a] + quantile(law, tau)
        if v > best_val + TIE_TOL:
            best, best_val = table, v
    return MarkovPolicy(np.array(best).reshape(H, S)), best_val


def margin_kappa(m: TabularMDP) -> float:
    """Smallest atom of any continuation mixture under any deterministic Markov policy."""
    _guard(m)
    H, S, A = m.horizon, m.num_states, m.num_actions
    kappa = 1.0
    # return laws of every policy suffix starting at stage h + 1, built backwards
    suffix_laws = [[dirac(0.0)] * S]
    for h in range(H - 1, -1, -1):
        for nxt in suffix_laws:
            for s in range(S):
                for a in range(A):
                    z = mix(m.kernel[h, s, a], nxt)
                    kappa = min(kappa, float(z.masses.min()))
        if h == 0:
            break
        suffix_laws = [
            [shift(mix(m.kernel[h, s, head[s]], nxt), m.rewards[h, s, head[s]]) for s in range(S)]
            for nxt in suffix_laws
            for head in itertools.product(range(A), repeat=S)
        ]
    return kappa


def regret_bound(spec: ConfidenceSpec, kappa: float, T_axis: Sequence[int]) -> list[float]:
    """High-probability quantile-regret bound evaluated at each episode count."""
    if not 0 < kappa <= 1:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa!r}")
    H = spec.H
    g = 2.0 / kappa
    decay = 2 * (1 - (kappa / 2) ** (2 * H)) / (4 / kappa**2 - 1)
    out = []
    for T in T_axis:
        sp = spec.with_T(T)
        first = 2 * sp.c * H * g**H * math.sqrt(sp.S * sp.A * sp.T * H * sp.log_term)
        second = g ** (H + 1) * H * math.sqrt(decay * T * math.log(2 / spec.delta))
        out.append(first + second)
    return out


def l1_deviation(p_true: np.ndarray, em: EmpiricalModel) -> np.ndarray:
    """``||P*(.|h,s,a) - P_hat(.|h,s,a)||_1`` for every cell."""
    return np.abs(p_true - em.p_hat).sum(axis=-1)


def confidence_violations(p_true: np.ndarray, em: EmpiricalModel, spec: ConfidenceSpec) -> int:
    """Number of (h, s, a) cells whose true row lies outside its l1 ball."""
    return int(np.sum(l1_deviation(p_true, em) > radius(spec, em.pair_counts) + 1e-12))
