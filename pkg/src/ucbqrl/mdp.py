"""Tabular finite-horizon MDPs: representation, generators, rollouts and JSON I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

ROW_TOL = 1e-9
REWARD_GRID = np.round(np.arange(11) / 10.0, 1)

Seed = Union[int, tuple, list]


class MDPFormatError(ValueError):
    """An instance file could not be parsed."""


class InvalidMDPError(ValueError):
    """An instance violates the structural invariants; see ``violations``."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid MDP:\n  " + "\n  ".join(self.violations))


@dataclass(frozen=True, eq=False)
class TabularMDP:
    """Finite-horizon MDP with deterministic rewards.

    ``rewards[h, s, a]`` is the reward of taking ``a`` in ``s`` at step ``h``
    and ``kernel[h, s, a]`` the next-state distribution.  Construction does
    not validate; call :func:`validate` (or :meth:`check`).
    """

    rewards: np.ndarray
    kernel: np.ndarray
    start_state: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rewards", np.asarray(self.rewards, dtype=float))
        object.__setattr__(self, "kernel", np.asarray(self.kernel, dtype=float))
        object.__setattr__(self, "start_state", int(self.start_state))
        if self.rewards.ndim != 3 or self.kernel.ndim != 4:
            raise ValueError("rewards must be H x S x A and kernel H x S x A x S")
        if self.kernel.shape[:3] != self.rewards.shape or self.kernel.shape[3] != self.kernel.shape[1]:
            raise ValueError(
                f"shape mismatch: rewards {self.rewards.shape}, kernel {self.kernel.shape}"
            )
        self.rewards.setflags(write=False)
        self.kernel.setflags(write=False)

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]

    @property
    def num_states(self) -> int:
        return self.rewards.shape[1]

    @property
    def num_actions(self) -> int:
        return self.rewards.shape[2]

    @property
    def n_policies(self) -> int:
        return self.num_actions ** (self.num_states * self.horizon)

    def check(self) -> "TabularMDP":
        problems = validate(self)
        if problems:
            raise InvalidMDPError(problems)
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, TabularMDP):
            return NotImplemented
        return (
            self.start_state == other.start_state
            and np.array_equal(self.rewards, other.rewards)
            and np.array_equal(self.kernel, other.kernel)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MarkovPolicy:
    """Deterministic time-indexed decision rule, ``actions[h, s]``."""

    actions: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.actions)
        if a.ndim != 2:
            raise ValueError(f"policy table must be H x S, got shape {a.shape}")
        if a.size and not np.issubdtype(a.dtype, np.integer):
            if not np.all(a == np.round(a)):
                raise ValueError("policy entries must be integers")
        a = a.astype(np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "actions", a)

    @classmethod
    def zeros(cls, horizon: int, num_states: int) -> "MarkovPolicy":
        return cls(np.zeros((horizon, num_states), dtype=np.int64))

    def __call__(self, h: int, s: int) -> int:
        return int(self.actions[h, s])

    def key(self) -> tuple:
        return tuple(self.actions.ravel().tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MarkovPolicy):
            return NotImplemented
        return np.array_equal(self.actions, other.actions)

    def __hash__(self) -> int:
        return hash((self.actions.shape, self.key()))

    def check_against(self, m: TabularMDP) -> None:
        if self.actions.shape != (m.horizon, m.num_states):
            raise ValueError(
                f"policy shape {self.actions.shape} does not match (H, S) = "
                f"{(m.horizon, m.num_states)}"
            )
        if self.actions.size and (self.actions.min() < 0 or self.actions.max() >= m.num_actions):
            raise ValueError(f"policy actions must lie in [0, {m.num_actions})")


@dataclass(frozen=True)
class Step:
    h: int
    state: int
    action: int
    reward: float
    next_state: int


EpisodeTrace = list  # list[Step], one per stage


def validate(m: TabularMDP) -> list[str]:
    """Return a list of human-readable invariant violations (empty when valid)."""
    out = []
    H, S, A = m.rewards.shape
    if S < 1 or A < 1 or H < 1:
        out.append(f"dimensions must be positive: S={S}, A={A}, H={H}")
        return out
    if not 0 <= m.start_state < S:
        out.append(f"start_state {m.start_state} not in [0, {S})")
    for h, s, a in zip(*np.nonzero((m.rewards < 0) | (m.rewards > 1) | ~np.isfinite(m.rewards))):
        out.append(f"reward range: rewards[{h}][{s}][{a}] = {m.rewards[h, s, a]!r} not in [0, 1]")
    neg = (m.kernel < 0).any(axis=3) | ~np.isfinite(m.kernel).all(axis=3)
    sums = m.kernel.sum(axis=3)
    bad = neg | (np.abs(sums - 1.0) > ROW_TOL)
    for h, s, a in zip(*np.nonzero(bad)):
        out.append(
            f"simplex: kernel[{h}][{s}][{a}] = {m.kernel[h, s, a].tolist()} "
            f"(sum {sums[h, s, a]!r}) is not a probability vector"
        )
    return out


def gen_random(
    num_states: int, num_actions: int, horizon: int, seed: int, min_atom: float = 0.0
) -> TabularMDP:
    """Random instance; every nonzero kernel entry is at least ``min_atom``.

    Rewards come from the grid {0, 0.1, ..., 1}.  Deterministic in all
    arguments.
    """
    S, A, H = int(num_states), int(num_actions), int(horizon)
    if min(S, A, H) < 1:
        raise ValueError("num_states, num_actions and horizon must be >= 1")
    if not 0.0 <= min_atom <= 1.0 / S + 1e-15:
        raise ValueError(f"min_atom={min_atom!r} is impossible with {S} states (need <= 1/S)")
    rng = np.random.Generator(np.random.Philox(seed))
    kernel = rng.dirichlet(np.ones(S), size=(H, S, A))
    kernel[kernel < min_atom] = 0.0
    kernel /= kernel.sum(axis=3, keepdims=True)
    rewards = REWARD_GRID[rng.integers(0, len(REWARD_GRID), size=(H, S, A))]
    return TabularMDP(rewards, kernel, 0)


def _rng(seed: Seed) -> np.random.Generator:
    entropy = list(seed) if isinstance(seed, (tuple, list)) else int(seed)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def simulate_episode(m: TabularMDP, pol: MarkovPolicy, rng_seed: Seed) -> EpisodeTrace:
    """Roll out one episode from the start state by inverse-transform sampling."""
    pol.check_against(m)
    rng = _rng(rng_seed)
    us = rng.random(m.horizon)
    s = m.start_state
    trace = []
    for h in range(m.horizon):
        a = pol(h, s)
        cum = np.cumsum(m.kernel[h, s, a])
        nxt = min(int(np.searchsorted(cum, us[h], side="right")), m.num_states - 1)
        trace.append(Step(h, s, a, float(m.rewards[h, s, a]), nxt))
        s = nxt
    return trace


_FIELDS = ("num_states", "num_actions", "horizon", "start_state", "rewards", "kernel")


def mdp_to_dict(m: TabularMDP) -> dict:
    return {
        "num_states": m.num_states,
        "num_actions": m.num_actions,
        "horizon": m.horizon,
        "start_state": m.start_state,
        "rewards": m.rewards.tolist(),
        "kernel": m.kernel.tolist(),
    }


def mdp_from_dict(obj: dict, check: bool = True) -> TabularMDP:
    if not isinstance(obj, dict):
        raise MDPFormatError("top-level value must be a JSON object")
    unknown = sorted(set(obj) - set(_FIELDS))
    if unknown:
        raise MDPFormatError(f"unknown field(s): {', '.join(unknown)}")
    missing = [f for f in _FIELDS if f not in obj]
    if missing:
        raise MDPFormatError(f"missing field(s): {', '.join(missing)}")
    dims = {}
    for f in ("num_states", "num_actions", "horizon", "start_state"):
        v = obj[f]
        if isinstance(v, bool) or not isinstance(v, int):
            raise MDPFormatError(f"field {f!r} must be an integer, got {v!r}")
        dims[f] = v
    H, S, A = dims["horizon"], dims["num_states"], dims["num_actions"]
    arrays = {}
    for f, shape in (("rewards", (H, S, A)), ("kernel", (H, S, A, S))):
        try:
            arr = np.array(obj[f], dtype=float)
        except (TypeError, ValueError) as exc:
            raise MDPFormatError(f"field {f!r} is not a numeric array: {exc}") from None
        if arr.shape != shape:
            raise MDPFormatError(f"field {f!r} has shape {arr.shape}, expected {shape}")
        arrays[f] = arr
    m = TabularMDP(arrays["rewards"], arrays["kernel"], dims["start_state"])
    if check:
        m.check()
    return m


def write_mdp(m: TabularMDP, path) -> None:
    Path(path).write_text(json.dumps(mdp_to_dict(m), indent=1) + "\n", encoding="utf-8")


def read_mdp(path, check: bool = True) -> TabularMDP:
    """Load an instance file.

    Raises :class:`MDPFormatError` on malformed content and
    :class:`InvalidMDPError` (carrying the violation list) when ``check`` is
    set and the instance breaks an invariant.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MDPFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return mdp_from_dict(obj, check=check)


def read_policy(path) -> MarkovPolicy:
    try:
        table = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MDPFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return MarkovPolicy(np.array(table))


def write_policy(pol: MarkovPolicy, path) -> None:
    Path(path).write_text(json.dumps(pol.actions.tolist()) + "\n", encoding="utf-8")


def risky_vs_safe() -> TabularMDP:
    """Two-step instance separating median-optimal from upper-quantile-optimal play.

    States: 0 start, 1 good, 2 bad.  At step 0, action 0 ("safe") pays 0.4 and
    leads to the bad state; action 1 ("risky") pays 0 and moves to good or bad
    with probability 1/2 each.  At step 1 the good state pays 1, all else 0.
    """
    S, A, H = 3, 2, 2
    rewards = np.zeros((H, S, A))
    kernel = np.zeros((H, S, A, S))
    rewards[0, 0, 0] = 0.4
    kernel[0, :, :, 2] = 1.0
    kernel[0, 0, 1] = [0.0, 0.5, 0.5]
    rewards[1, 1, :] = 1.0
    kernel[1, :, :, 2] = 1.0
    return TabularMDP(rewards, kernel, 0)
