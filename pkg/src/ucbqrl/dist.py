"""Finite-support return distributions.

A :class:`FiniteDist` is a sorted list of atoms with positive masses.  The
same object stands for a left-continuous quantile curve ``q -> quantile(d, q)``,
which is how value functions are stored throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MERGE_TOL = 1e-12
PROB_TOL = 1e-12
SUM_TOL = 1e-9
# increments of a CDF below this are float noise, not atoms
ZERO_MASS = 1e-14


@dataclass(frozen=True, eq=False)
class FiniteDist:
    """Probability distribution on finitely many real values.

    Build instances with :func:`make_dist` (or :func:`dirac`); the raw
    constructor assumes ``support`` is strictly increasing and ``masses`` is a
    positive vector summing to one.
    """

    support: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.support.setflags(write=False)
        self.masses.setflags(write=False)
        cum = np.cumsum(self.masses)
        cum.setflags(write=False)
        object.__setattr__(self, "cum", cum)

    def __len__(self) -> int:
        return len(self.support)

    def __repr__(self) -> str:
        atoms = ", ".join(f"{x:.6g}: {m:.6g}" for x, m in zip(self.support, self.masses))
        return f"FiniteDist({{{atoms}}})"

    def cdf(self, x: float) -> float:
        return cdf(self, x)

    def quantile(self, q: float) -> float:
        return quantile(self, q)

    def allclose(self, other: "FiniteDist", atol: float = 1e-12) -> bool:
        if len(self) != len(other):
            return False
        return bool(
            np.allclose(self.support, other.support, rtol=0, atol=atol)
            and np.allclose(self.masses, other.masses, rtol=0, atol=atol)
        )


def _cluster(values: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort ``values`` and merge neighbours closer than MERGE_TOL, summing weights."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    if len(v) == 0:
        return v, w
    starts = np.concatenate(([0], np.flatnonzero(np.diff(v) > MERGE_TOL) + 1))
    return v[starts], np.add.reduceat(w, starts)


def _from_atoms(values: np.ndarray, masses: np.ndarray) -> FiniteDist:
    values = np.asarray(values, dtype=float)
    masses = np.asarray(masses, dtype=float)
    keep = masses > 0
    v, m = _cluster(values[keep], masses[keep])
    return FiniteDist(v, m / m.sum())


def _from_cdf_values(xs: np.ndarray, cdf_values: np.ndarray) -> FiniteDist:
    """Distribution whose CDF equals ``cdf_values`` at the sorted points ``xs``.

    ``xs`` must already be merged (see :func:`union_support`); the last CDF
    value is taken to be 1.
    """
    steps = np.diff(np.concatenate(([0.0], cdf_values[:-1], [1.0])))
    keep = steps > ZERO_MASS
    m = steps[keep]
    return FiniteDist(xs[keep], m / m.sum())


def make_dist(points: Iterable[tuple[float, float]]) -> FiniteDist:
    """Build a distribution from ``(value, mass)`` pairs.

    Values within 1e-12 of each other are merged and masses renormalized to
    an exact unit sum.
    """
    pts = list(points)
    if not pts:
        raise ValueError("make_dist: empty list of atoms")
    values = np.array([float(v) for v, _ in pts])
    masses = np.array([float(m) for _, m in pts])
    if not np.all(np.isfinite(values)):
        raise ValueError("make_dist: non-finite support value")
    if np.any(~(masses > 0)):
        raise ValueError(f"make_dist: non-positive mass in {masses.tolist()}")
    total = masses.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"make_dist: masses sum to {total!r}, expected 1")
    return _from_atoms(values, masses)


def dirac(x: float = 0.0) -> FiniteDist:
    return FiniteDist(np.array([float(x)]), np.array([1.0]))


def _check_level(q: float, name: str = "q") -> None:
    if not (0.0 < q <= 1.0):
        raise ValueError(f"{name} must lie in (0, 1], got {q!r}")


def cdf(d: FiniteDist, x: float) -> float:
    """P(X <= x)."""
    i = np.searchsorted(d.support, x, side="right")
    return float(min(1.0, d.masses[:i].sum()))


def cdf_left(d: FiniteDist, x: float) -> float:
    """P(X < x)."""
    i = np.searchsorted(d.support, x, side="left")
    return float(min(1.0, d.masses[:i].sum()))


def quantile(d: FiniteDist, q: float) -> float:
    """Left-continuous inverse CDF: the smallest atom ``x`` with ``cdf(x) >= q``."""
    _check_level(q)
    i = np.searchsorted(d.cum, q - PROB_TOL, side="left")
    return float(d.support[min(i, len(d) - 1)])


def quantiles(d: FiniteDist, qs: Sequence[float]) -> np.ndarray:
    """Vectorised :func:`quantile`."""
    qs = np.asarray(qs, dtype=float)
    if np.any((qs <= 0) | (qs > 1)):
        raise ValueError("quantile levels must lie in (0, 1]")
    idx = np.searchsorted(d.cum, qs - PROB_TOL, side="left")
    return d.support[np.minimum(idx, len(d) - 1)]


def inv_sample(d: FiniteDist, u: float) -> float:
    """Inverse-transform draw for a uniform ``u`` in (0, 1]."""
    _check_level(u, "u")
    return quantile(d, u)


def sample(d: FiniteDist, rng: np.random.Generator, size: int) -> np.ndarray:
    # 1 - U is uniform on (0, 1], matching the domain of the inverse
    u = 1.0 - rng.random(size)
    return quantiles(d, u)


def jump(d: FiniteDist, x: float) -> float:
    """Mass of the atom at ``x`` (0 when ``x`` is not a support point)."""
    i = np.searchsorted(d.support, x - MERGE_TOL, side="left")
    if i < len(d) and abs(d.support[i] - x) <= MERGE_TOL:
        return float(d.masses[i])
    return 0.0


def shift(d: FiniteDist, r: float) -> FiniteDist:
    if r == 0:
        return d
    return FiniteDist(d.support + r, d.masses.copy())


def _check_simplex(p: np.ndarray, name: str = "weights") -> None:
    if p.ndim != 1 or np.any(p < -PROB_TOL) or abs(p.sum() - 1.0) > SUM_TOL:
        raise ValueError(f"{name} must be a probability vector, got {p.tolist()}")


def mix(weights: Sequence[float], dists: Sequence[FiniteDist]) -> FiniteDist:
    """Mixture with CDF ``sum_i weights[i] * F_i``."""
    p = np.asarray(weights, dtype=float)
    if len(p) != len(dists):
        raise ValueError(f"mix: {len(p)} weights for {len(dists)} distributions")
    _check_simplex(p)
    used = [i for i in range(len(p)) if p[i] > 0]
    if len(used) == 1:
        return dists[used[0]]
    values = np.concatenate([dists[i].support for i in used])
    masses = np.concatenate([p[i] * dists[i].masses for i in used])
    return _from_atoms(values, masses)


def union_support(dists: Sequence[FiniteDist]) -> np.ndarray:
    values = np.concatenate([d.support for d in dists])
    v, _ = _cluster(values, np.zeros_like(values))
    return v


def cdf_matrix(dists: Sequence[FiniteDist], xs: np.ndarray) -> np.ndarray:
    """``out[k, i] = F_i(xs[k])``, evaluated with the merge tolerance."""
    out = np.empty((len(xs), len(dists)))
    for i, d in enumerate(dists):
        idx = np.searchsorted(d.support, xs + MERGE_TOL, side="right")
        out[:, i] = np.concatenate(([0.0], d.cum))[idx]
    return np.minimum(out, 1.0)


def upper_envelope(dists: Sequence[FiniteDist]) -> FiniteDist:
    """Pointwise maximum of quantile curves, i.e. pointwise minimum of CDFs."""
    if len(dists) == 0:
        raise ValueError("upper_envelope: empty list")
    if len(dists) == 1:
        return dists[0]
    xs = union_support(dists)
    return _from_cdf_values(xs, cdf_matrix(dists, xs).min(axis=1))


def w1(d1: FiniteDist, d2: FiniteDist) -> float:
    """1-Wasserstein distance as the integral of |F1^-1(u) - F2^-1(u)| over u."""
    grid = np.union1d(np.concatenate(([0.0], d1.cum)), d2.cum)
    grid = np.clip(grid, 0.0, 1.0)
    widths = np.diff(grid)
    mids = 0.5 * (grid[:-1] + grid[1:])
    keep = widths > 0
    mids, widths = mids[keep], widths[keep]
    i1 = np.minimum(np.searchsorted(d1.cum, mids, side="left"), len(d1) - 1)
    i2 = np.minimum(np.searchsorted(d2.cum, mids, side="left"), len(d2) - 1)
    return float(np.sum(np.abs(d1.support[i1] - d2.support[i2]) * widths))


def tv(d1: FiniteDist, d2: FiniteDist) -> float:
    """Total variation: half the l1 gap between the atom-mass vectors."""
    values = np.concatenate((d1.support, d2.support))
    signed = np.concatenate((d1.masses, -d2.masses))
    _, diff = _cluster(values, signed)
    return float(min(1.0, 0.5 * np.abs(diff).sum()))
