"""Sample-based robust median of a family of sets, and a grid verifier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    InvalidInputError,
    LossSpec,
    SetFamily,
    as_rng,
    ceil_count,
    set_costs,
)


@dataclass(frozen=True)
class MedianParams:
    k: int = 1
    delta: float = 0.1
    b_med: int = 3
    gamma: float | None = None
    tau: float = 1 / 6

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError("k must be >= 1")
        if not 0 < self.delta < 1:
            raise InvalidInputError("delta must lie in (0, 1)")
        if self.b_med < 1:
            raise InvalidInputError("b_med must be >= 1")
        if not 0 <= self.tau < 1:
            raise InvalidInputError("tau must lie in [0, 1)")
        if self.gamma is not None and not 0 < self.gamma <= 0.5:
            raise InvalidInputError("gamma must lie in (0, 1/2]")

    @property
    def gamma_(self) -> float:
        return 1.0 / (2 * self.k) if self.gamma is None else self.gamma

    @property
    def sample_size(self) -> int:
        return self.b_med * self.k**2 * math.ceil(math.log(1.0 / self.delta))


def _pairwise_set_costs(sets: list[np.ndarray], candidates: np.ndarray, loss: LossSpec) -> np.ndarray:
    """Cost matrix of shape (len(candidates), len(sets))."""
    out = np.empty((len(candidates), len(sets)))
    sizes = np.array([len(s) for s in sets])
    for m in np.unique(sizes):
        idx = np.flatnonzero(sizes == m)
        X = np.stack([sets[i] for i in idx])
        # (n_sets, m, n_cand) -> min over points
        out[:, idx] = loss.pairwise(X, candidates).min(axis=1).T
    return out


def robust_median_of_arrays(sets: list[np.ndarray], params: MedianParams, loss: LossSpec, rng) -> np.ndarray:
    """Robust median of sets given as a list of ``(m_i, d)`` arrays."""
    if len(sets) == 0:
        raise InvalidInputError("robust median of an empty family")
    rng = as_rng(rng)
    n = len(sets)
    size = min(n, params.sample_size)
    sample = np.sort(rng.choice(n, size=size, replace=False))
    chosen = [sets[i] for i in sample]
    candidates = np.concatenate(chosen)
    costs = _pairwise_set_costs(chosen, candidates, loss)
    count = ceil_count((1 - params.tau) * params.gamma_, size)
    # Sum of the `count` smallest costs per candidate.
    partial = np.partition(costs, count - 1, axis=1)[:, :count].sum(axis=1)
    return candidates[int(np.argmin(partial))].copy()


def robust_median(F: SetFamily, params: MedianParams, loss: LossSpec, rng=None) -> np.ndarray:
    """Return a point of some sampled set approximating the densest cluster.

    A uniform sample (without replacement) of ``b_med * k**2 * ceil(log(1/delta))``
    sets is drawn; every point of every sampled set is a candidate, scored by the
    summed cost of its closest ``(1 - tau) * gamma`` fraction of the sample. The
    lowest-scoring candidate wins, ties going to the first candidate.
    """
    return robust_median_of_arrays([s.points for s in F.sets], params, loss, rng)


@dataclass(frozen=True)
class GridSpec:
    """Regular grid over an axis-aligned box, ``num`` points per axis."""

    lo: np.ndarray
    hi: np.ndarray
    num: int = 101

    @classmethod
    def covering(cls, F: SetFamily, num: int = 101, pad: float = 0.0) -> "GridSpec":
        lo, hi = F.bounding_box()
        return cls(lo - pad, hi + pad, num)

    @property
    def step(self) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / max(self.num - 1, 1)

    def points(self) -> np.ndarray:
        axes = [np.linspace(a, b, self.num) for a, b in zip(np.atleast_1d(self.lo), np.atleast_1d(self.hi))]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


def closest_fraction_sums(F: SetFamily, candidates: np.ndarray, gamma: float, loss: LossSpec, chunk: int = 2048) -> np.ndarray:
    """For each candidate center, the summed cost of its closest gamma fraction of ``F``."""
    count = ceil_count(gamma, F.n)
    out = np.empty(len(candidates))
    for start in range(0, len(candidates), chunk):
        cand = candidates[start:start + chunk]
        costs = _pairwise_set_costs([s.points for s in F.sets], cand, loss)
        out[start:start + chunk] = np.partition(costs, count - 1, axis=1)[:, :count].sum(axis=1)
    return out


def grid_optimum(F: SetFamily, gamma: float, loss: LossSpec, grid: GridSpec, include_data: bool = True) -> float:
    """Minimum over grid candidates of the closest-gamma-fraction cost."""
    cand = grid.points()
    if include_data:
        cand = np.concatenate([cand, F.all_points])
    return float(closest_fraction_sums(F, cand, gamma, loss).min())


def verify_robust_median(F: SetFamily, b, gamma: float, tau: float, alpha: float, loss: LossSpec,
                         grid: GridSpec, include_data: bool = True, optimum: float | None = None) -> bool:
    """Check the robust-median inequality with a finite candidate grid.

    The optimum over all centers is replaced by the minimum over the grid (plus
    every data point when ``include_data``). That minimum can only overestimate
    the true optimum, so a rejection is sound while an acceptance is accurate up
    to the grid resolution. ``optimum`` may carry a precomputed ``grid_optimum``.
    """
    if math.isinf(alpha):
        return True
    b = np.asarray(b, dtype=float).reshape(1, -1)
    left = float(np.sum(np.sort(set_costs(F, b, loss))[:ceil_count((1 - tau) * gamma, F.n)]))
    if optimum is None:
        optimum = grid_optimum(F, gamma, loss, grid, include_data)
    return left <= alpha * optimum
