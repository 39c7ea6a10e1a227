"""Sets-k-means solvers: exhaustive oracle, EM (Lloyd) heuristic and approx-mean."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .core import (
    InvalidInputError,
    LossSpec,
    SetFamily,
    as_rng,
    assignment,
    family_cost,
    set_costs,
)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**7
BUDGET_ENV = "SETS_CORESET_BUDGET"


class BudgetExceededError(RuntimeError):
    """The exhaustive oracle would enumerate more assignments than allowed."""


class UnsupportedLossError(ValueError):
    pass


def enumeration_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return int(float(raw)) if raw else DEFAULT_BUDGET


@dataclass(frozen=True, eq=False)
class SolveResult:
    centers: np.ndarray
    cost: float
    iterations: int
    cluster: np.ndarray
    representative: np.ndarray
    history: list = field(default_factory=list)

    @property
    def assignment(self) -> list[tuple[int, int]]:
        return list(zip(self.cluster.tolist(), self.representative.tolist()))


def _result(F: SetFamily, centers: np.ndarray, loss: LossSpec, iterations: int, history=None) -> SolveResult:
    costs, cluster, rep = assignment(F, centers, loss)
    return SolveResult(centers, float(np.dot(F.weights, costs)), iterations, cluster, rep, history or [])


def _spare_center(F: SetFamily, centers: np.ndarray, loss: LossSpec, exclude: np.ndarray) -> np.ndarray:
    """The data point worst served by ``centers``, avoiding points already used as centers."""
    pts = F.all_points
    served = loss.pairwise(pts, centers).min(axis=1)
    used = (np.abs(pts[:, None, :] - exclude[None]).sum(axis=-1) == 0).any(axis=1)
    served = np.where(used, -np.inf, served)
    return pts[int(np.argmax(served))].copy()


# ---------------------------------------------------------------------------
# Exhaustive oracle


def exact_oracle(F: SetFamily, k: int, loss: LossSpec | None = None, budget: int | None = None,
                 chunk: int = 1 << 15) -> SolveResult:
    """Optimal sets-k-means by enumerating every (representative, cluster) choice.

    For a fixed choice the best center of each cluster is the weighted mean of
    its representatives, so the minimum over all choices is the global optimum.
    Only the squared-Euclidean loss has this closed form.
    """
    loss = loss or LossSpec.means()
    if loss.kind != "means":
        raise UnsupportedLossError(f"exact_oracle supports the means loss only, got {loss.kind!r}")
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    budget = enumeration_budget() if budget is None else budget
    n, d = F.n, F.dim
    radix = F.sizes * k
    total = 1
    for r in radix:
        total *= int(r)
        if total > budget:
            raise BudgetExceededError(
                f"enumeration of prod(m_i * k) > {budget} assignments (n={n}, k={k}, "
                f"sizes={F.sizes.tolist()}); raise ${BUDGET_ENV} or shrink the instance")

    m_max = int(F.sizes.max())
    P = np.zeros((n, m_max, d))
    for i, s in enumerate(F.sets):
        P[i, :s.m] = s.points
    w = F.weights
    # Symmetry: the first set can always go to cluster 0.
    radix_eff = radix.copy()
    radix_eff[0] = F.sizes[0]
    total_eff = int(np.prod(radix_eff.astype(object)))

    best_cost = np.inf
    best_code = -1
    rows = np.arange(n)
    for start in range(0, total_eff, chunk):
        codes = np.arange(start, min(start + chunk, total_eff))
        digits = np.empty((len(codes), n), dtype=np.int64)
        rest = codes.copy()
        for i in range(n - 1, -1, -1):
            digits[:, i] = rest % radix_eff[i]
            rest //= radix_eff[i]
        rep = digits % F.sizes
        clus = digits // F.sizes
        R = P[rows, rep]                      # (A, n, d)
        sq = np.einsum("anj,anj->an", R, R)
        cost = np.zeros(len(codes))
        for c in range(k):
            mask = (clus == c) * w            # (A, n)
            W = mask.sum(axis=1)
            S = np.einsum("an,anj->aj", mask, R)
            SS = (mask * sq).sum(axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                cost += np.where(W > 0, SS - np.einsum("aj,aj->a", S, S) / W, 0.0)
        j = int(np.argmin(cost))
        if best_code < 0 or cost[j] < best_cost - 1e-12 * max(1.0, abs(best_cost)):
            best_cost, best_code = float(cost[j]), int(codes[j])

    digits = np.empty(n, dtype=np.int64)
    rest = best_code
    for i in range(n - 1, -1, -1):
        digits[i] = rest % radix_eff[i]
        rest //= radix_eff[i]
    rep, clus = digits % F.sizes, digits // F.sizes
    R = P[rows, rep]
    centers = np.zeros((k, d))
    empty = []
    for c in range(k):
        sel = clus == c
        if sel.any():
            centers[c] = np.average(R[sel], axis=0, weights=w[sel])
        else:
            empty.append(c)
    filled = np.array([c for c in range(k) if c not in empty])
    for c in empty:
        centers[c] = _spare_center(F, centers[filled], loss, centers[filled])
        filled = np.append(filled, c)
    return _result(F, centers, loss, 0)


# ---------------------------------------------------------------------------
# EM heuristic


def _weiszfeld(X: np.ndarray, w: np.ndarray, start: np.ndarray, iters: int = 50) -> np.ndarray:
    y = start.copy()
    for _ in range(iters):
        dist = np.linalg.norm(X - y, axis=1)
        if np.any(dist < 1e-12):
            break
        inv = w / dist
        y_new = inv @ X / inv.sum()
        if np.allclose(y_new, y, rtol=0, atol=1e-12):
            break
        y = y_new
    return y


def _update_center(R: np.ndarray, w: np.ndarray, current: np.ndarray, loss: LossSpec) -> np.ndarray:
    mean = np.average(R, axis=0, weights=w)
    if loss.kind == "means":
        return mean
    # No closed form: keep the best of the current center and a few candidates.
    cands = [current, mean]
    if loss.kind in ("median", "lpsi", "huber"):
        cands.append(_weiszfeld(R, w, mean))
    costs = [float(np.dot(w, loss.pairwise(R, c[None, :])[:, 0])) for c in cands]
    return cands[int(np.argmin(costs))]


def _lloyd(F: SetFamily, centers: np.ndarray, loss: LossSpec, max_iters: int) -> SolveResult:
    centers = centers.astype(float).copy()
    k = len(centers)
    costs, cluster, rep = assignment(F, centers, loss)
    history = [float(np.dot(F.weights, costs))]
    reps_all = [s.points for s in F.sets]
    iterations = 0
    while iterations < max_iters:
        R = np.stack([reps_all[i][rep[i]] for i in range(F.n)])
        new = centers.copy()
        empty = []
        for c in range(k):
            sel = cluster == c
            if sel.any():
                new[c] = _update_center(R[sel], F.weights[sel], centers[c], loss)
            else:
                empty.append(c)
        for c in empty:
            others = np.delete(new, c, axis=0)
            new[c] = _spare_center(F, others, loss, others)
        centers = new
        iterations += 1
        costs, new_cluster, new_rep = assignment(F, centers, loss)
        history.append(float(np.dot(F.weights, costs)))
        if np.array_equal(new_cluster, cluster) and np.array_equal(new_rep, rep):
            cluster, rep = new_cluster, new_rep
            break
        cluster, rep = new_cluster, new_rep
    return SolveResult(centers, history[-1], iterations, cluster, rep, history)


def em_sets_kmeans(F: SetFamily, k: int, max_iters: int = 12, restarts: int = 1,
                   loss: LossSpec | None = None, rng=None, init: np.ndarray | None = None) -> SolveResult:
    """Lloyd-style alternating minimization for sets-k-means.

    Each run starts from ``k`` distinct points drawn uniformly from the union of
    all sets (or from ``init``), then alternates between assigning every set to
    its nearest (center, point) pair and moving each center to the weighted mean
    of its assigned representatives. A run stops once the assignment repeats or
    after ``max_iters`` updates; the cheapest of ``restarts`` runs is returned.
    An emptied cluster is re-seeded at the worst-served data point.
    """
    loss = loss or LossSpec.means()
    rng = as_rng(rng)
    pts = np.unique(F.all_points, axis=0)
    if init is None and k > len(pts):
        raise InvalidInputError(f"k={k} exceeds the {len(pts)} distinct points")
    best = None
    runs = 1 if init is not None else max(1, restarts)
    for _ in range(runs):
        start = np.asarray(init, dtype=float) if init is not None else pts[np.sort(rng.choice(len(pts), k, replace=False))]
        res = _lloyd(F, start, loss, max_iters)
        if best is None or res.cost < best.cost:
            best = res
    return best


# ---------------------------------------------------------------------------
# approx-mean


def approx_mean(F: SetFamily, t_samples: int = 5, loss: LossSpec | None = None, rng=None) -> np.ndarray:
    """Approximate sets-mean from the points of a few randomly sampled sets.

    Every point of ``t_samples`` sampled sets is tried as the center; the best
    one is then refined once by moving it to the weighted mean of the
    representatives it induces, keeping whichever of the two is cheaper.
    """
    if t_samples < 1:
        raise InvalidInputError("t_samples must be >= 1")
    loss = loss or LossSpec.means()
    rng = as_rng(rng)
    idx = rng.choice(F.n, size=min(t_samples, F.n), replace=False)
    cands = np.concatenate([F.sets[i].points for i in np.sort(idx)])
    costs = np.array([np.dot(F.weights, set_costs(F, c[None, :], loss)) for c in cands])
    best = cands[int(np.argmin(costs))]
    _, _, rep = assignment(F, best[None, :], loss)
    R = np.stack([F.sets[i].points[rep[i]] for i in range(F.n)])
    refined = np.average(R, axis=0, weights=F.weights)
    if family_cost(F, refined[None, :], loss) < costs.min():
        return refined
    return best.copy()
