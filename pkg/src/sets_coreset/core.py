"""Domain types, loss functions and set-to-center distances.

A family of sets is clustered by k centers; the cost of one set is the
loss of the smallest distance between any of its points and any center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# Slack used when rounding fractional counts up, so that e.g. (5/24)*24
# computed in floating point does not round to 6.
_CEIL_EPS = 1e-9


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


def ceil_count(fraction: float, n: int) -> int:
    """Return ``ceil(fraction * n)`` robust to floating-point noise, at least 1."""
    return max(1, math.ceil(fraction * n - _CEIL_EPS))


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# Losses


LOSS_KINDS = ("median", "means", "huber", "lpsi")


@dataclass(frozen=True)
class LossSpec:
    """A loss applied on top of a base distance.

    ``kind`` selects the row of the loss catalogue:

    ========  ==========================  ====  ==================
    kind      loss of base distance x     r     rho
    ========  ==========================  ====  ==================
    median    x                           1     1
    means     x**2                        2     2
    huber     x**2/2 or delta*(x-delta/2) 2     2
    lpsi      x (base distance is l_psi)  1     max(2**(1/psi), 1)
    ========  ==========================  ====  ==================
    """

    kind: str = "means"
    delta: float | None = None
    psi: float | None = None
    allow_subnorm: bool = False

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise InvalidInputError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.kind == "huber":
            if self.delta is None or not self.delta > 0:
                raise InvalidInputError("huber loss requires delta > 0")
        if self.kind == "lpsi":
            if self.psi is None or not self.psi > 0:
                raise InvalidInputError("lpsi loss requires psi > 0")
            if self.psi < 1 and not self.allow_subnorm:
                raise InvalidInputError("psi < 1 is not a norm; pass allow_subnorm=True to use it")

    @classmethod
    def median(cls) -> "LossSpec":
        return cls("median")

    @classmethod
    def means(cls) -> "LossSpec":
        return cls("means")

    @classmethod
    def huber(cls, delta: float) -> "LossSpec":
        return cls("huber", delta=delta)

    @classmethod
    def lpsi(cls, psi: float, allow_subnorm: bool = False) -> "LossSpec":
        return cls("lpsi", psi=psi, allow_subnorm=allow_subnorm)

    @property
    def r(self) -> float:
        return 2.0 if self.kind in ("means", "huber") else 1.0

    @property
    def rho(self) -> float:
        if self.kind == "lpsi":
            return max(2.0 ** (1.0 / self.psi), 1.0)
        return max(2.0 ** (self.r - 1.0), 1.0)

    def distance(self, diff: np.ndarray) -> np.ndarray:
        """Base distance of difference vectors along the last axis."""
        diff = np.asarray(diff, dtype=float)
        if self.kind == "lpsi":
            return np.sum(np.abs(diff) ** self.psi, axis=-1) ** (1.0 / self.psi)
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def apply(self, x) -> np.ndarray:
        """The loss of base distances ``x`` (vectorized, ``x >= 0``)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "means":
            return x * x
        if self.kind == "huber":
            d = self.delta
            return np.where(x <= d, 0.5 * x * x, d * (x - 0.5 * d))
        return x

    def pairwise(self, points: np.ndarray, centers: np.ndarray) -> np.ndarray:
        """Loss between every point and every center, shape ``points.shape[:-1] + (k,)``."""
        points = np.asarray(points, dtype=float)
        centers = np.asarray(centers, dtype=float)
        if self.kind == "means":
            diff = points[..., None, :] - centers
            return np.einsum("...i,...i->...", diff, diff)
        return self.apply(self.distance(points[..., None, :] - centers))


# ---------------------------------------------------------------------------
# Domain types


def _as_points(points, name="points") -> np.ndarray:
    arr = np.array(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidInputError(f"{name} must be a nonempty (m, d) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contain NaN or infinite coordinates")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MSet:
    """A finite set of distinct points, stored as an ``(m, d)`` array."""

    points: np.ndarray
    id: object = None

    def __post_init__(self):
        pts = _as_points(self.points)
        if len(np.unique(pts, axis=0)) != len(pts):
            raise InvalidInputError(f"set {self.id!r} contains duplicate points")
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.m


@dataclass(frozen=True, eq=False)
class CenterSet:
    """A query of k centers, stored as a ``(k, d)`` array."""

    centers: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "centers", _as_points(self.centers, "centers"))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def _centers_array(C, dim: int | None = None) -> np.ndarray:
    arr = C.centers if isinstance(C, CenterSet) else _as_points(C, "centers")
    if dim is not None and arr.shape[1] != dim:
        raise InvalidInputError(f"dimension mismatch: centers have d={arr.shape[1]}, expected {dim}")
    return arr


@dataclass(frozen=True, eq=False)
class SetFamily:
    """An ordered family of m-sets with positive per-set weights.

    Sets may have different sizes; most algorithms work per size group.
    """

    sets: tuple
    weights: np.ndarray = None
    dim: int = field(init=False)

    def __post_init__(self):
        sets = tuple(s if isinstance(s, MSet) else MSet(s, id=i) for i, s in enumerate(self.sets))
        if not sets:
            raise InvalidInputError("a set family needs at least one set")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise InvalidInputError(f"sets have mixed dimensions {sorted(dims)}")
        ids = [s.id if s.id is not None else i for i, s in enumerate(sets)]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("set ids must be unique")
        sets = tuple(s if s.id is not None else MSet(s.points, id=i) for i, s in enumerate(sets))
        if self.weights is None:
            w = np.ones(len(sets))
        else:
            w = np.array(self.weights, dtype=float).reshape(-1)
            if w.shape[0] != len(sets):
                raise InvalidInputError(f"{w.shape[0]} weights given for {len(sets)} sets")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise InvalidInputError("weights must be finite and positive")
        w.setflags(write=False)
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dim", dims.pop())

    @classmethod
    def from_arrays(cls, arrays: Iterable, weights=None, ids: Sequence | None = None) -> "SetFamily":
        arrays = list(arrays)
        if ids is None:
            ids = range(len(arrays))
        return cls(tuple(MSet(a, id=i) for a, i in zip(arrays, ids)), weights)

    def __len__(self):
        return len(self.sets)

    @property
    def n(self) -> int:
        return len(self.sets)

    @property
    def ids(self) -> list:
        return [s.id for s in self.sets]

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([s.m for s in self.sets])

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.sizes == self.sizes[0]))

    @cached_property
    def size_groups(self) -> dict:
        """Map set size -> ascending array of family indices with that size."""
        return {int(m): np.flatnonzero(self.sizes == m) for m in np.unique(self.sizes)}

    def stacked(self, indices=None) -> np.ndarray:
        """Points of equal-size sets as an ``(n, m, d)`` array."""
        idx = range(self.n) if indices is None else indices
        arrs = [self.sets[i].points for i in idx]
        if len({a.shape[0] for a in arrs}) > 1:
            raise InvalidInputError("stacked() requires sets of equal size")
        return np.stack(arrs)

    def subset(self, indices, weights=None) -> "SetFamily":
        indices = np.asarray(indices, dtype=int)
        w = self.weights[indices] if weights is None else weights
        return SetFamily(tuple(self.sets[i] for i in indices), w)

    @cached_property
    def all_points(self) -> np.ndarray:
        return np.concatenate([s.points for s in self.sets])

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        pts = self.all_points
        return pts.min(axis=0), pts.max(axis=0)


# ---------------------------------------------------------------------------
# Costs


def point_loss(p, c, loss: LossSpec) -> float:
    p = np.asarray(p, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    if p.shape != c.shape:
        raise InvalidInputError(f"dimension mismatch: {p.shape[0]} vs {c.shape[0]}")
    return float(loss.apply(loss.distance(p - c)))


def _set_points(P) -> np.ndarray:
    return P.points if isinstance(P, MSet) else _as_points(P)


def set_cost(P, C, loss: LossSpec) -> float:
    """Loss of the closest (point, center) pair."""
    pts = _set_points(P)
    centers = _centers_array(C, pts.shape[1])
    return float(loss.pairwise(pts, centers).min())


def stacked_costs(X: np.ndarray, centers: np.ndarray, loss: LossSpec) -> np.ndarray:
    """Per-set cost for an ``(n, m, d)`` stack of equal-size sets."""
    return loss.pairwise(X, centers).min(axis=(1, 2))


def stacked_assignment(X: np.ndarray, centers: np.ndarray, loss: LossSpec):
    """Per-set cost, nearest center index and representative point index.

    Ties go to the lowest point index, then the lowest center index.
    """
    n, m, _ = X.shape
    k = centers.shape[0]
    flat = loss.pairwise(X, centers).reshape(n, m * k)
    best = np.argmin(flat, axis=1)
    costs = flat[np.arange(n), best]
    return costs, best % k, best // k


def set_costs(F: SetFamily, C, loss: LossSpec) -> np.ndarray:
    """Unweighted cost of every set of ``F`` to ``C``, in family order."""
    centers = _centers_array(C, F.dim)
    out = np.empty(F.n)
    for _, idx in F.size_groups.items():
        out[idx] = stacked_costs(F.stacked(idx), centers, loss)
    return out


def assignment(F: SetFamily, C, loss: LossSpec):
    """Costs, cluster index and representative index of every set."""
    centers = _centers_array(C, F.dim)
    costs = np.empty(F.n)
    cluster = np.empty(F.n, dtype=int)
    rep = np.empty(F.n, dtype=int)
    for _, idx in F.size_groups.items():
        costs[idx], cluster[idx], rep[idx] = stacked_assignment(F.stacked(idx), centers, loss)
    return costs, cluster, rep


def family_cost(F: SetFamily, C, loss: LossSpec) -> float:
    return float(np.dot(F.weights, set_costs(F, C, loss)))


def closest_fraction_indices(costs: np.ndarray, gamma: float) -> np.ndarray:
    """Indices of the ``ceil(gamma * n)`` smallest costs, sorted by (cost, index)."""
    if not 0 < gamma <= 1:
        raise InvalidInputError(f"gamma must lie in (0, 1], got {gamma}")
    costs = np.asarray(costs)
    if costs.size == 0:
        raise InvalidInputError("closest fraction of an empty family")
    count = ceil_count(gamma, costs.size)
    return np.argsort(costs, kind="stable")[:count]


def closest_fraction(F: SetFamily, C, gamma: float, loss: LossSpec) -> SetFamily:
    """The ``ceil(gamma * n)`` sets of ``F`` with the smallest cost to ``C``.

    Ties are broken by ascending family index; the result keeps family order.
    """
    idx = closest_fraction_indices(set_costs(F, C, loss), gamma)
    return F.subset(np.sort(idx))


# ---------------------------------------------------------------------------
# Projection onto anchors


def greedy_match(points: np.ndarray, anchors: np.ndarray, loss: LossSpec | None = None) -> list[int]:
    """Match anchors in order to their closest not-yet-matched point."""
    loss = loss or LossSpec.median()
    taken = np.zeros(len(points), dtype=bool)
    matched = []
    for b in anchors:
        d = loss.distance(points - b)
        d[taken] = np.inf
        i = int(np.argmin(d))
        taken[i] = True
        matched.append(i)
    return matched


def closepoints_notail_proj(P, B, loss: LossSpec | None = None):
    """Greedy projection of a set onto an ordered list of anchors.

    Returns
    -------
    pairs : list of (point, anchor) tuples, one per anchor
    notail : (m - j, d) array of the unmatched points, in input order
    proj : (m, d) array, the anchors followed by the unmatched points
    """
    pts = _set_points(P)
    anchors = np.asarray(B, dtype=float).reshape(-1, pts.shape[1]) if len(B) else np.empty((0, pts.shape[1]))
    if len(anchors) > len(pts):
        raise InvalidInputError(f"{len(anchors)} anchors exceed the set size {len(pts)}")
    matched = greedy_match(pts, anchors, loss)
    pairs = [(pts[i], anchors[j]) for j, i in enumerate(matched)]
    keep = np.ones(len(pts), dtype=bool)
    keep[matched] = False
    notail = pts[keep]
    proj = np.concatenate([anchors, notail]) if len(anchors) else pts
    return pairs, notail, proj


def stacked_notail(X: np.ndarray, anchor: np.ndarray, loss: LossSpec) -> np.ndarray:
    """Drop, from each set of an ``(n, m, d)`` stack, the point closest to ``anchor``.

    Applying this once per anchor in order reproduces the greedy matching.
    """
    n, m, d = X.shape
    dist = loss.distance(X - anchor)
    drop = np.argmin(dist, axis=1)
    keep = np.ones((n, m), dtype=bool)
    keep[np.arange(n), drop] = False
    return X[keep].reshape(n, m - 1, d)
