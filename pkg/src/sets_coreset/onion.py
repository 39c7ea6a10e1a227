"""Onion-sampling coreset construction for families of sets.

Sensitivities are assigned layer by layer: each layer is a group of
"recursively similar" sets found by ``m`` rounds of robust medians, it gets
the sensitivity ``b_sens / |layer|`` and is peeled off the family. Sets left
over once the family is small get sensitivity 1. A coreset is then an i.i.d.
sample drawn proportionally to the sensitivities and reweighted so that its
weighted cost is an unbiased estimate of the full cost.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    InvalidInputError,
    LossSpec,
    SetFamily,
    as_rng,
    ceil_count,
    family_cost,
    stacked_costs,
    stacked_notail,
)
from .robust_median import MedianParams, robust_median_of_arrays

logger = logging.getLogger(__name__)


def default_b_sens(loss: LossSpec, m: int) -> int:
    """Sensitivity numerator ``ceil(5 rho (3 rho^2)^m)`` from the layer bound."""
    rho = loss.rho
    return math.ceil(5 * rho * (3 * rho**2) ** m)


def layer_fraction(k: int, tau: float) -> float:
    return (1 - tau) / (4 * k)


@dataclass(frozen=True)
class CoresetParams:
    k: int = 1
    b_sens: float | None = None
    b_stop: int | None = None
    tau: float = 1 / 6
    sigma: int | None = None
    epsilon: float | None = None
    delta: float | None = None
    d_prime: int | None = None
    b_med: int = 3
    median_delta: float = 0.1

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError("k must be >= 1")
        if not 0 <= self.tau < 1:
            raise InvalidInputError("tau must lie in [0, 1)")
        if self.b_sens is not None and not self.b_sens > 0:
            raise InvalidInputError("b_sens must be positive")
        if self.b_stop is not None and self.b_stop < 1:
            raise InvalidInputError("b_stop must be >= 1")
        if self.d_prime is not None and self.d_prime < 1:
            raise InvalidInputError("d_prime must be >= 1")
        has_sigma = self.sigma is not None
        has_eps = self.epsilon is not None or self.delta is not None
        if has_sigma and has_eps:
            raise InvalidInputError("give either sigma or (epsilon, delta), not both")
        if has_eps and (self.epsilon is None or self.delta is None):
            raise InvalidInputError("epsilon and delta must be given together")

    def median_params(self) -> MedianParams:
        return MedianParams(k=self.k, delta=self.median_delta, b_med=self.b_med, tau=self.tau)

    def b_sens_for(self, loss: LossSpec, m: int) -> float:
        return default_b_sens(loss, m) if self.b_sens is None else self.b_sens

    def b_stop_for(self, loss: LossSpec, m: int) -> int:
        return math.ceil(self.b_sens_for(loss, m)) if self.b_stop is None else self.b_stop


@dataclass(frozen=True, eq=False)
class LayerResult:
    layer: SetFamily
    anchors: np.ndarray
    indices: np.ndarray


@dataclass(frozen=True, eq=False)
class SensitivityMap:
    """Per-set sensitivity upper bounds, clamped to (0, 1]."""

    values: np.ndarray
    # (set size, family indices of one layer, assigned value) in peeling order
    layers: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True, eq=False)
class WeightedCoreset:
    """A weighted multiset of sets drawn from ``family``.

    ``weights`` are per draw; a set drawn ``multiplicity`` times contributes
    ``weight * multiplicity`` to any cost.
    """

    family: SetFamily
    indices: np.ndarray
    multiplicities: np.ndarray
    weights: np.ndarray
    sigma: int
    total_sensitivity: float | None = None

    @property
    def total_weights(self) -> np.ndarray:
        return self.weights * self.multiplicities

    @property
    def ids(self) -> list:
        return [self.family.sets[i].id for i in self.indices]

    def as_family(self) -> SetFamily:
        return self.family.subset(self.indices, self.total_weights)

    def cost(self, C, loss: LossSpec) -> float:
        return family_cost(self.as_family(), C, loss)


# ---------------------------------------------------------------------------
# Recursive similarity


def _recursive_similarity(X: np.ndarray, k: int, tau: float, loss: LossSpec,
                          mparams: MedianParams, rng: np.random.Generator):
    """Layer extraction on an ``(n, m, d)`` stack; returns (indices, anchors)."""
    n, m, _ = X.shape
    current = np.arange(n)
    residual = X
    anchors = []
    frac = layer_fraction(k, tau)
    for _ in range(m):
        b = robust_median_of_arrays(list(residual), mparams, loss, rng)
        costs = stacked_costs(residual, b[None, :], loss)
        count = ceil_count(frac, len(current))
        keep = np.sort(np.argsort(costs, kind="stable")[:count])
        current = current[keep]
        residual = stacked_notail(residual[keep], b, loss)
        anchors.append(b)
    return current, np.array(anchors)


def robust_med_for_sets(F: SetFamily, k: int, tau: float, loss: LossSpec, rng=None,
                        median_params: MedianParams | None = None) -> LayerResult:
    """Extract one layer of recursively similar sets from an equal-size family.

    Round ``i`` computes a robust median of the unmatched remainders of the
    surviving sets, keeps the ``ceil((1 - tau) / (4k) * survivors)`` sets whose
    remainder is closest to it (at least one), and matches it to each kept set.
    """
    if not F.is_uniform:
        raise InvalidInputError("robust_med_for_sets needs sets of equal size; partition first")
    mparams = median_params or MedianParams(k=k, tau=tau)
    idx, anchors = _recursive_similarity(F.stacked(), k, tau, loss, mparams, as_rng(rng))
    return LayerResult(F.subset(idx), anchors, idx)


def sensitivities(F: SetFamily, params: CoresetParams, loss: LossSpec, rng=None) -> SensitivityMap:
    """Onion-sampling sensitivity bounds for every set of ``F``.

    Sets are partitioned by size and each partition is peeled independently.
    """
    rng = as_rng(rng)
    s = np.zeros(F.n)
    layers = []
    mparams = params.median_params()
    for m, group in F.size_groups.items():
        X = F.stacked(group)
        b_sens = params.b_sens_for(loss, m)
        b_stop = params.b_stop_for(loss, m)
        remaining = np.arange(len(group))
        while len(remaining) > b_stop:
            local, _ = _recursive_similarity(X[remaining], params.k, params.tau, loss, mparams, rng)
            members = remaining[local]
            value = min(1.0, b_sens / len(members))
            s[group[members]] = value
            layers.append((m, group[members], value))
            remaining = np.setdiff1d(remaining, members, assume_unique=True)
        s[group[remaining]] = 1.0
        if len(remaining):
            layers.append((m, group[remaining], 1.0))
    return SensitivityMap(s, layers)


def total_sensitivity_bound(n: int, m: int, k: int, tau: float, b_sens: float, b_stop: int) -> float:
    """Upper bound ``b_sens * (4k/(1-tau))^m * ceil(log2 n) + b_stop`` on the total sensitivity."""
    return b_sens * (4 * k / (1 - tau)) ** m * math.ceil(math.log2(n)) + b_stop


def sample_size(t: float, n: int, epsilon: float, delta: float, b_sens: float, d_prime: int) -> int:
    """Sample size ``ceil(b t / eps^2 (d' log t + log 1/delta))``, capped at ``n ceil(log n)``."""
    if not 0 < epsilon < 1:
        raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < delta < 1:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    raw = math.ceil(b_sens * t / epsilon**2 * (d_prime * math.log(t) + math.log(1 / delta)))
    sigma = min(raw, n * math.ceil(math.log(n)))
    if sigma < 1:
        raise InvalidInputError(f"resolved sample size {sigma} < 1 (n={n}, raw={raw})")
    return sigma


def resolve_sigma(F: SetFamily, params: CoresetParams, loss: LossSpec, t: float) -> int:
    if params.sigma is not None:
        if params.sigma < 1:
            raise InvalidInputError(f"sigma must be >= 1, got {params.sigma}")
        return int(params.sigma)
    if params.epsilon is None:
        raise InvalidInputError("either sigma or (epsilon, delta) is required")
    m = int(F.sizes.max())
    d_prime = params.d_prime or m * F.dim**2 * params.k**2
    return sample_size(t, F.n, params.epsilon, params.delta, params.b_sens_for(loss, m), d_prime)


def sample_coreset(F: SetFamily, smap: SensitivityMap, sigma: int, rng=None) -> WeightedCoreset:
    """Draw ``sigma`` sets i.i.d. with probability ``s/t`` and weight ``w t / (sigma s)``."""
    rng = as_rng(rng)
    s = smap.values
    t = float(s.sum())
    draws = rng.choice(F.n, size=sigma, replace=True, p=s / t)
    idx, mult = np.unique(draws, return_counts=True)
    weights = F.weights[idx] * t / (sigma * s[idx])
    return WeightedCoreset(F, idx, mult, weights, sigma, t)


def build_coreset(F: SetFamily, params: CoresetParams, loss: LossSpec, rng=None) -> WeightedCoreset:
    rng = as_rng(rng)
    smap = sensitivities(F, params, loss, rng)
    sigma = resolve_sigma(F, params, loss, smap.total)
    logger.debug("coreset: n=%d t=%.3f sigma=%d", F.n, smap.total, sigma)
    return sample_coreset(F, smap, sigma, rng)


def uniform_coreset(F: SetFamily, sigma: int, rng=None) -> WeightedCoreset:
    """Uniform sample of ``sigma`` distinct sets, each weighted ``n / sigma``."""
    if not 1 <= sigma <= F.n:
        raise InvalidInputError(f"sigma must lie in [1, n={F.n}], got {sigma}")
    rng = as_rng(rng)
    idx = np.sort(rng.choice(F.n, size=sigma, replace=False))
    weights = F.weights[idx] * F.n / sigma
    return WeightedCoreset(F, idx, np.ones(sigma, dtype=int), weights, sigma)
