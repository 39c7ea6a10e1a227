"""Experiment runners comparing coresets against uniform sampling and the full data."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..core import InvalidInputError, LossSpec, SetFamily, family_cost
from ..onion import CoresetParams, build_coreset, uniform_coreset
from ..solvers import BudgetExceededError, em_sets_kmeans, exact_oracle
from .data import gen_blobs, gen_planted, gen_two_circles, load_grouped_csv
from .report import ReportRow

logger = logging.getLogger(__name__)

DEFAULT_SIGMAS = tuple(range(20, 141, 10))
DEFAULT_PREFIXES = (10, 12)
REFERENCE_PREFIX_MAX = 800

GENERATORS = {"two_circles": gen_two_circles, "planted": gen_planted, "blobs": gen_blobs}


def approximation_error(F: SetFamily, C_base, C_test, loss: LossSpec) -> float:
    """``|cost(F, C_base) - cost(F, C_test)| / cost(F, C_base)``."""
    base = family_cost(F, C_base, loss)
    if base <= 0:
        raise InvalidInputError("approximation error is undefined for a zero baseline cost")
    return abs(base - family_cost(F, C_test, loss)) / base


def relative_error(base_cost: float, test_cost: float) -> float:
    if base_cost <= 0:
        raise InvalidInputError("approximation error is undefined for a zero baseline cost")
    return abs(base_cost - test_cost) / base_cost


@dataclass
class ExperimentConfig:
    dataset: dict
    loss: LossSpec = field(default_factory=LossSpec.means)
    k: int = 2
    sigmas: list | None = None
    prefixes: list | None = None
    trials: int = 1
    seed: int = 0
    max_iters: int = 12
    restarts: int = 8
    coreset: dict = field(default_factory=dict)
    mode: str = "experiment-i"
    out: str | None = None
    format: str = "csv"
    timing: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if self.mode not in ("experiment-i", "experiment-ii", "single-solve"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        loss = raw.pop("loss", {"kind": "means"})
        if isinstance(loss, str):
            loss = {"kind": loss}
        return cls(loss=LossSpec(**loss), **raw)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def load_family(self) -> SetFamily:
        spec = dict(self.dataset)
        if "path" in spec:
            return load_grouped_csv(spec["path"], spec.get("d"))
        name = spec.pop("generator")
        seed = spec.pop("seed", self.seed)
        return GENERATORS[name](rng=np.random.default_rng(seed), **spec)

    def coreset_params(self, sigma: int) -> CoresetParams:
        return CoresetParams(k=self.k, sigma=sigma, **self.coreset)


def trial_seeds(seed: int, trials: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]


def resolve_sigmas(cfg: ExperimentConfig, n: int) -> list[int]:
    if cfg.sigmas is None:
        sigmas = [s for s in DEFAULT_SIGMAS if s <= n // 2] or [max(1, n // 2)]
        if len(sigmas) < len(DEFAULT_SIGMAS):
            logger.warning("default sigma sweep truncated to %s for n=%d", sigmas, n)
        return sigmas
    for s in cfg.sigmas:
        if not 1 <= s <= n:
            raise InvalidInputError(f"sigma {s} outside [1, n={n}]")
    return sorted(int(s) for s in cfg.sigmas)


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.elapsed = 0.0

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._t0 if self.enabled else 0.0


def _map_trials(fn, seeds, workers: int):
    jobs = list(enumerate(seeds))
    if workers <= 1:
        return [fn(t, s) for t, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def run_experiment_i(cfg: ExperimentConfig, family: SetFamily | None = None) -> list[ReportRow]:
    """Coreset vs uniform sample vs full data, each solved by the EM heuristic.

    Per trial the full family is solved once (``full`` row); per sigma both a
    coreset and a uniform sample are built and solved, and their centers are
    scored on the full family by the approximation error against the full
    solution. Wall time covers construction plus solve.
    """
    F = family if family is not None else cfg.load_family()
    sigmas = resolve_sigmas(cfg, F.n)
    loss = cfg.loss

    def trial(t: int, seed: int) -> list[ReportRow]:
        rng = np.random.default_rng(seed)
        rows = []
        with _Clock(cfg.timing) as clk:
            full = em_sets_kmeans(F, cfg.k, cfg.max_iters, cfg.restarts, loss, rng)
        base = full.cost
        rows.append(ReportRow("full", F.n, t, base, 0.0, clk.elapsed, seed, full.centers.tolist()))
        for sigma in sigmas:
            for method in ("coreset", "uniform"):
                with _Clock(cfg.timing) as clk:
                    if method == "coreset":
                        S = build_coreset(F, cfg.coreset_params(sigma), loss, rng)
                    else:
                        S = uniform_coreset(F, sigma, rng)
                    sol = em_sets_kmeans(S.as_family(), cfg.k, cfg.max_iters, cfg.restarts, loss, rng)
                cost = family_cost(F, sol.centers, loss)
                rows.append(ReportRow(method, sigma, t, cost, relative_error(base, cost), clk.elapsed,
                                      seed, sol.centers.tolist()))
        return rows

    results = _map_trials(trial, trial_seeds(cfg.seed, cfg.trials), cfg.workers)
    return [row for rows in results for row in rows]


def run_experiment_ii(cfg: ExperimentConfig, family: SetFamily | None = None) -> list[ReportRow]:
    """Exact sets-mean on coresets of size sigma/10 and sigma/5 vs on the full prefix.

    Each trial shuffles the family and takes prefixes of the configured sizes.
    The oracle centers of each coreset are scored on the full prefix. Rows use
    the methods ``coreset_div10``, ``coreset_div5`` and ``full``, with ``sigma``
    set to the prefix size. Prefixes beyond the enumeration budget are skipped
    with a logged reason.
    """
    F = family if family is not None else cfg.load_family()
    loss = cfg.loss
    prefixes = [p for p in (cfg.prefixes or DEFAULT_PREFIXES) if p <= F.n]
    logger.warning("experiment-ii scaled from prefixes up to %d sets to %s (oracle budget)",
                   REFERENCE_PREFIX_MAX, prefixes)

    def trial(t: int, seed: int) -> list[ReportRow]:
        rng = np.random.default_rng(seed)
        order = rng.permutation(F.n)
        rows = []
        for size in prefixes:
            P = F.subset(order[:size])
            try:
                with _Clock(cfg.timing) as clk:
                    full = exact_oracle(P, cfg.k, loss)
            except BudgetExceededError as exc:
                logger.warning("trial %d prefix %d skipped: %s", t, size, exc)
                continue
            if full.cost <= 0:
                logger.warning("trial %d prefix %d skipped: zero optimal cost", t, size)
                continue
            rows.append(ReportRow("full", size, t, full.cost, 0.0, clk.elapsed, seed, full.centers.tolist()))
            for method, div in (("coreset_div10", 10), ("coreset_div5", 5)):
                sigma = size // div
                if sigma < 1:
                    logger.warning("prefix %d: sigma/%d < 1, clamped to 1", size, div)
                    sigma = 1
                with _Clock(cfg.timing) as clk:
                    S = build_coreset(P, cfg.coreset_params(sigma), loss, rng)
                    sol = exact_oracle(S.as_family(), cfg.k, loss)
                cost = family_cost(P, sol.centers, loss)
                rows.append(ReportRow(method, size, t, cost, relative_error(full.cost, cost), clk.elapsed,
                                      seed, sol.centers.tolist()))
        return rows

    results = _map_trials(trial, trial_seeds(cfg.seed, cfg.trials), cfg.workers)
    return [row for rows in results for row in rows]


def run_single_solve(cfg: ExperimentConfig, family: SetFamily | None = None) -> list[ReportRow]:
    F = family if family is not None else cfg.load_family()

    def trial(t: int, seed: int) -> list[ReportRow]:
        with _Clock(cfg.timing) as clk:
            sol = em_sets_kmeans(F, cfg.k, cfg.max_iters, cfg.restarts, cfg.loss, np.random.default_rng(seed))
        return [ReportRow("full", F.n, t, sol.cost, 0.0, clk.elapsed, seed, sol.centers.tolist())]

    results = _map_trials(trial, trial_seeds(cfg.seed, cfg.trials), cfg.workers)
    return [row for rows in results for row in rows]


def run_experiment(cfg: ExperimentConfig, family: SetFamily | None = None) -> list[ReportRow]:
    runner = {"experiment-i": run_experiment_i, "experiment-ii": run_experiment_ii,
              "single-solve": run_single_solve}[cfg.mode]
    return runner(cfg, family)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
