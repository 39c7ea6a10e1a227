"""Command line entry point: ``sets-coreset {generate,coreset,solve,oracle,experiment}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..core import InvalidInputError, LossSpec, family_cost
from ..onion import CoresetParams, build_coreset, uniform_coreset
from ..solvers import BudgetExceededError, UnsupportedLossError, em_sets_kmeans, exact_oracle
from .data import gen_two_circles, load_grouped_csv, write_family_csv
from .experiments import ExperimentConfig, run_experiment, with_overrides
from .report import emit_report, summarize

logger = logging.getLogger("sets_coreset")


def _loss(args) -> LossSpec:
    if args.loss == "huber":
        return LossSpec.huber(args.delta_huber)
    if args.loss == "lpsi":
        return LossSpec.lpsi(args.psi, allow_subnorm=args.psi < 1)
    return LossSpec(args.loss)


def _add_loss(p):
    p.add_argument("--loss", choices=["median", "means", "huber", "lpsi"], default="means")
    p.add_argument("--delta-huber", type=float, default=1.0, help="Huber threshold")
    p.add_argument("--psi", type=float, default=2.0, help="exponent of the l_psi norm")


def _add_coreset(p):
    p.add_argument("--sigma", type=int, help="coreset sample size")
    p.add_argument("--epsilon", type=float, help="target error; sample size from the bound")
    p.add_argument("--delta", type=float, help="failure probability for the bound")
    p.add_argument("--tau", type=float, default=1 / 6)
    p.add_argument("--b-sens", type=float, help="sensitivity numerator (default from the loss)")
    p.add_argument("--b-stop", type=int, help="peeling stops at this many sets (default b-sens)")


def _write_json(obj, out):
    text = json.dumps(obj, indent=1) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_generate(args):
    F = gen_two_circles(args.n1, args.n2, args.r, np.random.default_rng(args.seed))
    write_family_csv(F, args.out)
    logger.info("wrote %d pairs to %s", F.n, args.out)


def cmd_coreset(args):
    F = load_grouped_csv(args.input)
    rng = np.random.default_rng(args.seed)
    if args.uniform:
        S = uniform_coreset(F, args.sigma, rng)
    else:
        params = CoresetParams(k=args.k, b_sens=args.b_sens, b_stop=args.b_stop, tau=args.tau,
                               sigma=args.sigma, epsilon=args.epsilon, delta=args.delta)
        S = build_coreset(F, params, _loss(args), rng)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["set_id", "weight", "multiplicity"])
        for sid, w, mult in zip(S.ids, S.weights, S.multiplicities):
            writer.writerow([sid, repr(float(w)), int(mult)])
    finally:
        if fh is not sys.stdout:
            fh.close()


def read_coreset_csv(path, F):
    by_id = {str(s.id): i for i, s in enumerate(F.sets)}
    idx, weights = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            if row["set_id"] not in by_id:
                raise InvalidInputError(f"{path}:{lineno}: unknown set id {row['set_id']!r}")
            idx.append(by_id[row["set_id"]])
            weights.append(float(row["weight"]) * int(row["multiplicity"]))
    return F.subset(idx, np.array(weights))


def cmd_solve(args):
    F = load_grouped_csv(args.input)
    target = read_coreset_csv(args.coreset, F) if args.coreset else F
    loss = _loss(args)
    sol = em_sets_kmeans(target, args.k, args.max_iters, args.restarts, loss, np.random.default_rng(args.seed))
    _write_json({"centers": sol.centers.tolist(), "cost": sol.cost,
                 "full_cost": family_cost(F, sol.centers, loss), "iterations": sol.iterations}, args.out)


def cmd_oracle(args):
    F = load_grouped_csv(args.input)
    sol = exact_oracle(F, args.k, _loss(args))
    _write_json({"centers": sol.centers.tolist(), "cost": sol.cost}, args.out)


def cmd_experiment(args):
    cfg = ExperimentConfig.from_file(args.config)
    cfg = with_overrides(cfg, trials=args.trials, seed=args.seed, out=args.out, format=args.format,
                         max_iters=args.max_iters, restarts=args.restarts)
    rows = run_experiment(cfg)
    if cfg.out:
        emit_report(rows, cfg.out, cfg.format)
    for s in summarize(rows):
        print("{method:>14} sigma={sigma:<5} trials={trials:<3} err={mean_error:.4g} "
              "(se {stderr:.2g}) rel_time={relative_time:.3g}".format(**s))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sets-coreset", description="Coresets for sets clustering.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write the two-circles family as CSV")
    p.add_argument("--n1", type=int, default=990)
    p.add_argument("--n2", type=int, default=10)
    p.add_argument("--r", type=float, default=1e6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("coreset", help="build a weighted coreset of a family CSV")
    p.add_argument("input")
    p.add_argument("--k", type=int, default=1)
    _add_loss(p)
    _add_coreset(p)
    p.add_argument("--uniform", action="store_true", help="uniform sampling baseline instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_coreset)

    p = sub.add_parser("solve", help="EM sets-k-means on a family or its coreset")
    p.add_argument("input")
    p.add_argument("--coreset", help="coreset CSV (set_id,weight,multiplicity)")
    p.add_argument("--k", type=int, default=1)
    _add_loss(p)
    p.add_argument("--max-iters", type=int, default=12)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exact sets-k-means of a tiny family by enumeration")
    p.add_argument("input")
    p.add_argument("--k", type=int, default=1)
    _add_loss(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="run an experiment config (JSON)")
    p.add_argument("config")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (InvalidInputError, BudgetExceededError, UnsupportedLossError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
