"""Coreset vs uniform sample on the two-circles family.

990 pairs sit around the origin and 10 pairs around (1e6, 0). A uniform
sample of 100 sets usually misses the small group entirely, so its 2-means
solution puts both centers near the origin; the coreset keeps the far group.
"""

import argparse

from sets_coreset.harness import ExperimentConfig, emit_report, run_experiment, summarize

parser = argparse.ArgumentParser()
parser.add_argument("--trials", type=int, default=5)
parser.add_argument("--out", help="optional CSV report")
args = parser.parse_args()

cfg = ExperimentConfig(
    dataset={"generator": "two_circles", "n1": 990, "n2": 10, "r": 1e6, "seed": 1},
    k=2,
    sigmas=[50, 100],
    trials=args.trials,
    seed=7,
    coreset={"b_sens": 1.0, "b_stop": 10},
)
rows = run_experiment(cfg)
if args.out:
    emit_report(rows, args.out)

print(f"{'method':>8} {'sigma':>6} {'mean error':>12} {'stderr':>10} {'time / full':>12}")
for s in summarize(rows):
    print(f"{s['method']:>8} {s['sigma']:>6} {s['mean_error']:>12.4g} {s['stderr']:>10.3g} {s['relative_time']:>12.3f}")
