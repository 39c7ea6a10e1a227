"""EM, approx-mean and the exact enumeration oracle on a tiny instance."""

import numpy as np

from sets_coreset import LossSpec, approx_mean, em_sets_kmeans, exact_oracle, family_cost, robust_median
from sets_coreset import MedianParams
from sets_coreset.harness import gen_planted

loss = LossSpec.means()
F = gen_planted(9, 2, 2, rng=4)      # 5 sets near the origin, 4 far outliers
print("sets:", F.n, "points per set:", F.sizes.tolist())

opt = exact_oracle(F, 2)
print(f"\noracle (k=2): cost {opt.cost:.4f}")
print("  centers", np.round(opt.centers, 3).tolist())

em = em_sets_kmeans(F, 2, restarts=8, rng=0)
print(f"EM    (k=2): cost {em.cost:.4f} after {em.iterations} iterations")
print("  cost per iteration:", [round(c, 3) for c in em.history])

opt1 = exact_oracle(F, 1).cost
c = approx_mean(F, t_samples=5, rng=0)
print(f"\napprox-mean: cost {family_cost(F, c[None, :], loss):.3f} vs optimum {opt1:.3f}")

# The robust median ignores the outlier sets.
b = robust_median(F, MedianParams(k=1), loss, rng=0)
print("robust median:", np.round(b, 3).tolist())
