"""Onion sensitivities and a weighted coreset of an unbalanced family.

Most sets sit in a few nearby blobs; eight sit far away. Uniform sampling
tends to miss the far group, while the onion layers give it high sensitivity.
"""

import numpy as np

from sets_coreset import CoresetParams, LossSpec, SetFamily, family_cost, sensitivities, uniform_coreset
from sets_coreset.onion import sample_coreset
from sets_coreset.harness import gen_blobs

loss = LossSpec.means()
rng = np.random.default_rng(3)
bulk = np.stack([s.points for s in gen_blobs(392, 2, 2, centers=4, rng=rng).sets])
remote = 500.0 + rng.normal(size=(8, 2, 2))
F = SetFamily.from_arrays(np.concatenate([bulk, remote]))
params = CoresetParams(k=2, sigma=40, b_sens=1.0, b_stop=4)

smap = sensitivities(F, params, loss, rng=0)
print(f"{F.n} sets, {len(smap.layers)} layers, total sensitivity t = {smap.total:.1f}")
for i, (m, idx, value) in enumerate(smap.layers):
    if i < 3 or i >= len(smap.layers) - 3:
        print(f"  layer {i:3d}: {len(idx):3d} sets, s = {value:.3f}")
print("sensitivity of the remote sets:", np.round(smap.values[-8:], 3).tolist())

# With one center near the bulk, the remote sets carry most of the cost, so a
# sample's accuracy hinges on how well it represents them.
rng = np.random.default_rng(7)
queries = [rng.uniform(-15, 15, size=(1, 2)) for _ in range(50)]
full = np.array([family_cost(F, Q, loss) for Q in queries])


def median_error(sample):
    est = np.array([sample.cost(Q, loss) for Q in queries])
    return float(np.median(np.abs(est - full) / full))


err_s, err_u, remote_u = [], [], []
for seed in range(50):
    S = sample_coreset(F, smap, 40, seed)
    U = uniform_coreset(F, 40, seed)
    err_s.append(median_error(S))
    err_u.append(median_error(U))
    remote_u.append(int(np.sum(U.indices >= 392)))
print(f"\n50 draws of 40 sets each; uniform samples hold {np.mean(remote_u):.2f} remote sets on average")
print(f"mean of median relative errors: coreset {np.mean(err_s):.3f}, uniform {np.mean(err_u):.3f}")
print(f"worst draw:                     coreset {np.max(err_s):.3f}, uniform {np.max(err_u):.3f}")
