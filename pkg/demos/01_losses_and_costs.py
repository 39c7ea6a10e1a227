"""Set costs under the four loss families.

A set is served by whichever of its points lies closest to any center, so a
single far-away point never hurts it. Run with ``python3 demos/01_losses_and_costs.py``.
"""

import numpy as np

from sets_coreset import LossSpec, SetFamily, closest_fraction, closepoints_notail_proj, family_cost, set_cost

losses = {
    "median": LossSpec.median(),
    "means": LossSpec.means(),
    "huber(1)": LossSpec.huber(1.0),
    "l1 (psi=1)": LossSpec.lpsi(1.0),
}

# A pair of points; only the nearer one counts.
P = np.array([[3.0, 4.0], [40.0, 0.0]])
C = np.array([[0.0, 0.0]])
print("cost of P = {(3,4), (40,0)} against the origin")
for name, loss in losses.items():
    print(f"  {name:>10}: {set_cost(P, C, loss):8.3f}   (r={loss.r}, rho={loss.rho:.3g})")

# %% A family and its closest fraction
rng = np.random.default_rng(0)
near = rng.normal(scale=0.5, size=(6, 2, 2))
far = rng.normal(loc=50.0, size=(2, 2, 2))
F = SetFamily.from_arrays(np.concatenate([near, far]))
means = losses["means"]
print("\nfamily cost at the origin:", round(family_cost(F, C, means), 2))
half = closest_fraction(F, C, 0.5, means)
print("closest half (ids):", half.ids, "cost:", round(family_cost(half, C, means), 3))

# %% Projection of a set onto anchors
# Each anchor grabs its nearest remaining point; unmatched points stay as they are.
pairs, notail, proj = closepoints_notail_proj([[0.0, 0.0], [9.0, 9.0], [5.0, 0.0]], [[1.0, 1.0]])
print("\nmatched:", [(p.tolist(), b.tolist()) for p, b in pairs])
print("left over:", notail.tolist())
print("projection:", proj.tolist())
