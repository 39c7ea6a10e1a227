"""Coresets and solvers for clustering families of point sets."""

from .core import (
    CenterSet,
    InvalidInputError,
    LossSpec,
    MSet,
    SetFamily,
    closepoints_notail_proj,
    closest_fraction,
    family_cost,
    point_loss,
    set_cost,
    set_costs,
)
from .onion import (
    CoresetParams,
    LayerResult,
    SensitivityMap,
    WeightedCoreset,
    build_coreset,
    robust_med_for_sets,
    sensitivities,
    uniform_coreset,
)
from .robust_median import GridSpec, MedianParams, grid_optimum, robust_median, verify_robust_median
from .solvers import (
    BudgetExceededError,
    SolveResult,
    UnsupportedLossError,
    approx_mean,
    em_sets_kmeans,
    exact_oracle,
)

__version__ = "0.1.0"
