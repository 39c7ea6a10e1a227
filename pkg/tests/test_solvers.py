import itertools

import numpy as np
import pytest

from sets_coreset import (
    BudgetExceededError,
    LossSpec,
    SetFamily,
    UnsupportedLossError,
    approx_mean,
    em_sets_kmeans,
    exact_oracle,
    family_cost,
)
from sets_coreset.core import InvalidInputError
from sets_coreset.harness import gen_blobs, gen_planted
from sets_coreset.solvers import BUDGET_ENV

MEANS = LossSpec.means()


def brute_force_k1(F):
    """Enumerate representative choices directly, one center."""
    best = np.inf
    for reps in itertools.product(*[range(s.m) for s in F.sets]):
        R = np.stack([s.points[r] for s, r in zip(F.sets, reps)])
        c = np.average(R, axis=0, weights=F.weights)
        best = min(best, float(np.dot(F.weights, ((R - c) ** 2).sum(axis=1))))
    return best


# --- oracle -------------------------------------------------------------


def test_oracle_examples():
    res = exact_oracle(SetFamily.from_arrays([[[0.0]], [[10.0]]]), 1)
    assert res.centers.tolist() == [[5.0]] and res.cost == 50

    F = SetFamily.from_arrays([[[0.0], [100.0]], [[1.0], [-100.0]]])
    res = exact_oracle(F, 1)
    assert res.centers.tolist() == [[0.5]] and res.cost == pytest.approx(0.5)
    res = exact_oracle(F, 2)
    assert res.cost == 0
    assert sorted(res.centers.ravel().tolist()) == [0.0, 1.0]


def test_oracle_matches_brute_force(rng):
    for _ in range(5):
        F = SetFamily.from_arrays(rng.normal(size=(6, 2, 2)), weights=rng.uniform(0.5, 2, 6))
        res = exact_oracle(F, 1)
        assert res.cost == pytest.approx(brute_force_k1(F), rel=1e-9)
        assert res.cost == pytest.approx(family_cost(F, res.centers, MEANS), rel=1e-9)


def test_oracle_assignment_consistent(rng):
    F = gen_blobs(6, 2, 2, rng=rng)
    res = exact_oracle(F, 2)
    for i, (c, r) in enumerate(res.assignment):
        d = ((F.sets[i].points[:, None] - res.centers[None]) ** 2).sum(-1)
        assert d[r, c] == pytest.approx(d.min())


def test_oracle_permutation_invariance(rng):
    arrays = rng.normal(size=(7, 2, 2))
    base = exact_oracle(SetFamily.from_arrays(arrays), 2).cost
    for _ in range(3):
        perm = rng.permutation(7)
        shuffled = [a[rng.permutation(2)] for a in arrays[perm]]
        assert exact_oracle(SetFamily.from_arrays(shuffled), 2).cost == pytest.approx(base, rel=1e-9)


@pytest.mark.parametrize("lam", [0.1, 3.0, 1e3])
def test_oracle_scaling_covariance(lam, rng):
    arrays = rng.normal(size=(6, 2, 2))
    a = exact_oracle(SetFamily.from_arrays(arrays), 1)
    b = exact_oracle(SetFamily.from_arrays(arrays * lam), 1)
    assert b.cost == pytest.approx(lam**2 * a.cost, rel=1e-9)
    np.testing.assert_allclose(b.centers, lam * a.centers, rtol=1e-9, atol=1e-12)


def test_oracle_budget(monkeypatch):
    F = SetFamily.from_arrays(np.arange(40.0).reshape(10, 2, 2))
    with pytest.raises(BudgetExceededError, match="prod"):
        exact_oracle(F, 2, budget=1000)
    monkeypatch.setenv(BUDGET_ENV, "100")
    with pytest.raises(BudgetExceededError):
        exact_oracle(F, 1)
    monkeypatch.setenv(BUDGET_ENV, "2000")
    assert exact_oracle(F, 1).cost >= 0


def test_oracle_unsupported_loss():
    F = SetFamily.from_arrays([[[0.0]], [[1.0]]])
    with pytest.raises(UnsupportedLossError):
        exact_oracle(F, 1, LossSpec.median())


def test_oracle_k_exceeds_sets():
    # More centers than sets: spare centers are placed on unused data points.
    res = exact_oracle(SetFamily.from_arrays([[[0.0], [3.0]]]), 2)
    assert res.cost == 0
    assert len({tuple(c) for c in res.centers}) == 2


# --- EM -----------------------------------------------------------------


def test_em_converges_immediately():
    F = SetFamily.from_arrays([[[0.0, 0.0]], [[5.0, 5.0]], [[0.0, 0.0], [9.0, 9.0]]])
    res = em_sets_kmeans(F, 2, init=np.array([[0.0, 0.0], [5.0, 5.0]]))
    assert res.iterations == 1 and res.cost == 0


@pytest.mark.parametrize("loss", [MEANS, LossSpec.median(), LossSpec.huber(0.5), LossSpec.lpsi(1.0)],
                         ids=lambda l: l.kind)
def test_em_monotone(loss, rng):
    for _ in range(10):
        F = gen_planted(30, 3, 2, rng=rng)
        res = em_sets_kmeans(F, 3, loss=loss, rng=rng)
        h = np.array(res.history)
        assert np.all(np.diff(h) <= 1e-9 * np.maximum(1, h[:-1]))
        assert res.iterations <= 12
        assert res.cost == pytest.approx(family_cost(F, res.centers, loss), rel=1e-9)


def test_em_not_below_oracle(rng):
    for _ in range(10):
        F = gen_blobs(7, 2, 2, rng=rng)
        opt = exact_oracle(F, 2).cost
        em = em_sets_kmeans(F, 2, restarts=3, rng=rng).cost
        assert em >= opt - 1e-9 * max(1, opt)


def test_em_restarts_keep_best(rng):
    F = gen_blobs(40, 2, 2, centers=4, rng=1)
    one = em_sets_kmeans(F, 4, restarts=1, rng=np.random.default_rng(0))
    many = em_sets_kmeans(F, 4, restarts=8, rng=np.random.default_rng(0))
    assert many.cost <= one.cost


def test_em_validation():
    F = SetFamily.from_arrays([[[0.0]], [[0.0], [1.0]]])
    with pytest.raises(InvalidInputError):
        em_sets_kmeans(F, 3)


def test_em_deterministic():
    F = gen_blobs(30, 2, 2, rng=2)
    a = em_sets_kmeans(F, 2, restarts=4, rng=5)
    b = em_sets_kmeans(F, 2, restarts=4, rng=5)
    assert a.cost == b.cost
    np.testing.assert_array_equal(a.centers, b.centers)


# --- approx-mean --------------------------------------------------------


def test_approx_mean_single_set():
    F = SetFamily.from_arrays([[[1.0, 1.0], [4.0, 0.0]]])
    c = approx_mean(F, 5, rng=0)
    assert family_cost(F, c[None, :], MEANS) == 0


def test_approx_mean_identical_singletons():
    F = SetFamily.from_arrays([[[7.0]]] * 6)
    assert approx_mean(F, 5, rng=0).tolist() == [7.0]


def test_approx_mean_within_factor(rng):
    ok = 0
    F = gen_planted(8, 2, 2, rng=3)
    opt = exact_oracle(F, 1).cost
    for seed in range(50):
        c = approx_mean(F, 5, rng=seed)
        ok += family_cost(F, c[None, :], MEANS) <= 9 * opt
    assert ok >= 45


def test_approx_mean_rejects_zero_samples():
    with pytest.raises(InvalidInputError):
        approx_mean(SetFamily.from_arrays([[[0.0]]]), 0)
