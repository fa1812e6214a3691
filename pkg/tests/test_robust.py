import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmcore.errors import GuardExceeded, ValidationError
from dmcore.instances import gaussian_clusters, line, random_euclidean
from dmcore.metric import from_coords, kdist_trimmed
from dmcore.robust import (bicriteria_outliers, expand, gamma_grid, property_test, robust_check, robust_size,
                           trimmed_costs, uniform_sample)


def test_uniform_sample_basics():
    M = random_euclidean(10, 2, seed=0)
    assert uniform_sample(M, 1, seed=3).ids.size == 1
    a, b = uniform_sample(M, 50, seed=3), uniform_sample(M, 50, seed=3)
    assert np.array_equal(a.ids, b.ids)
    with pytest.raises(ValidationError):
        uniform_sample(M, 0)


def test_uniform_frequencies_within_five_sigma():
    M = random_euclidean(10, 2, seed=0)
    counts = uniform_sample(M, 1000, seed=1).counts(M.n)
    sd = np.sqrt(1000 * 0.1 * 0.9)
    assert (np.abs(counts - 100) <= 5 * sd).all()


def test_trimmed_costs_match_metric_module():
    M = random_euclidean(25, 2, seed=2)
    rows = expand(M.multiplicity)
    block = np.array([[0, 3], [5, 9], [1, 2]])
    for g in (0.0, 0.1, 0.37):
        got = trimmed_costs(M, block, 2.0, g, rows)
        want = [kdist_trimmed(M, C, z=2.0, gamma=g) for C in block]
        assert np.allclose(got, want, rtol=1e-12)


def test_full_sample_passes_with_zero_eps():
    M = random_euclidean(15, 2, seed=4)
    for k in (1, 2):
        res = robust_check(M, np.arange(M.n), alpha=0.1, eps=0.0, z=1, k=k)
        assert res.passed and res.worst_margin >= -1e-12


def test_single_outlier_fails():
    M = line([0, 1, 3, 100])
    res = robust_check(M, [3], alpha=0.1, eps=0.1, z=1, k=1)
    assert not res.passed and res.worst_margin < -1


def test_check_validation():
    M = line([0, 1, 3, 100])
    with pytest.raises(ValidationError):
        robust_check(M, [], alpha=0.1, eps=0, z=1, k=1)
    with pytest.raises(ValidationError):
        robust_check(M, [0], alpha=0.1, eps=0, z=1, k=1, grid=[0.05])
    with pytest.raises(ValidationError):
        robust_check(M, [0], alpha=0.1, eps=0, z=1, k=1, grid=[])


def test_gamma_grid_covers_every_cell():
    alpha, sizes = 0.2, [4, 5]
    g = gamma_grid(alpha, sizes)
    assert ((g > alpha) & (g < 1 - alpha)).all() and np.all(np.diff(g) > 0)

    def keeps(x):
        return tuple(int(np.ceil((1 - (x + sh)) * N - 1e-9)) for N in sizes for sh in (-alpha, 0, alpha))

    on_grid = {keeps(x) for x in g}
    for x in np.random.default_rng(0).uniform(alpha, 1 - alpha, 2000):
        assert keeps(x) in on_grid


def test_bicriteria_examples():
    M = line([0, 1, 3, 100])
    assert bicriteria_outliers(M, 1, 1, 0.25) == 3
    assert bicriteria_outliers(M, 4, 1, 0.25) == 0
    with pytest.raises(GuardExceeded):
        bicriteria_outliers(random_euclidean(500, 2, seed=0), 3, 1, 0.1)
    with pytest.raises(ValidationError):
        bicriteria_outliers(M, 1, 1, 0.25, mode="magic")


@pytest.mark.parametrize("seed", range(5))
def test_heuristic_never_below_exhaustive(seed):
    M = from_coords(gaussian_clusters([20, 20], [[0, 0], [30, 0]], 2.0, seed=seed, outliers=4, outlier_radius=300))
    for k in (1, 2):
        ex = bicriteria_outliers(M, k, 1, 0.1)
        he = bicriteria_outliers(M, k, 1, 0.1, mode="heuristic", seed=seed)
        assert he >= ex - 1e-9


def test_property_test_trivial_verdicts():
    M = random_euclidean(60, 2, seed=1)
    hi = property_test(M, 2, 1, Delta=1e12, gamma=0.2, alpha=0.05, eps=0.1, tau=0.1, size=40)
    assert hi.accept and hi.Lambda <= hi.threshold
    lo = property_test(M, 2, 1, Delta=0.0, gamma=0.2, alpha=0.05, eps=0.1, tau=0.1, size=40)
    assert not lo.accept and lo.Lambda > 0
    for bad in (dict(alpha=0.3), dict(gamma=0.01), dict(eps=0.5), dict(Delta=-1.0), dict(lam=0.5)):
        args = dict(Delta=1.0, gamma=0.2, alpha=0.05, eps=0.1, tau=0.1, size=10)
        args.update(bad)
        with pytest.raises(ValidationError):
            property_test(M, 2, 1, **args)


def test_robust_size_monotone():
    assert robust_size(2, 1, 0.2, 0.01, 0.05, 2.0) > robust_size(2, 1, 0.2, 0.01, 0.1, 2.0)


def test_trimmed_envelope_over_seeds():
    M = random_euclidean(500, 2, seed=9)
    rows = expand(M.multiplicity)
    C = np.array([[0, 17]])
    alpha, gamma = 0.25, 0.5
    lo = trimmed_costs(M, C, 1, gamma + alpha, rows)[0] / M.total
    hi = trimmed_costs(M, C, 1, gamma - alpha, rows)[0] / M.total
    hits = 0
    for s in range(200):
        S = uniform_sample(M, 64, seed=s).ids
        v = trimmed_costs(M, C, 1, gamma, S)[0] / S.size
        hits += lo <= v <= hi
    assert hits >= 0.95 * 200


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 200), min_size=4, max_size=12, unique=True), st.integers(1, 3))
def test_repeated_full_set_passes(xs, reps):
    # X repeated r times shifts trimming breakpoints by less than alpha once |X| >= 2/alpha
    M = line(sorted(xs))
    alpha = max(0.2, 2 / M.n)
    if alpha >= 0.5:
        return
    res = robust_check(M, np.repeat(np.arange(M.n), reps), alpha=alpha, eps=0.0, z=1, k=1)
    assert res.passed
