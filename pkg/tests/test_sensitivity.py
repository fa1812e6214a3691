import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmcore.errors import GuardExceeded, ValidationError
from dmcore.instances import line, random_euclidean, uniform_metric
from dmcore.metric import from_coords, kdist
from dmcore.nets import build_hierarchy, build_simple_tree
from dmcore.ranges import is_gap
from dmcore.sensitivity import (brute_optimum, brute_sensitivity, calibrated_profile, default_c_assumed,
                                dz_seed, round_theta, sensitivity_bounds, solution_for)
from dmcore.smoothing import SmoothedMetric


def test_dz_seed_examples():
    M = line([0, 1, 3])
    B = dz_seed(M, 1, 1, restarts=10)
    assert B.cost == 3 and B.centers == (1,)
    assert dz_seed(M, 3, 1).cost == 0
    a, b = dz_seed(random_euclidean(50, 2, seed=1), 3, 2, seed=7), dz_seed(random_euclidean(50, 2, seed=1), 3, 2, seed=7)
    assert a.centers == b.centers and a.cost == b.cost
    with pytest.raises(ValidationError):
        dz_seed(M, 4, 1)


def test_solution_fields():
    M = random_euclidean(30, 2, seed=2)
    B = dz_seed(M, 3, 1)
    assert B.cost == pytest.approx(kdist(M, B.centers, z=1), abs=1e-9)
    d = M.dist[:, list(B.centers)]
    assert np.allclose(M.dist[np.arange(M.n), B.assignment], d.min(axis=1))
    # ties go to the smallest centre id
    T = solution_for(line([0, 1, 2]), [0, 2], 1)
    assert T.assignment[1] == 0
    assert B.cluster_sizes.sum() == M.total


@pytest.mark.parametrize("k,z", [(1, 1), (2, 1), (2, 2), (3, 1.5)])
def test_total_pi_identity(k, z):
    M = random_euclidean(40, 2, seed=k)
    B = dz_seed(M, k, z)
    P = sensitivity_bounds(M, B, z, c_assumed=3.0)
    assert P.total_pi == pytest.approx(2 ** (2 * z + 2) * 3.0 * (k + 2), rel=1e-12)


def test_uniform_four_soundness():
    M = uniform_metric(4)
    sigma = brute_sensitivity(M, 1, 1)
    for c in range(4):
        P = sensitivity_bounds(M, solution_for(M, [c], 1), 1, c_assumed=1.0)
        assert (P.pi >= 2 * sigma).all()


def test_brute_sensitivity_examples():
    M = line([0, 1, 3])
    sigma = brute_sensitivity(M, 1, 1)
    assert sigma[2] == pytest.approx(3 / 4)
    for seed in range(5):
        X = random_euclidean(12, 2, seed=seed)
        s = brute_sensitivity(X, 2, 1)
        assert s.sum() >= 1 - 1e-12 and (s > 0).all()
    with pytest.raises(GuardExceeded):
        brute_sensitivity(random_euclidean(60, 2, seed=0), 5, 1)


def test_theta_rounding():
    pi = np.array([0.1, 0.25, 0.3, 1.0, 7.9])
    theta = round_theta(4, pi)
    assert ((theta / 2 <= 4 * pi) & (4 * pi < theta)).all()
    assert np.all(np.log2(theta) == np.round(np.log2(theta)))
    assert is_gap(1 / theta, 2)


def test_budget():
    M = random_euclidean(80, 3, seed=3)
    P = sensitivity_bounds(M, dz_seed(M, 3, 1), 1)
    assert P.total_theta <= 2 * M.total * P.total_pi + M.total


def test_zero_cost_profile():
    M = from_coords([[2.0, 2.0], [2.0, 2.0], [2.0, 2.0]])
    B = dz_seed(M, 1, 1)
    assert B.cost == 0
    P = sensitivity_bounds(M, B, 1)
    assert P.pi.tolist() == [1 / 3] and P.theta.tolist() == [2.0]


def test_default_c():
    assert default_c_assumed(1) == 2.0**6
    with pytest.raises(ValidationError):
        sensitivity_bounds(line([0, 1]), dz_seed(line([0, 1]), 1, 1), 1, c_assumed=0.5)


def test_soundness_with_observed_ratio():
    for seed in range(6):
        M = random_euclidean(14, 2, seed=seed)
        for k, z in [(1, 1), (2, 1), (2, 2)]:
            B = dz_seed(M, k, z, seed=seed)
            opt, _ = brute_optimum(M, k, z)
            c = max(1.0, B.cost / opt)
            P = sensitivity_bounds(M, B, z, c)
            assert (P.pi >= 2 * brute_sensitivity(M, k, z)).all()


def test_calibration_reports_no_escalation_when_sound():
    M = random_euclidean(12, 2, seed=0)
    B = dz_seed(M, 2, 1)
    prof, steps = calibrated_profile(M, B, 1, 1.0, brute_sensitivity(M, 2, 1))
    assert steps == 0


def test_auxiliary_function_transfer():
    for seed in range(3):
        M = random_euclidean(10, 2, seed=seed)
        S = SmoothedMetric(build_simple_tree(build_hierarchy(M)), eps=0.1 / 100)
        for k in (1, 2):
            P = sensitivity_bounds(M, dz_seed(M, k, 1), 1)
            for C in itertools.combinations(range(M.n), k):
                psi = S.matrix[:, list(C)].min(axis=1)
                if psi.sum() > 0:
                    assert (P.theta >= M.n * psi / psi.sum() - 1e-9).all()


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 100), st.integers(0, 100)), min_size=3, max_size=10, unique=True),
       st.integers(1, 2), st.sampled_from([1.0, 2.0]))
def test_soundness_random(points, k, z):
    M = from_coords(np.array(points, dtype=float))
    k = min(k, M.n - 1)
    B = dz_seed(M, k, z)
    opt, _ = brute_optimum(M, k, z)
    c = max(1.0, B.cost / opt) if opt > 0 else 1.0
    P = sensitivity_bounds(M, B, z, c)
    assert (P.pi >= 2 * brute_sensitivity(M, k, z) * (1 - 1e-12)).all()
