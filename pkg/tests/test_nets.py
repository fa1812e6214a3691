import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmcore.errors import ValidationError
from dmcore.instances import line, log_scale_euclidean, random_euclidean, standard_corpus
from dmcore.metric import estimate_doubling_dim, from_coords
from dmcore.nets import (build_decomposition_tree, build_hierarchy, build_simple_tree, check_hierarchy,
                         check_tree, default_chi, parent_at, sample_radii, top_level_for)
from dmcore.rng import derive_rng


def test_greedy_trace_on_line():
    H = build_hierarchy(line([0, 1, 3]), greedy_order=[0, 1, 2])
    assert H.L == 2
    assert sorted(H.nets[1].tolist()) == [0, 2]  # positions 0 and 3
    assert H.nets[2].tolist() == [0]


def test_single_point_hierarchy():
    M = from_coords([[1.0, 1.0]])
    H = build_hierarchy(M)
    assert H.L == 0
    T = build_decomposition_tree(H, seed=4)
    assert parent_at(T, 0, 0) == 0
    assert T.anc.shape == (1, 1)


def test_top_level_brackets_diameter():
    assert top_level_for(3.0) == 2
    assert top_level_for(4.0) == 3
    assert top_level_for(1.0) == 1
    assert top_level_for(0.0) == 0


def test_bad_greedy_order():
    with pytest.raises(ValidationError):
        build_hierarchy(line([0, 1, 3]), greedy_order=[0, 0, 1])


def test_simple_tree_parents():
    T = build_simple_tree(build_hierarchy(line([0, 1, 3])))
    assert parent_at(T, 1, 1) == 0
    assert parent_at(T, 2, 1) == 2
    for x in range(3):
        assert parent_at(T, x, T.L) == 0
        assert parent_at(T, x, 0) == x
        assert parent_at(T, x, -5) == x
    with pytest.raises(ValidationError):
        parent_at(T, 0, T.L + 1)


def test_simple_tree_ties_pick_smallest_id():
    # point 1 sits midway between net points 0 and 2 at level 1
    M = line([0, 2, 4])
    T = build_simple_tree(build_hierarchy(M, greedy_order=[0, 2, 1]))
    assert parent_at(T, 1, 1) == 0


def test_simple_tree_is_one_covering_on_random_instances():
    for s in range(100):
        rng = derive_rng(s, "nets")
        M = from_coords(rng.random((int(rng.integers(2, 40)), int(rng.integers(1, 4)))) * 50)
        H = build_hierarchy(M, seed=s)
        check_hierarchy(H)
        check_tree(build_simple_tree(H))


def test_decomposition_determinism_and_covering():
    M = random_euclidean(60, 2, seed=1)
    H = build_hierarchy(M)
    a = build_decomposition_tree(H, seed=9, chi=4)
    b = build_decomposition_tree(H, seed=9, chi=4)
    assert np.array_equal(a.anc, b.anc)
    assert a.to_json() == b.to_json()
    for s in range(30):
        check_tree(build_decomposition_tree(H, seed=s, chi=4))


def test_chi_validation():
    H = build_hierarchy(line([0, 1, 3]))
    with pytest.raises(ValidationError):
        build_decomposition_tree(H, seed=0, chi=1.5)


def test_default_chi():
    assert default_chi(0.3) == 2.0
    assert default_chi(2.2) == 8.0


def test_radii_in_range():
    r = sample_radii(np.random.default_rng(0), 10_000, 3, 8.0)
    assert r.min() >= 8 and r.max() <= 16
    # the truncated exponential puts more mass near the lower end
    assert np.mean(r < 12) > 0.5


def test_json_layout():
    T = build_simple_tree(build_hierarchy(line([0, 1, 3])))
    doc = json.loads(T.to_json())
    assert doc["levels"] == [[0, 1, 2], [0, 2], [0]]
    assert [0, 1, 0] in doc["parent"]
    assert doc["flavor"] == "simple" and doc["c_cover"] == 1


def test_fan_out_is_reported():
    T = build_decomposition_tree(build_hierarchy(random_euclidean(40, 2, seed=2)), seed=1, chi=4)
    assert 1 <= T.fan_out() <= 40


def test_packing_count():
    for inst in standard_corpus():
        M = inst.metric
        H = build_hierarchy(M)
        t = estimate_doubling_dim(M)
        for i in range(1, H.L + 1):
            net = H.nets[i]
            for R in 2.0 ** np.arange(i, H.L + 2):
                count = (M.dist[:, net] <= R).sum(axis=1).max()
                assert count <= (4 * R / 2**i) ** t, (inst.name, i, R)


def test_cut_probability_decays():
    M = log_scale_euclidean(100, 2, seed=3)
    H = build_hierarchy(M)
    t = estimate_doubling_dim(M)
    P = np.argsort(M.dist[0])[:3]
    diam = M.dist[np.ix_(P, P)].max()
    trials = 500
    cut = np.zeros(H.L + 1)
    for s in range(trials):
        T = build_decomposition_tree(H, seed=s, chi=default_chi(t))
        cut += [len(set(T.anc[i][P].tolist())) > 1 for i in range(H.L + 1)]
    frac = cut / trials
    assert (np.diff(frac) <= 0).all()
    ratios = [frac[i] * 2.0**i / (t * diam) for i in range(H.L + 1) if 0 < frac[i] < 1]
    K = float(np.median(ratios))
    print(f"fitted cut constant K={K:.3f}")
    bound = 4 * K * 2.0 ** -np.arange(H.L + 1) * t * diam
    assert (frac <= bound).all()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 300), st.integers(0, 300)), min_size=1, max_size=40),
       st.integers(0, 2**31))
def test_trees_hold_invariants(points, seed):
    M = from_coords(np.array(points, dtype=float))
    H = build_hierarchy(M, seed=seed)
    check_hierarchy(H)
    check_tree(build_simple_tree(H))
    check_tree(build_decomposition_tree(H, seed=seed, chi=default_chi(estimate_doubling_dim(M))))
