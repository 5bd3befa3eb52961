from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from psmoa.entropy_topsis import (WeightVector, adjust_weights, das_dennis, divisions_for, entropy_weights,
                                  generate_reference_points, topsis_score)

from oracles import entropy_oracle, topsis_oracle


def test_identical_rows_give_uniform_weights():
    w = entropy_weights(np.full((5, 4), 3.0))
    assert np.allclose(w.weights, 0.25)


def test_concentrated_column_gets_more_weight():
    w = entropy_weights([[1, 1], [1, 0], [1, 0]])
    assert w.weights[1] > w.weights[0]


def test_three_by_two_oracle():
    m = [[1, 9], [1, 1], [1, 0]]
    w = entropy_weights(m)
    assert np.allclose(w.weights, entropy_oracle(m), rtol=1e-12, atol=0)
    # column 0 is uniform, so all the weight sits on column 1
    assert w.weights[0] == pytest.approx(0.0, abs=1e-15)


def test_entropy_input_validation():
    with pytest.raises(ValueError):
        entropy_weights([[1.0, 2.0]])
    with pytest.raises(ValueError):
        entropy_weights([[1.0, -2.0], [1.0, 1.0]])
    with pytest.raises(ValueError, match="no positive"):
        entropy_weights([[1.0, 0.0], [1.0, 0.0]])


def test_weight_vector_validates_sum():
    with pytest.raises(ValueError):
        WeightVector(np.array([0.5, 0.6]))


def test_alpha_one_leaves_weights_unchanged():
    w = entropy_weights(np.random.default_rng(0).uniform(0.1, 5, (10, 4)))
    out = adjust_weights(w, np.ones(4))
    assert np.array_equal(out.weights, w.weights)
    assert out.kind == "policy_adjusted"


def test_single_objective_collapse():
    w = WeightVector(np.array([0.1, 0.2, 0.3, 0.4]))
    assert np.array_equal(adjust_weights(w, [1, 0, 0, 0]).weights, [1, 0, 0, 0])


def test_uniform_weights_return_normalized_alpha():
    w = WeightVector(np.full(4, 0.25))
    out = adjust_weights(w, [0.4, 0.2, 0.3, 0.1])
    assert np.allclose(out.weights, [0.4, 0.2, 0.3, 0.1], atol=1e-15)


def test_adjust_rejects_bad_alpha():
    w = WeightVector(np.full(4, 0.25))
    with pytest.raises(ValueError):
        adjust_weights(w, [1, 1, 1])
    with pytest.raises(ValueError):
        adjust_weights(w, [0, 0, 0, 0])


def test_topsis_degenerate_single_solution():
    s = topsis_score([[1.0, 2.0]], np.array([0.5, 0.5]))
    assert s.closeness[0] == 0.5


def test_topsis_dominating_pair():
    s = topsis_score([[1.0, 1.0], [2.0, 3.0]], np.array([0.5, 0.5]))
    assert list(s.closeness) == [1.0, 0.0]
    assert s.best() == 0


def test_topsis_three_by_two_hand():
    z = [[0.0, 1.0], [1.0, 0.0], [0.25, 0.25]]
    s = topsis_score(z, np.array([0.5, 0.5]))
    # (0.25, 0.25): D+ = sqrt(0.5*0.0625*2) = 0.25, D- = sqrt(0.5*0.5625*2) = 0.75
    assert s.d_plus[2] == pytest.approx(0.25)
    assert s.d_minus[2] == pytest.approx(0.75)
    assert s.closeness[2] == pytest.approx(0.75)
    assert s.closeness[0] == pytest.approx(0.5) and s.closeness[1] == pytest.approx(0.5)


def test_topsis_max_sense():
    s = topsis_score([[1.0], [3.0]], np.array([1.0]), sense=["max"])
    assert list(s.closeness) == [0.0, 1.0]


def test_random_matrices_match_oracle():
    rng = np.random.default_rng(7)
    for _ in range(25):
        m = rng.uniform(0.01, 10.0, (10, 4))
        w = entropy_weights(m)
        assert np.allclose(w.weights, entropy_oracle(m.tolist()), rtol=1e-12, atol=1e-15)
        alpha = rng.uniform(0.05, 1.0, 4)
        adj = adjust_weights(w, alpha)
        ref = alpha * w.weights / (alpha * w.weights).sum()
        assert np.allclose(adj.weights, ref, rtol=1e-12, atol=0)
        s = topsis_score(m, adj)
        best, worst, dp, dm, c = topsis_oracle(m.tolist(), adj.weights.tolist())
        assert np.allclose(s.ideal, best, rtol=1e-12) and np.allclose(s.anti_ideal, worst, rtol=1e-12)
        assert np.allclose(s.d_plus, dp, rtol=1e-12) and np.allclose(s.d_minus, dm, rtol=1e-12)
        assert np.allclose(s.closeness, c, rtol=1e-12)


@settings(max_examples=80, deadline=None)
@given(arrays(float, (6, 4), elements=st.floats(0.01, 100.0)))
def test_entropy_weights_form_a_simplex_point(m):
    w = entropy_weights(m).weights
    assert np.all(w >= 0) and w.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(arrays(float, (5, 3), elements=st.floats(-50.0, 50.0)))
def test_closeness_in_unit_interval(z):
    c = topsis_score(z, np.full(3, 1 / 3)).closeness
    assert np.all((c >= 0) & (c <= 1))


# ----------------------------------------------------------------------------
# reference points


def test_lattice_size():
    pts = das_dennis(4, 6)
    assert len(pts) == comb(9, 3) == 84
    assert np.allclose(pts.sum(axis=1), 1.0)
    assert len({tuple(p) for p in pts}) == 84


def test_uniform_bias_is_identity():
    refs = generate_reference_points(WeightVector(np.full(4, 0.25)), 6)
    assert np.array_equal(refs.points, das_dennis(4, 6))


def test_vertex_bias_collapses():
    refs = generate_reference_points(WeightVector(np.array([1.0, 0, 0, 0])), 6)
    assert refs.points.tolist() == [[1.0, 0.0, 0.0, 0.0]]


def test_two_objective_bias_example():
    refs = generate_reference_points(WeightVector(np.array([0.75, 0.25])), 2)
    got = sorted(map(tuple, np.round(refs.points, 12)))
    assert got == sorted([(1.0, 0.0), (0.75, 0.25), (0.0, 1.0)])


def test_bias_pulls_points_toward_heavy_objective():
    w = WeightVector(np.array([0.4, 0.2, 0.3, 0.1]))
    refs = generate_reference_points(w, 6)
    lattice = das_dennis(4, 6)
    assert refs.points[:, 0].mean() > lattice[:, 0].mean()
    assert refs.points[:, 3].mean() < lattice[:, 3].mean()
    assert np.allclose(refs.points.sum(axis=1), 1.0)


def test_divisions_from_closeness_count():
    w = WeightVector(np.full(4, 0.25))
    refs = generate_reference_points(w, closeness=np.zeros(100))
    assert refs.divisions == divisions_for(4, 100) == 7
    assert len(refs) >= 100
