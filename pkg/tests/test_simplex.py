import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import project_by_active_set

import ctrlscore as cs
from ctrlscore.simplex import project_capped_simplex, central_point, SimplexWeights


def test_feasible_point_is_fixed():
    w = project_capped_simplex([0.5, 0.5], [1.0, 1.0])
    assert w.values.tolist() == [0.5, 0.5]


def test_cap_and_simplex_corner():
    w = project_capped_simplex([2.0, 0.0], [1.0, 1.0])
    assert w.values.tolist() == [1.0, 0.0]


def test_symmetric_point_loose_cap_matches_qp_oracle():
    point = np.array([0.9, 0.9, 0.9])
    caps = np.array([0.5, 1.0, 1.0])
    got = project_capped_simplex(point, caps).values
    want = project_by_active_set(point, caps)
    np.testing.assert_allclose(got, want, atol=1e-12)
    np.testing.assert_allclose(got, [1 / 3, 1 / 3, 1 / 3], atol=1e-12)


def test_binding_cap_matches_qp_oracle():
    point = np.array([0.9, 0.9, 0.9])
    caps = np.array([0.25, 1.0, 1.0])
    got = project_capped_simplex(point, caps).values
    want = project_by_active_set(point, caps)
    np.testing.assert_allclose(got, want, atol=1e-12)
    np.testing.assert_allclose(got, [0.25, 0.375, 0.375], atol=1e-12)


def test_empty_feasible_set_raises():
    with pytest.raises(cs.EmptyFeasibleSet):
        project_capped_simplex([0.5, 0.5], [0.3, 0.3])


def test_weight_validation():
    with pytest.raises(cs.InvalidWeights):
        SimplexWeights(np.array([0.6, 0.6]))
    with pytest.raises(cs.InvalidWeights):
        SimplexWeights(np.array([1.2, -0.2]))
    with pytest.raises(cs.InvalidWeights):
        SimplexWeights(np.array([0.7, 0.3]), np.array([0.5, 1.0]))


def test_central_point_with_tight_caps():
    w = central_point(np.array([0.2, 0.5, 0.9]))
    assert abs(w.values.sum() - 1.0) < 1e-12
    assert np.all(w.values <= np.array([0.2, 0.5, 0.9]) + 1e-12)


vectors = st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=4)


@settings(max_examples=200, deadline=None)
@given(vectors, st.lists(st.floats(0.05, 2.0), min_size=2, max_size=4),
       st.integers(0, 10**6))
def test_projection_properties(raw_point, raw_caps, salt):
    size = min(len(raw_point), len(raw_caps))
    point = np.asarray(raw_point[:size])
    caps = np.asarray(raw_caps[:size])
    if caps.sum() < 1.0:
        caps = caps + (1.0 - caps.sum() + 0.1) / size
    projected = project_capped_simplex(point, caps)
    # lands in the feasible set
    assert abs(projected.values.sum() - 1.0) <= 1e-12
    assert np.all(projected.values >= 0.0)
    assert np.all(projected.values <= caps)
    # idempotent
    again = project_capped_simplex(projected.values, caps)
    np.testing.assert_allclose(again.values, projected.values, atol=1e-12)
    # agrees with the brute-force QP oracle
    oracle = project_by_active_set(point, caps)
    np.testing.assert_allclose(projected.values, oracle, atol=1e-9)
