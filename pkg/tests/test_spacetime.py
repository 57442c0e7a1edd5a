import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relbohm.spacetime import (
    METRIC,
    FourVector,
    LorentzBoost,
    SpacetimeBox,
    apply_boost,
    as_configuration,
    boost_box,
    contains,
    minkowski_dot,
)

finite = st.floats(-5, 5, allow_nan=False)
four = st.tuples(finite, finite, finite, finite).map(np.array)


@st.composite
def boosts(draw, max_speed=0.95):
    direction = np.array(draw(st.tuples(finite, finite, finite)))
    norm = np.linalg.norm(direction)
    speed = draw(st.floats(0, max_speed))
    beta = speed * direction / norm if norm > 1e-6 else np.zeros(3)
    return LorentzBoost(tuple(beta))


@pytest.mark.parametrize("a, expected", [
    ((1, 0, 0, 0), 1.0),
    ((1, 1, 0, 0), 0.0),
    ((np.sqrt(2), 1, 0, 0), 1.0),
])
def test_minkowski_dot_examples(a, expected):
    assert minkowski_dot(a, a) == pytest.approx(expected, abs=1e-15)


def test_minkowski_dot_broadcasts():
    v = np.array([[1.0, 0, 0, 0], [2.0, 1, 1, 1]])
    np.testing.assert_allclose(minkowski_dot(v, v), [1.0, 1.0])


def test_fourvector_rejects_nan():
    with pytest.raises(ValueError):
        FourVector(0.0, float("nan"), 0.0, 0.0)
    assert np.asarray(FourVector(1, 2, 3, 4)).tolist() == [1, 2, 3, 4]


def test_identity_boost():
    np.testing.assert_array_equal(apply_boost(LorentzBoost(), [1, 2, 3, 4]), [1, 2, 3, 4])


def test_boost_rest_momentum_by_hand():
    # gamma = 1/sqrt(1 - 0.36) = 1.25; active convention: p^1 = -gamma beta m
    out = apply_boost(LorentzBoost((0.6, 0, 0)), [1, 0, 0, 0])
    np.testing.assert_allclose(out, [1.25, -0.75, 0, 0], atol=1e-15)
    assert LorentzBoost((0.6, 0, 0)).gamma == pytest.approx(1.25)


@pytest.mark.parametrize("beta", [(1.0, 0, 0), (0.8, 0.6, 0.0), (0.0, 0.0, -1.2)])
def test_superluminal_boost_rejected(beta):
    with pytest.raises(ValueError):
        LorentzBoost(beta)


@given(boosts())
def test_boost_matrix_preserves_metric(b):
    L = b.matrix
    np.testing.assert_allclose(L.T @ METRIC @ L, METRIC, atol=1e-12)


@given(boosts(), st.floats(-5, 5))
def test_null_vector_stays_null(b, scale):
    v = scale * np.array([1.0, 1.0, 0.0, 0.0])
    w = apply_boost(b, v)
    assert abs(minkowski_dot(w, w)) <= 1e-12 * (1 + scale * scale)


@given(boosts(), four)
def test_interval_invariant(b, v):
    w = apply_boost(b, v)
    assert abs(minkowski_dot(w, w) - minkowski_dot(v, v)) <= 1e-12 * (1 + abs(minkowski_dot(v, v)))


@given(boosts(), four)
def test_inverse_boost_roundtrip(b, v):
    np.testing.assert_allclose(apply_boost(b.inverse(), apply_boost(b, v)), v, atol=1e-12)
    np.testing.assert_allclose(b.inverse().matrix @ b.matrix, np.eye(4), atol=1e-12)


def test_box_contains_closed():
    box = SpacetimeBox((0, 0, 0, 0), (1, 1, 1, 1))
    assert contains(box, (0.5, 0.5, 0.5, 0.5))
    assert not contains(box, (2, 0, 0, 0))
    assert contains(box, (1, 1, 1, 1))
    assert contains(box, (0, 0, 0, 0))
    np.testing.assert_array_equal(contains(box, [[0.5] * 4, [2, 0, 0, 0]]), [True, False])


def test_box_validation_and_volume():
    with pytest.raises(ValueError):
        SpacetimeBox((0, 0, 0, 0), (1, 0, 1, 1))
    assert SpacetimeBox((0, 0, 0, 0), (2, 3, 1, 0.5)).volume == pytest.approx(3.0)


def test_boosted_box_is_bounding_box():
    box = SpacetimeBox((0, 0, 0, 0), (1, 1, 1, 1))
    b = LorentzBoost((0.6, 0, 0))
    bb = boost_box(box, b)
    corners = apply_boost(b, box.corners())
    assert np.all(contains(bb, corners))
    np.testing.assert_allclose(bb.lo, corners.min(axis=0))


def test_configuration_shape_checked():
    assert as_configuration([(0, 0, 0, 0), (1, 1, 1, 1)], n=2).shape == (2, 4)
    with pytest.raises(ValueError):
        as_configuration([(0, 0, 0, 0)], n=2)
