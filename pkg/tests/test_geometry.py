import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coulomb_kernel.geometry import (
    ConeDirection,
    GeometryError,
    LobachevskyPoint,
    boost,
    boost_to_rest,
    hyperbolic_angle,
    is_proper_lorentz,
    minkowski_dot,
    pairwise_angles,
    points_from_rng,
    random_lorentz,
    rotation,
    sample_points,
)

COSH2 = 3.7621956910836314  # mpmath, 50 digits


def test_minkowski_dot_examples():
    e0 = np.array([1.0, 0, 0, 0])
    assert minkowski_dot(e0, e0) == 1.0
    assert minkowski_dot([1.0, 0, 0, 1], [1.0, 0, 0, 1]) == 0.0
    assert minkowski_dot(e0, [math.cosh(2), math.sinh(2), 0, 0]) == pytest.approx(COSH2, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=12, max_size=12), st.floats(-3, 3))
def test_minkowski_dot_symmetric_bilinear(xs, c):
    a, b, d = np.array(xs[:4]), np.array(xs[4:8]), np.array(xs[8:])
    assert minkowski_dot(a, b) == minkowski_dot(b, a)
    lhs = minkowski_dot(a, c * b + d)
    rhs = c * minkowski_dot(a, b) + minkowski_dot(a, d)
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(lhs)) + 1e-9 * 400)


def test_point_validation():
    LobachevskyPoint([1.0, 0, 0, 0])
    with pytest.raises(GeometryError):
        LobachevskyPoint([1.0, 0.1, 0, 0])
    with pytest.raises(GeometryError):
        LobachevskyPoint([-1.0, 0, 0, 0])
    with pytest.raises(GeometryError):
        LobachevskyPoint([1.0, 0, 0])


def test_cone_direction_validation():
    p = ConeDirection.from_unit([0.0, 0.6, 0.8])
    assert p.vector[0] == 1.0
    assert abs(minkowski_dot(p, p)) <= 1e-12
    with pytest.raises(GeometryError):
        ConeDirection([2.0, 0, 0, 2.0])
    with pytest.raises(GeometryError):
        ConeDirection([1.0, 0, 0, 0.9])


def test_hyperbolic_angle_examples():
    u = LobachevskyPoint.origin()
    assert hyperbolic_angle(u, u) == 0.0
    v = LobachevskyPoint([math.cosh(2), math.sinh(2), 0, 0])
    assert hyperbolic_angle(u, v) == pytest.approx(2.0, abs=1e-14)


def test_hyperbolic_angle_rejects_off_shell():
    with pytest.raises(GeometryError):
        hyperbolic_angle([1.0, 0, 0, 0], [0.5, 0, 0, 0])


def test_hyperbolic_angle_near_coincident_is_accurate():
    # the difference form keeps relative accuracy where arccosh(u.v) loses it
    u = LobachevskyPoint.from_rapidity([0, 0, 1], 3.0)
    v = LobachevskyPoint(boost(1e-9, [1, 0, 0]) @ u.vector)
    lam = hyperbolic_angle(u, v)
    assert 0 < lam < 1e-7


def test_angle_invariant_under_random_boost():
    rng = np.random.default_rng(3)
    for _ in range(50):
        u, v = points_from_rng(rng, 2, 4.0)
        m = random_lorentz(rng, 2.0)
        assert is_proper_lorentz(m)
        a = hyperbolic_angle(u, v)
        b = hyperbolic_angle(m @ u.vector, m @ v.vector)
        assert abs(a - b) <= 1e-10 * max(1.0, a)


def test_cosh_of_angle_matches_dot():
    pts = sample_points(20, 6.0, seed=11)
    vecs = np.stack([p.vector for p in pts])
    lam = pairwise_angles(pts)
    dots = minkowski_dot(vecs[:, None, :], vecs[None, :, :])
    assert np.allclose(np.cosh(lam), dots, rtol=1e-10, atol=0)


@pytest.mark.parametrize("s", [0.1, 1.0, 2.5, 6.0])
def test_boost_rapidity(s):
    o = LobachevskyPoint.origin().vector
    for axis in ([1, 0, 0], [0, 1, 1], [-0.3, 0.2, 0.9]):
        u = boost(s, axis) @ o
        assert abs(hyperbolic_angle(o, u) - s) <= 1e-12 * max(1.0, s)


def test_boost_and_rotation_are_proper():
    assert is_proper_lorentz(boost(1.7, [1, 2, 3]))
    assert is_proper_lorentz(rotation(0.4, [0, 1, 0]))
    assert not is_proper_lorentz(np.diag([1.0, -1.0, 1.0, 1.0]))
    assert not is_proper_lorentz(np.diag([-1.0, 1.0, 1.0, 1.0]))


def test_lorentz_map_preserves_form():
    rng = np.random.default_rng(5)
    m = random_lorentz(rng, 2.0)
    for _ in range(20):
        a, b = rng.standard_normal(4), rng.standard_normal(4)
        assert abs(minkowski_dot(m @ a, m @ b) - minkowski_dot(a, b)) <= 1e-10 * max(1, np.abs(m).max() ** 2)


def test_boost_to_rest():
    u = LobachevskyPoint.from_rapidity([1, -1, 2], 2.2)
    assert np.allclose(boost_to_rest(u) @ u.vector, [1, 0, 0, 0], atol=1e-12)


def test_sample_points_deterministic():
    a = sample_points(10, 3.0, seed=42)
    b = sample_points(10, 3.0, seed=42)
    assert all(np.array_equal(p.vector, q.vector) for p, q in zip(a, b))
    c = sample_points(10, 3.0, seed=43)
    assert not all(np.array_equal(p.vector, q.vector) for p, q in zip(a, c))


def test_sample_points_degenerate_radius():
    (p,) = sample_points(1, 1e-12, seed=0)
    assert np.allclose(p.vector, [1, 0, 0, 0], atol=1e-11)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.floats(0.01, 6.0), st.integers(0, 2**32 - 1))
def test_sample_points_contract(n, lam_max, seed):
    pts = sample_points(n, lam_max, seed)
    assert len(pts) == n
    vecs = np.stack([p.vector for p in pts])
    assert np.all(np.abs(minkowski_dot(vecs, vecs) - 1.0) <= 1e-12 * vecs[:, 0] ** 2)
    o = LobachevskyPoint.origin()
    assert all(hyperbolic_angle(o, p) <= lam_max + 1e-9 for p in pts)
    assert pairwise_angles(pts).max() <= 2 * lam_max + 1e-9


def test_sample_points_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_points(0, 1.0, 0)
    with pytest.raises(ValueError):
        sample_points(3, 0.0, 0)


def test_points_around_center():
    rng = np.random.default_rng(1)
    c = LobachevskyPoint.from_rapidity([0, 1, 0], 3.0)
    pts = points_from_rng(rng, 30, 1.0, center=c)
    assert all(hyperbolic_angle(c, p) <= 1.0 + 1e-9 for p in pts)
