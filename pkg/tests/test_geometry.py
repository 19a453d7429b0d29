import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cospeech.geometry import (
    FORWARD,
    euler_to_rotation,
    geodesic_angle,
    minimal_arc,
    normalize,
    plane_basis,
    quat_xyzw,
    rotation_angle,
    rotation_to_euler,
    vector_angle,
)
from oracles import quat_angle_deg

unit = st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3)


def test_yaw_turns_forward_towards_plus_x():
    np.testing.assert_allclose(euler_to_rotation([0, 90, 0]).apply(FORWARD), [1, 0, 0], atol=1e-15)


def test_pitch_turns_forward_down():
    np.testing.assert_allclose(euler_to_rotation([90, 0, 0]).apply(FORWARD), [0, -1, 0], atol=1e-15)


def test_euler_composition_order_is_yaw_pitch_roll():
    x, y, z = 20.0, 30.0, 40.0
    expected = (Rotation.from_euler("y", y, degrees=True) * Rotation.from_euler("x", x, degrees=True)
                * Rotation.from_euler("z", z, degrees=True))
    assert geodesic_angle(euler_to_rotation([x, y, z]), expected) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(-80, 80), st.floats(-179, 179), st.floats(-179, 179))
def test_euler_round_trip(x, y, z):
    back = rotation_to_euler(euler_to_rotation([x, y, z]))
    np.testing.assert_allclose(back, [x, y, z], atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(unit, unit)
def test_minimal_arc_maps_a_onto_b_by_the_angle_between_them(a, b):
    r = minimal_arc(a, b)
    np.testing.assert_allclose(r.apply(normalize(a)), normalize(b), atol=1e-9)
    assert rotation_angle(r) == pytest.approx(vector_angle(a, b), abs=1e-9)


def test_minimal_arc_antiparallel_is_a_half_turn():
    r = minimal_arc([0, 0, 1], [0, 0, -1])
    np.testing.assert_allclose(r.apply([0, 0, 1]), [0, 0, -1], atol=1e-15)
    assert rotation_angle(r) == pytest.approx(math.pi)


def test_minimal_arc_rejects_zero_vectors():
    with pytest.raises(ValueError):
        minimal_arc([0, 0, 0], [1, 0, 0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_geodesic_angle_matches_the_quaternion_inner_product_form(seed):
    rng = np.random.default_rng(seed)
    r1, r2 = (Rotation.from_quat(rng.standard_normal(4)) for _ in range(2))
    assert math.degrees(geodesic_angle(r1, r2)) == pytest.approx(
        quat_angle_deg(r1.as_quat(), r2.as_quat()), abs=1e-6)
    assert geodesic_angle(r1, r2) == pytest.approx(geodesic_angle(r2, r1), abs=1e-12)


def test_geodesic_angle_keeps_precision_for_tiny_rotations():
    r = Rotation.from_rotvec([1e-10, 0, 0])
    assert geodesic_angle(Rotation.identity(), r) == pytest.approx(1e-10, rel=1e-6)


def test_vector_angle_is_exact_near_zero_and_pi():
    assert vector_angle([1, 0, 0], [1, 1e-12, 0]) == pytest.approx(1e-12, rel=1e-6)
    assert vector_angle([1, 0, 0], [-1, 1e-12, 0]) == pytest.approx(math.pi - 1e-12, abs=1e-15)


@pytest.mark.parametrize("n", [[0, 0, 1], [1, 0, 0], [0.3, -0.4, 0.5]])
def test_plane_basis_is_orthonormal(n):
    e1, e2 = plane_basis(n)
    basis = np.array([e1, e2, normalize(n)])
    np.testing.assert_allclose(basis @ basis.T, np.eye(3), atol=1e-12)


def test_normalize_returns_none_for_zero():
    assert normalize([0, 0, 0]) is None


def test_quat_xyzw_validates():
    with pytest.raises(ValueError):
        quat_xyzw([0, 0, 0, 0])
    with pytest.raises(ValueError):
        quat_xyzw([0, 0, 1])
    assert rotation_angle(quat_xyzw([0, 0, 0, 2])) == 0.0
