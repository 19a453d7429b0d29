import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cospeech.metrics import (
    metric_direction_diff,
    metric_path,
    metric_position_error,
    metric_rotation_diff,
    metric_selection,
    metric_size_pct,
    summarize,
)
from oracles import quat_angle_deg


def test_position_error():
    assert metric_position_error((0, 0, 0), (0.03, 0.04, 0)) == pytest.approx(0.05)


def test_identical_rotation_is_zero():
    r = Rotation.from_euler("xyz", [10, 20, 30], degrees=True)
    assert metric_rotation_diff(r, r) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rotation_diff_is_symmetric_and_measures_the_delta(seed):
    rng = np.random.default_rng(seed)
    r = Rotation.from_quat(rng.standard_normal(4))
    delta = Rotation.from_rotvec(rng.normal(size=3))
    angle = math.degrees(delta.magnitude())
    assert metric_rotation_diff(r, r * delta) == pytest.approx(angle, abs=1e-6)
    assert metric_rotation_diff(r * delta, r) == pytest.approx(angle, abs=1e-6)
    other = Rotation.from_quat(rng.standard_normal(4))
    assert metric_rotation_diff(r, other) == pytest.approx(
        quat_angle_deg(r.as_quat(), other.as_quat()), abs=1e-6)


def test_direction_diff_degrees():
    assert metric_direction_diff((1, 0, 0), (0, 2, 0)) == pytest.approx(90.0)


def test_size_ten_vs_twenty_cm():
    assert metric_size_pct(0.10, 0.20) == pytest.approx(50.0)
    assert metric_size_pct(0.20, 0.20) == 0.0


def test_size_zero_target_is_undefined():
    assert metric_size_pct(0.1, 0.0) is None


def test_selection_exact():
    nine = [f"red {i}" for i in range(9)]
    assert metric_selection(nine, nine) == (100.0, 100.0)


def test_selection_partial_and_undefined():
    assert metric_selection(["a", "b", "x", "y"], ["a", "b"]) == (50.0, 100.0)
    assert metric_selection([], ["a"]) == (None, 0.0)
    assert metric_selection(["a"], []) == (0.0, None)


def test_path_metric_identical():
    p = np.column_stack([np.linspace(0, 1, 5), np.zeros(5), np.zeros(5)])
    assert metric_path(p, p) == 100.0


def test_summarize_skips_undefined():
    mean, sd = summarize([1.0, None, 3.0, float("nan")])
    assert mean == 2.0
    assert sd == pytest.approx(math.sqrt(2))
    assert summarize([None]) is None
    assert summarize([4.0]) == (4.0, 0.0)
