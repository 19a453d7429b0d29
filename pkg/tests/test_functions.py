import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cospeech.errors import InvalidParameter, NotManipulatable, UnknownFunction, UnknownObject
from cospeech.functions import (
    DEFAULT_CATALOG,
    FunctionCall,
    FunctionSignature,
    ParamKind,
    color_name,
    color_rgb,
    execute_call,
    general_error_message,
    run_call,
    step_paths,
)
from cospeech.geometry import FORWARD, geodesic_angle, vector_angle
from cospeech.scene import Scene, SceneObject, serialize_scene

GENERAL = ("Sorry, the system is unable to do that, the system is able to do select, move, "
           "rotate_dir, rotate, resize, move_path, draw_path, set_color.")


def _cube_scene():
    return Scene([SceneObject("cube", (0, 0, 0), scale=(0.1, 0.1, 0.1), color=(1, 1, 1)),
                  SceneObject("other", (1, 1, 1), Rotation.from_euler("x", 10, degrees=True),
                              (0.2, 0.3, 0.4), color=(0, 0, 1)),
                  SceneObject("wall", (0, 0, 3), scale=(4, 4, 0.1), manipulatable=False)])


def _pile():
    colors = [("red", (1, 0, 0))] * 9 + [("green", (0, 0.5, 0))] * 8 + [("blue", (0, 0, 1))] * 8
    return Scene([SceneObject(f"{c} cube {i}", (0.05 * i, 0.7, 0.8), scale=(0.04,) * 3, color=rgb)
                  for i, (c, rgb) in enumerate(colors)])


def _unchanged_except(before, after, names):
    for obj in before:
        if obj.name not in names:
            assert after[obj.name] == obj


def test_catalog_has_the_eight_functions():
    assert DEFAULT_CATALOG.names == ["select", "move", "rotate_dir", "rotate", "resize",
                                     "move_path", "draw_path", "set_color"]
    assert DEFAULT_CATALOG["select"].params == (("objects", ParamKind.OBJECT_LIST),
                                                ("color", ParamKind.COLOR))


def test_general_message_is_exact():
    assert general_error_message() == GENERAL


def test_unknown_function_carries_the_general_message():
    with pytest.raises(UnknownFunction) as exc:
        execute_call(_cube_scene(), FunctionCall("teleport", {}))
    assert str(exc.value) == GENERAL


def test_extended_catalog_lists_the_new_function():
    cat = DEFAULT_CATALOG.with_function(FunctionSignature("spin", (("object", ParamKind.OBJECT),)))
    assert general_error_message(cat).endswith("set_color, spin.")
    with pytest.raises(ValueError):
        cat.with_function(FunctionSignature("spin", ()))


def test_move():
    before = _cube_scene()
    after = execute_call(before, FunctionCall("move", {"object": "cube", "position": (1, 0, 1)}))
    np.testing.assert_array_equal(after["cube"].position, [1, 0, 1])
    np.testing.assert_array_equal(before["cube"].position, [0, 0, 0])
    _unchanged_except(before, after, {"cube"})


def test_resize_uniform():
    after = execute_call(_cube_scene(), FunctionCall("resize", {"object": "cube", "size": 0.2}))
    np.testing.assert_allclose(after["cube"].scale, [0.2, 0.2, 0.2])


def test_resize_keeps_ratios():
    after = execute_call(_cube_scene(), FunctionCall("resize", {"object": "other", "size": 1.0}))
    np.testing.assert_allclose(after["other"].scale, np.array([0.2, 0.3, 0.4]) / 0.4, atol=1e-9)


def test_select_nine_red_of_twenty_five():
    pile = _pile()
    after, sel = run_call(pile, FunctionCall("select", {"objects": pile.names, "color": "red"}))
    assert sel == [f"red cube {i}" for i in range(9)]
    assert serialize_scene(after) == serialize_scene(pile)


def test_select_matches_by_nearest_named_color():
    scene = Scene([SceneObject("a", (0, 0, 0), color=(0.9, 0.1, 0.05)),
                   SceneObject("b", (1, 0, 0), color=(0.1, 0.1, 0.9)),
                   SceneObject("c", (2, 0, 0))])
    _, sel = run_call(scene, FunctionCall("select", {"objects": ["a", "b", "c"], "color": "red"}))
    assert sel == ["a"]


def test_rotate_twice_is_half_turn():
    quarter = Rotation.from_euler("y", 90, degrees=True)
    s = _cube_scene()
    for _ in range(2):
        s = execute_call(s, FunctionCall("rotate", {"object": "cube", "rotation": quarter}))
    assert geodesic_angle(s["cube"].rotation, Rotation.from_euler("y", 180, degrees=True)) < 1e-12


def test_rotate_is_a_world_frame_delta():
    s = _cube_scene()
    delta = Rotation.from_euler("z", 30, degrees=True)
    after = execute_call(s, FunctionCall("rotate", {"object": "other", "rotation": delta}))
    assert geodesic_angle(after["other"].rotation, delta * s["other"].rotation) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-2))
def test_rotate_dir_points_forward_along_direction(direction):
    s = _cube_scene()
    after = execute_call(s, FunctionCall("rotate_dir", {"object": "other", "direction": direction}))
    assert vector_angle(after["other"].rotation.apply(FORWARD), direction) < 1e-6


def test_set_color():
    after = execute_call(_cube_scene(), FunctionCall("set_color", {"object": "cube", "color": "red"}))
    assert after["cube"].color == (1.0, 0.0, 0.0)


def test_non_manipulatable_target():
    with pytest.raises(NotManipulatable):
        execute_call(_cube_scene(), FunctionCall("move", {"object": "wall", "position": (0, 0, 0)}))


def test_unknown_object():
    with pytest.raises(UnknownObject):
        execute_call(_cube_scene(), FunctionCall("move", {"object": "sphere", "position": (0, 0, 0)}))


@pytest.mark.parametrize("call", [
    FunctionCall("move", {"object": "cube"}),
    FunctionCall("resize", {"object": "cube", "size": -1}),
    FunctionCall("rotate", {"object": "cube", "rotation": (0, 0, 0)}),
    FunctionCall("rotate_dir", {"object": "cube", "direction": (0, 0, 0)}),
    FunctionCall("draw_path", {"path": [[0, 0, 0], [1, 0, 0]], "shape_type": "spiral"}),
    FunctionCall("move_path", {"object": "cube", "path": [[0, 0, 0]]}),
    FunctionCall("set_color", {"object": "cube", "color": "octarine"}),
])
def test_invalid_parameters(call):
    with pytest.raises(InvalidParameter):
        execute_call(_cube_scene(), call)


def test_colors():
    assert color_rgb("Grey") == (0.5, 0.5, 0.5)
    assert color_name((0.95, 0.02, 0.0)) == "red"
    with pytest.raises(InvalidParameter):
        color_rgb((2, 0, 0))


def test_draw_path_adds_a_fitted_line():
    pts = [[0, 1, 1], [0.1, 1.001, 1], [0.2, 0.999, 1], [0.3, 1, 1]]
    before = _cube_scene()
    after = execute_call(before, FunctionCall("draw_path", {"path": pts, "shape_type": "line"}))
    assert after.names == before.names + ["line_1"]
    assert after["line_1"].shape["length"] == pytest.approx(0.3, abs=1e-3)
    again = execute_call(after, FunctionCall("draw_path", {"path": pts, "shape_type": "line"}))
    assert again.names[-1] == "line_2"


# ---------------------------------------------------------------- move_path / step_paths


def _on_path(speed):
    path = [[0, 0, 0], [0.5, 0, 0], [1, 0, 0]]
    scene, _ = run_call(_cube_scene(), FunctionCall("move_path", {"object": "cube", "path": path}),
                        path_speed=speed)
    return scene


def test_one_metre_path_half_speed():
    s = _on_path(0.5)
    np.testing.assert_allclose(step_paths(s, 2.0)["cube"].position, [1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(step_paths(s, 4.0)["cube"].position, [0, 0, 0], atol=1e-12)


def test_round_trip_returns_to_start():
    s = _on_path(1.0)
    np.testing.assert_allclose(step_paths(s, 2.0)["cube"].position, [0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(step_paths(s, 1.0)["cube"].position, [1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(step_paths(s, 1.25)["cube"].position, [0.75, 0, 0], atol=1e-12)


def test_stepping_is_cumulative():
    s = _on_path(1.0)
    for _ in range(5):
        s = step_paths(s, 0.3)
    np.testing.assert_allclose(s["cube"].position, [0.5, 0, 0], atol=1e-12)


def test_objects_without_paths_stay():
    s = _on_path(0.5)
    after = step_paths(s, 0.7)
    assert after["other"] == s["other"]
    with pytest.raises(ValueError):
        step_paths(s, 0)


def test_execution_is_deterministic():
    calls = [FunctionCall("move", {"object": "cube", "position": (0.3, 0.2, 0.1)}),
             FunctionCall("rotate", {"object": "other", "rotation": Rotation.from_rotvec([0, 1, 0])}),
             FunctionCall("resize", {"object": "cube", "size": 0.5})]
    outs = []
    for _ in range(2):
        s = _cube_scene()
        for c in calls:
            s = execute_call(s, c)
        outs.append(serialize_scene(s))
    assert outs[0] == outs[1]
