"""Function catalog and the executor that moves the scene between states."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import InvalidParameter, NotManipulatable, UnknownFunction
from .fitting import SHAPE_TYPES, fit_shape
from .geometry import FORWARD, minimal_arc, normalize
from .scene import PathState, Scene, SceneObject

DEFAULT_PATH_SPEED = 0.5  # m/s

# CSS basic color keywords
COLORS = {
    "black": (0.0, 0.0, 0.0),
    "silver": (0.75, 0.75, 0.75),
    "gray": (0.5, 0.5, 0.5),
    "white": (1.0, 1.0, 1.0),
    "maroon": (0.5, 0.0, 0.0),
    "red": (1.0, 0.0, 0.0),
    "purple": (0.5, 0.0, 0.5),
    "fuchsia": (1.0, 0.0, 1.0),
    "green": (0.0, 0.5, 0.0),
    "lime": (0.0, 1.0, 0.0),
    "olive": (0.5, 0.5, 0.0),
    "yellow": (1.0, 1.0, 0.0),
    "navy": (0.0, 0.0, 0.5),
    "blue": (0.0, 0.0, 1.0),
    "teal": (0.0, 0.5, 0.5),
    "aqua": (0.0, 1.0, 1.0),
}
COLOR_ALIASES = {"grey": "gray", "magenta": "fuchsia", "cyan": "aqua"}


def color_rgb(color) -> tuple[float, float, float]:
    if isinstance(color, str):
        key = COLOR_ALIASES.get(color.casefold(), color.casefold())
        if key not in COLORS:
            raise InvalidParameter(f"unknown color {color!r}")
        return COLORS[key]
    rgb = tuple(float(c) for c in color)
    if len(rgb) != 3 or any(not 0.0 <= c <= 1.0 for c in rgb):
        raise InvalidParameter(f"color must be a name or an RGB triple in [0, 1], got {color!r}")
    return rgb


def color_name(rgb) -> str:
    """Nearest basic color keyword."""
    rgb = np.asarray(rgb, dtype=float)
    return min(COLORS, key=lambda k: float(np.sum((np.asarray(COLORS[k]) - rgb) ** 2)))


class ParamKind(enum.Enum):
    POSITION = "Position"
    OBJECT = "Object"
    OBJECT_LIST = "ObjectList"
    DIRECTION = "Direction"
    ROTATION = "RotationDelta"
    SIZE = "Size"
    PATH = "Path"
    COLOR = "Color"
    SHAPE_TYPE = "ShapeType"

    @classmethod
    def parse(cls, text) -> ParamKind:
        for kind in cls:
            if kind.value.casefold() == str(text).casefold() or kind.name.casefold() == str(text).casefold():
                return kind
        raise ValueError(f"unknown parameter kind {text!r}")


@dataclass(frozen=True)
class FunctionSignature:
    name: str
    params: tuple[tuple[str, ParamKind], ...]
    description: str = ""

    @property
    def param_names(self) -> list[str]:
        return [p for p, _ in self.params]

    def kind_of(self, param: str) -> ParamKind:
        return dict(self.params)[param]

    def render(self) -> str:
        return f"{self.name}({', '.join(self.param_names)})"


class FunctionCatalog:
    def __init__(self, signatures):
        self.signatures = list(signatures)
        names = [s.name for s in self.signatures]
        if len(set(names)) != len(names):
            raise ValueError("function names must be unique")
        self._by_name = {s.name: s for s in self.signatures}

    def __contains__(self, name):
        return name in self._by_name

    def __getitem__(self, name) -> FunctionSignature:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownFunction(general_error_message(self)) from None

    def __iter__(self):
        return iter(self.signatures)

    def __len__(self):
        return len(self.signatures)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.signatures]

    def with_function(self, signature: FunctionSignature) -> FunctionCatalog:
        return FunctionCatalog([*self.signatures, signature])


K = ParamKind
DEFAULT_CATALOG = FunctionCatalog(
    [
        FunctionSignature("select", (("objects", K.OBJECT_LIST), ("color", K.COLOR)),
                          "selects objects of a certain color from a list of objects"),
        FunctionSignature("move", (("object", K.OBJECT), ("position", K.POSITION)),
                          "moves an object to a new location"),
        FunctionSignature("rotate_dir", (("object", K.OBJECT), ("direction", K.DIRECTION)),
                          "sets the forward direction of the object to the target direction"),
        FunctionSignature("rotate", (("object", K.OBJECT), ("rotation", K.ROTATION)),
                          "applies the rotation to the object"),
        FunctionSignature("resize", (("object", K.OBJECT), ("size", K.SIZE)),
                          "changes the size of the object to the target size"),
        FunctionSignature("move_path", (("object", K.OBJECT), ("path", K.PATH)),
                          "lets an object move along a trajectory back and forth"),
        FunctionSignature("draw_path", (("path", K.PATH), ("shape_type", K.SHAPE_TYPE)),
                          "sketches a predefined shape (line, circle or sine) given the path"),
        FunctionSignature("set_color", (("object", K.OBJECT), ("color", K.COLOR)),
                          "sets the color of an object to a given color"),
    ]
)
del K


def general_error_message(catalog: FunctionCatalog = DEFAULT_CATALOG) -> str:
    return (
        "Sorry, the system is unable to do that, the system is able to do "
        + ", ".join(catalog.names)
        + "."
    )


@dataclass(frozen=True)
class ResultRef:
    """Refers to the result set of an earlier ``select`` in the same plan."""

    call_index: int


@dataclass
class FunctionCall:
    function: str
    params: dict = field(default_factory=dict)


def _objects(scene: Scene, value) -> list[SceneObject]:
    names = [value] if isinstance(value, str) else list(value)
    if not names:
        raise InvalidParameter("empty object list")
    return [scene[n] for n in names]


def _targets(scene: Scene, value) -> list[SceneObject]:
    objs = _objects(scene, value)
    for obj in objs:
        if not obj.manipulatable:
            raise NotManipulatable(f"object {obj.name!r} cannot be manipulated")
    return objs


def _path_points(value) -> np.ndarray:
    points = getattr(value, "points", value)
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise InvalidParameter("path must be a sequence of 3-D points")
    return points


def _unique_name(scene: Scene, stem: str) -> str:
    i = 1
    while f"{stem}_{i}" in scene:
        i += 1
    return f"{stem}_{i}"


def run_call(scene: Scene, call: FunctionCall, catalog: FunctionCatalog = DEFAULT_CATALOG,
             path_speed: float = DEFAULT_PATH_SPEED):
    """Execute one call on a copy of ``scene``.

    Returns ``(new_scene, selection)`` where ``selection`` is the result set
    of a ``select`` call and None otherwise.
    """
    sig = catalog[call.function]
    missing = [p for p in sig.param_names if p not in call.params]
    if missing:
        raise InvalidParameter(f"{sig.render()}: unbound parameters {missing}")
    p = call.params
    out = scene.copy()
    selection = None
    name = call.function

    if name == "select":
        target = np.asarray(color_rgb(p["color"]))
        wanted = color_name(target)
        selection = [o.name for o in _objects(out, p["objects"])
                     if o.color is not None and color_name(o.color) == wanted]
    elif name == "move":
        objs = _targets(out, p["object"])
        position = np.asarray(p["position"], dtype=float)
        centroid = np.mean([o.position for o in objs], axis=0)
        for o in objs:
            o.position = o.position - centroid + position
    elif name == "rotate_dir":
        direction = normalize(np.asarray(p["direction"], dtype=float))
        if direction is None:
            raise InvalidParameter("direction must be non-zero")
        for o in _targets(out, p["object"]):
            o.rotation = minimal_arc(o.rotation.apply(FORWARD), direction) * o.rotation
    elif name == "rotate":
        delta = p["rotation"]
        if not isinstance(delta, Rotation):
            raise InvalidParameter("rotation must be a Rotation")
        for o in _targets(out, p["object"]):
            o.rotation = delta * o.rotation
    elif name == "resize":
        size = float(p["size"])
        if not size > 0:
            raise InvalidParameter("size must be positive")
        for o in _targets(out, p["object"]):
            o.scale = o.scale * (size / o.scale.max())
    elif name == "move_path":
        points = _path_points(p["path"])
        if len(points) < 2 or np.allclose(points, points[0]):
            raise InvalidParameter("move_path needs a path with at least two distinct points")
        for o in _targets(out, p["object"]):
            o.path = PathState(points - points[0] + o.position, path_speed)
    elif name == "draw_path":
        shape_type = p["shape_type"]
        if shape_type not in SHAPE_TYPES:
            raise InvalidParameter(f"shape_type must be one of {SHAPE_TYPES}")
        shape = fit_shape(_path_points(p["path"]), shape_type)
        poly = shape["polyline"]
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        out.add(SceneObject(_unique_name(out, shape_type), (lo + hi) / 2,
                            scale=np.maximum(hi - lo, 0.005), shape=shape))
    elif name == "set_color":
        rgb = color_rgb(p["color"])
        for o in _targets(out, p["object"]):
            o.color = rgb
    else:
        raise UnknownFunction(general_error_message(catalog))
    return out, selection


def execute_call(scene: Scene, call: FunctionCall, catalog: FunctionCatalog = DEFAULT_CATALOG) -> Scene:
    return run_call(scene, call, catalog)[0]


def step_paths(scene: Scene, dt: float) -> Scene:
    """Advance every path-attached object by ``dt`` seconds."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = scene.copy()
    for obj in out:
        if obj.path is not None:
            obj.path.advance(dt)
            obj.position = obj.path.current_point()
    return out

