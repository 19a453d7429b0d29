"""Scene state, its three-decimal JSON form, and ray / cone queries.

Every object is treated as an oriented bounding box: ``position`` is the box
center, ``scale`` the full extents along the local axes and ``rotation`` the
box orientation.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import SchemaError, UnknownObject
from .geometry import as_vec3, euler_to_rotation, normalize, rotation_to_euler

DEFAULT_RAY_LENGTH = 10.0
DEFAULT_CONE_HEIGHT = 10.0
MIN_CONE_RADIUS = 0.01

# unit-cube corners in local coordinates, scaled by half extents
_CORNER_SIGNS = np.array(
    [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
)
_EDGES = np.array([
    (i, j)
    for i in range(8)
    for j in range(i + 1, 8)
    if np.count_nonzero(_CORNER_SIGNS[i] != _CORNER_SIGNS[j]) == 1
])


@dataclass
class PathState:
    """Back-and-forth motion attached to an object by ``move_path``.

    ``phase`` is the distance travelled modulo one round trip (twice the path
    length); the object sits at ``phase`` on the way out and mirrors back.
    """

    points: np.ndarray  # (n, 3) world-frame waypoints
    speed: float  # m/s
    phase: float = 0.0

    @property
    def cumlen(self) -> np.ndarray:
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.cumlen[-1])

    def advance(self, dt: float):
        L = self.length
        if L > 0:
            self.phase = math.fmod(self.phase + self.speed * dt, 2.0 * L)

    def current_point(self) -> np.ndarray:
        cum = self.cumlen
        L = cum[-1]
        if L == 0.0:
            return self.points[0].copy()
        s = self.phase if self.phase <= L else 2.0 * L - self.phase
        return np.array([np.interp(s, cum, self.points[:, k]) for k in range(3)])


@dataclass(eq=False)
class SceneObject:
    name: str
    position: np.ndarray
    rotation: Rotation = field(default_factory=Rotation.identity)
    scale: np.ndarray = field(default_factory=lambda: np.full(3, 0.1))
    color: tuple[float, float, float] | None = None
    manipulatable: bool = True
    path: PathState | None = None
    # polyline produced by draw_path; not part of the serialized schema
    shape: dict | None = None

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name.strip():
            raise SchemaError("object name must be a non-empty string")
        self.position = as_vec3(self.position, "position")
        self.scale = as_vec3(self.scale, "scale")
        if np.any(self.scale <= 0):
            raise SchemaError(f"object {self.name!r}: scale components must be > 0")
        if self.color is not None:
            c = as_vec3(self.color, "color")
            if np.any(c < 0) or np.any(c > 1):
                raise SchemaError(f"object {self.name!r}: color components must be in [0, 1]")
            self.color = tuple(float(v) for v in c)

    def __eq__(self, other):
        """Exact equality of every field; rotations compare as matrices."""
        if not isinstance(other, SceneObject):
            return NotImplemented
        return (self.name == other.name
                and np.array_equal(self.position, other.position)
                and np.array_equal(self.rotation.as_matrix(), other.rotation.as_matrix())
                and np.array_equal(self.scale, other.scale)
                and self.color == other.color
                and self.manipulatable == other.manipulatable
                and (self.path is None) == (other.path is None))

    @property
    def half_extents(self) -> np.ndarray:
        return self.scale / 2.0

    @property
    def forward(self) -> np.ndarray:
        return self.rotation.apply([0.0, 0.0, 1.0])

    def corners(self) -> np.ndarray:
        return self.position + self.rotation.apply(_CORNER_SIGNS * self.half_extents)

    def to_local(self, points) -> np.ndarray:
        return self.rotation.inv().apply(np.asarray(points, dtype=float) - self.position)

    def contains(self, point, eps=1e-12) -> bool:
        local = self.to_local(point)
        return bool(np.all(np.abs(local) <= self.half_extents + eps))


class Scene:
    """Ordered, name-unique collection of :class:`SceneObject`.

    Queries never modify the scene; state changes go through
    :func:`cospeech.functions.execute_call`, which works on a copy.
    """

    def __init__(self, objects=()):
        self._objects: dict[str, SceneObject] = {}
        for obj in objects:
            self.add(obj)

    def add(self, obj: SceneObject):
        key = obj.name.casefold()
        if any(k.casefold() == key for k in self._objects):
            raise SchemaError(f"duplicate object name {obj.name!r}")
        self._objects[obj.name] = obj

    def remove(self, name):
        del self._objects[self.resolve_name(name)]

    def resolve_name(self, name: str) -> str:
        """Exact name if present, else a unique case-insensitive match."""
        if name in self._objects:
            return name
        key = name.casefold()
        for existing in self._objects:
            if existing.casefold() == key:
                return existing
        raise UnknownObject(f"no object named {name!r}")

    def __getitem__(self, name) -> SceneObject:
        return self._objects[self.resolve_name(name)]

    def __contains__(self, name) -> bool:
        try:
            self.resolve_name(name)
        except UnknownObject:
            return False
        return True

    def __iter__(self):
        return iter(self._objects.values())

    def __len__(self):
        return len(self._objects)

    @property
    def names(self) -> list[str]:
        return list(self._objects)

    def copy(self) -> Scene:
        return copy.deepcopy(self)

    def __eq__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        return serialize_scene(self) == serialize_scene(other)

    def __repr__(self):
        return f"Scene({self.names!r})"


# ---------------------------------------------------------------- JSON


def _require_triple(entry, key, name):
    value = entry.get(key)
    if not isinstance(value, list) or len(value) != 3:
        raise SchemaError(f"object {name!r}: {key!r} must be a list of 3 numbers")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError(f"object {name!r}: {key!r} must contain finite numbers")
    return [float(v) for v in value]


def scene_from_data(data) -> Scene:
    if not isinstance(data, list):
        raise SchemaError("scene document must be a JSON array of objects")
    scene = Scene()
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise SchemaError(f"scene entry {i} is not an object")
        name = entry.get("name")
        if not isinstance(name, str) or not name.strip():
            raise SchemaError(f"scene entry {i}: missing or empty 'name'")
        for key in ("position", "rotation", "scale"):
            if key not in entry:
                raise SchemaError(f"object {name!r}: missing field {key!r}")
        color = None
        if entry.get("color") is not None:
            color = _require_triple(entry, "color", name)
        manip = entry.get("manipulatable", True)
        if not isinstance(manip, bool):
            raise SchemaError(f"object {name!r}: 'manipulatable' must be a boolean")
        scene.add(
            SceneObject(
                name=name,
                position=_require_triple(entry, "position", name),
                rotation=euler_to_rotation(_require_triple(entry, "rotation", name)),
                scale=_require_triple(entry, "scale", name),
                color=color,
                manipulatable=manip,
            )
        )
    return scene


def load_scene(text: str) -> Scene:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scene is not valid JSON: {exc}") from exc
    return scene_from_data(data)


def _stable_euler(rot) -> np.ndarray:
    """Euler triple that reads back to itself after three-decimal rounding.

    Near gimbal lock or the +-180 seam several triples round to the same
    rotation; one extra cycle picks the representative scipy would return.
    """
    rounded = [float(format_number(a)) for a in rotation_to_euler(rot)]
    angles = rotation_to_euler(euler_to_rotation(rounded))
    return np.array([a + 360.0 if float(format_number(a)) <= -180.0 else a for a in angles])


def format_number(value: float) -> str:
    """Three decimals, rounded half away from zero on the shortest decimal repr."""
    d = Decimal(repr(float(value))).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP)
    if d == 0:
        d = abs(d)  # no "-0.000"
    return f"{d:.3f}"


def _triple(values) -> str:
    return "[" + ", ".join(format_number(v) for v in values) + "]"


def serialize_object(obj: SceneObject) -> str:
    parts = [
        f'"name": {json.dumps(obj.name, ensure_ascii=False)}',
        f'"position": {_triple(obj.position)}',
        f'"rotation": {_triple(_stable_euler(obj.rotation))}',
        f'"scale": {_triple(obj.scale)}',
    ]
    if obj.color is not None:
        parts.append(f'"color": {_triple(obj.color)}')
    if not obj.manipulatable:
        parts.append('"manipulatable": false')
    return "{" + ", ".join(parts) + "}"


def serialize_scene(scene: Scene) -> str:
    if len(scene) == 0:
        return "[]"
    return "[\n" + ",\n".join("  " + serialize_object(o) for o in scene) + "\n]"


# ---------------------------------------------------------------- rays


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    length: float = DEFAULT_RAY_LENGTH

    def __post_init__(self):
        object.__setattr__(self, "origin", as_vec3(self.origin, "origin"))
        d = as_vec3(self.direction, "direction")
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be a unit vector")
        object.__setattr__(self, "direction", d)
        if not self.length > 0:
            raise ValueError("ray length must be positive")

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class RayHit:
    name: str
    point: np.ndarray
    distance: float


def ray_box_distance(obj: SceneObject, origin, direction) -> float | None:
    """Distance along the ray to the box surface, or None.

    If the origin is inside the box, the exit distance is returned.
    """
    o = obj.to_local(origin)
    d = obj.rotation.inv().apply(direction)
    h = obj.half_extents
    t_near, t_far = -math.inf, math.inf
    for k in range(3):
        if abs(d[k]) < 1e-15:
            if abs(o[k]) > h[k]:
                return None
            continue
        t1 = (-h[k] - o[k]) / d[k]
        t2 = (h[k] - o[k]) / d[k]
        if t1 > t2:
            t1, t2 = t2, t1
        t_near = max(t_near, t1)
        t_far = min(t_far, t2)
        if t_near > t_far:
            return None
    if t_far <= 0:
        return None
    return t_near if t_near > 0 else t_far


def ray_intersect(scene: Scene, ray: Ray, ignore=()) -> list[RayHit]:
    """All box hits along ``ray`` sorted by distance; ``ignore`` names skipped."""
    skip = {n.casefold() for n in ignore}
    hits = []
    for obj in scene:
        if obj.name.casefold() in skip:
            continue
        t = ray_box_distance(obj, ray.origin, ray.direction)
        if t is None or t > ray.length:
            continue
        hits.append(RayHit(obj.name, ray.at(t), float(t)))
    hits.sort(key=lambda h: (h.distance, h.name))
    return hits


# ---------------------------------------------------------------- cones


@dataclass(frozen=True)
class Cone:
    """Solid cone: apex at ``vertex``, widening along ``axis``.

    The radius grows linearly from 0 at the vertex to ``base_radius`` at
    ``base_center`` and keeps growing until the cap at ``height``.
    """

    vertex: np.ndarray
    axis: np.ndarray
    base_center: np.ndarray
    base_radius: float
    height: float = DEFAULT_CONE_HEIGHT

    def __post_init__(self):
        object.__setattr__(self, "vertex", as_vec3(self.vertex, "vertex"))
        object.__setattr__(self, "base_center", as_vec3(self.base_center, "base_center"))
        axis = normalize(as_vec3(self.axis, "axis"))
        if axis is None:
            raise ValueError("cone axis must be non-zero")
        object.__setattr__(self, "axis", axis)
        if not self.base_radius > 0 or not self.height > 0:
            raise ValueError("cone radius and height must be positive")
        if self.base_distance <= 0:
            raise ValueError("cone base must lie in front of the vertex")

    @property
    def base_distance(self) -> float:
        return float(np.dot(self.base_center - self.vertex, self.axis))

    @property
    def slope(self) -> float:
        """Radius gained per meter along the axis."""
        return self.base_radius / self.base_distance

    def contains(self, point, eps=1e-12) -> bool:
        return bool(cone_contains_many(self, np.asarray(point, dtype=float)[None, :], eps)[0])


def cone_contains_many(cone: Cone, points, eps=1e-12) -> np.ndarray:
    rel = np.asarray(points, dtype=float) - cone.vertex
    t = rel @ cone.axis
    radial = np.linalg.norm(rel - np.outer(t, cone.axis), axis=1)
    return (t >= -eps) & (t <= cone.height + eps) & (radial <= cone.slope * t + eps)


def cone_contains(cone: Cone, point) -> bool:
    return cone.contains(point)


def _segments_hit_cone(cone: Cone, p0, p1) -> bool:
    """Exact test of whether any segment p0[i]-p1[i] meets the solid cone."""
    d = p1 - p0
    rel = p0 - cone.vertex
    a = cone.axis
    k2 = cone.slope**2
    # along each edge: t(s) = t0 + s*dt ; radial^2(s) = |w0 + s*dw|^2
    t0, dt = rel @ a, d @ a
    w0, dw = rel - np.outer(t0, a), d - np.outer(dt, a)
    # q(s) = radial^2 - k^2 t^2 <= 0 inside the double cone
    qa = np.einsum("ij,ij->i", dw, dw) - k2 * dt * dt
    qb = 2.0 * (np.einsum("ij,ij->i", w0, dw) - k2 * t0 * dt)
    qc = np.einsum("ij,ij->i", w0, w0) - k2 * t0 * t0
    n = len(p0)
    cand = np.full((n, 7), np.nan)
    cand[:, 0], cand[:, 1] = 0.0, 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        has_t = np.abs(dt) > 1e-15
        cand[has_t, 2] = -t0[has_t] / dt[has_t]
        cand[has_t, 3] = (cone.height - t0[has_t]) / dt[has_t]
        quad = np.abs(qa) > 1e-15
        disc = qb * qb - 4 * qa * qc
        root = np.sqrt(np.where(disc >= 0, disc, np.nan))
        cand[quad, 4] = -qb[quad] / (2 * qa[quad])
        cand[quad, 5] = (-qb[quad] - root[quad]) / (2 * qa[quad])
        cand[quad, 6] = (-qb[quad] + root[quad]) / (2 * qa[quad])
        lin = ~quad & (np.abs(qb) > 1e-15)
        cand[lin, 4] = -qc[lin] / qb[lin]
    # missing candidates collapse onto s = 0, which is already a probe
    s_vals = np.sort(np.clip(np.nan_to_num(cand, nan=0.0), 0.0, 1.0), axis=1)
    probes = np.hstack([s_vals, (s_vals[:, 1:] + s_vals[:, :-1]) / 2])
    pts = (p0[:, None, :] + probes[:, :, None] * d[:, None, :]).reshape(-1, 3)
    return bool(np.any(cone_contains_many(cone, pts, eps=1e-12)))


def cone_box_intersects(cone: Cone, obj: SceneObject) -> bool:
    corners = obj.corners()
    if np.any(cone_contains_many(cone, np.vstack([corners, obj.position]))):
        return True
    if obj.contains(cone.vertex):
        return True
    t = ray_box_distance(obj, cone.vertex, cone.axis)
    if t is not None and t <= cone.height:
        return True
    # Remaining overlap must cross a box edge. The one miss is a box met only
    # by the cap disk with no edge inside the cone, 10 m out.
    return _segments_hit_cone(cone, corners[_EDGES[:, 0]], corners[_EDGES[:, 1]])


def cone_intersect(scene: Scene, cone: Cone) -> set[str]:
    """Names of all objects whose box meets the cone volume."""
    return {obj.name for obj in scene if cone_box_intersects(cone, obj)}
