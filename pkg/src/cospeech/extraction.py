"""Turn a gesture segment into a concrete parameter value.

One extractor per parameter kind. Deictic kinds (position, object, direction)
work from the hand ray, which starts at the index metacarpal joint and passes
through the index fingertip. Iconic kinds (rotation, size, path) read the
palms and fingertips directly.

Frames where the relevant hand is not tracked are skipped, never interpolated.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation
from sklearn.base import BaseEstimator

from .errors import (
    DegenerateInput,
    DegenerateRay,
    ExtractionUnavailable,
    NoHands,
    NoIntersection,
    NoSurfaceHit,
    ZeroLengthLine,
)
from .fitting import DEFAULT_RESAMPLE, CircleFit, resample_polyline
from .functions import ParamKind
from .geometry import minimal_arc, normalize, plane_basis
from .gesture import (
    DEFAULT_MOVE_THRESHOLD_M,
    HANDS,
    GestureSegment,
    HandFrame,
    HandsUsed,
    hands_used,
)
from .scene import (
    DEFAULT_CONE_HEIGHT,
    DEFAULT_RAY_LENGTH,
    MIN_CONE_RADIUS,
    Cone,
    Ray,
    Scene,
    cone_intersect,
    ray_intersect,
)

CONE_VERTEX_OFFSET = 0.30  # m behind the fitted base circle
PINCH_MERGE_THRESHOLD_M = 0.03
PALM_FACING = np.array([0.0, -1.0, 0.0])  # palm normal in the palm joint frame


@dataclass
class Path:
    """Recorded motion for a path parameter.

    ``frames`` keeps every joint pose; ``points`` is the dominant hand's
    index-tip trajectory with repeated samples dropped and ``polyline`` the
    same trajectory resampled uniformly by arc length.
    """

    frames: tuple[HandFrame, ...]
    hand: str
    points: np.ndarray
    polyline: np.ndarray

    @property
    def times_ms(self) -> list[int]:
        return [f.t_ms for f in self.frames]


def hand_ray(frame: HandFrame, hand: str, length: float = DEFAULT_RAY_LENGTH) -> Ray:
    joints = frame.hand(hand)
    if joints is None:
        raise NoHands(f"{hand} hand is not tracked at {frame.t_ms} ms")
    origin = joints["index_metacarpal"].position
    direction = normalize(joints["index_tip"].position - origin)
    if direction is None:
        raise DegenerateRay("index tip coincides with the index metacarpal joint")
    return Ray(origin, direction, length)


def pointing_hand(seg: GestureSegment, threshold_m: float = DEFAULT_MOVE_THRESHOLD_M) -> str:
    """The hand doing the pointing; the right hand when both qualify."""
    used = hands_used(seg, threshold_m)
    return "left" if used is HandsUsed.LEFT_ONLY else "right"


def _rays(seg, hand, length=DEFAULT_RAY_LENGTH):
    rays = []
    for f in seg.frames:
        if f.hand(hand) is None:
            continue
        try:
            rays.append(hand_ray(f, hand, length))
        except DegenerateRay:
            continue
    if not rays:
        raise DegenerateRay("no usable hand ray in the segment")
    return rays


def _mean_direction(rays) -> np.ndarray:
    mean = normalize(np.mean([r.direction for r in rays], axis=0), eps=1e-9)
    if mean is None:
        raise DegenerateRay("hand-ray directions cancel out")
    return mean


def extract_position(seg: GestureSegment, scene: Scene, ignore=(), *,
                     ray_length=DEFAULT_RAY_LENGTH, threshold_m=DEFAULT_MOVE_THRESHOLD_M):
    """Mean of the per-frame first hits of the hand ray."""
    hand = pointing_hand(seg, threshold_m)
    hits = []
    for ray in _rays(seg, hand, ray_length):
        found = ray_intersect(scene, ray, ignore)
        if found:
            hits.append(found[0].point)
    if not hits:
        raise NoIntersection("the hand ray does not hit anything in the scene")
    return np.mean(hits, axis=0)


def extract_pointed_object(seg: GestureSegment, scene: Scene, ignore=(), *,
                           ray_length=DEFAULT_RAY_LENGTH, threshold_m=DEFAULT_MOVE_THRESHOLD_M):
    """Single object: the most frequent first hit of the hand ray.

    Ties go to the smaller mean hit distance.
    """
    hand = pointing_hand(seg, threshold_m)
    counts, dist = Counter(), {}
    for ray in _rays(seg, hand, ray_length):
        found = ray_intersect(scene, ray, ignore)
        if found:
            counts[found[0].name] += 1
            dist.setdefault(found[0].name, []).append(found[0].distance)
    if not counts:
        raise NoIntersection("the hand ray does not hit any object")
    return min(counts, key=lambda n: (-counts[n], float(np.mean(dist[n]))))


def build_cone(seg: GestureSegment, *, offset=CONE_VERTEX_OFFSET, height=DEFAULT_CONE_HEIGHT,
               min_radius=MIN_CONE_RADIUS, threshold_m=DEFAULT_MOVE_THRESHOLD_M) -> Cone:
    """Selection cone from a pointing segment.

    Axis: mean hand-ray direction. Base: circle fitted to the index tips
    projected onto the plane normal to the axis through the mean palm
    position. The vertex sits ``offset`` behind the circle center.
    """
    hand = pointing_hand(seg, threshold_m)
    axis = _mean_direction(_rays(seg, hand))
    palms = seg.positions(hand, "palm")
    tips = seg.positions(hand, "index_tip")
    origin = palms.mean(axis=0)
    e1, e2 = plane_basis(axis)
    rel = tips - origin
    uv = np.column_stack([rel @ e1, rel @ e2])
    try:
        est = CircleFit().fit(uv)
        center2, radius = est.center_, est.radius_
    except DegenerateInput:
        center2, radius = uv.mean(axis=0), 0.0
    center = origin + center2[0] * e1 + center2[1] * e2
    return Cone(center - offset * axis, axis, center, max(radius, min_radius), height)


def extract_object(seg: GestureSegment, scene: Scene, **cone_kw) -> set[str]:
    """All objects whose boxes meet the selection cone."""
    return cone_intersect(scene, build_cone(seg, **cone_kw))


def extract_direction(seg: GestureSegment, *, threshold_m=DEFAULT_MOVE_THRESHOLD_M) -> np.ndarray:
    return _mean_direction(_rays(seg, pointing_hand(seg, threshold_m)))


def extract_rotation(seg: GestureSegment, *, threshold_m=DEFAULT_MOVE_THRESHOLD_M) -> Rotation:
    """World-frame rotation demonstrated between the first and last frame.

    One hand: change of palm orientation. Two hands: shortest rotation
    carrying the palm-to-palm line of the first frame onto that of the last.
    """
    used = hands_used(seg, threshold_m)
    if used is HandsUsed.BOTH:
        both = [f for f in seg.frames if f.left is not None and f.right is not None]
        if not both:
            raise NoHands("the two hands are never tracked together")

        def line(f):
            v = normalize(f.right["palm"].position - f.left["palm"].position)
            if v is None:
                raise ZeroLengthLine("palm joints coincide")
            return v

        return minimal_arc(line(both[0]), line(both[-1]))
    hand = "left" if used is HandsUsed.LEFT_ONLY else "right"
    frames = seg.present(hand)
    q0 = frames[0].hand(hand)["palm"].rotation
    q1 = frames[-1].hand(hand)["palm"].rotation
    return q1 * q0.inv()


def extract_size(seg: GestureSegment, scene: Scene | None = None, ignore=(), *,
                 pinch_threshold_m=PINCH_MERGE_THRESHOLD_M, ray_length=DEFAULT_RAY_LENGTH,
                 threshold_m=DEFAULT_MOVE_THRESHOLD_M) -> float:
    """Length shown with the hands, in meters.

    Two hands: mean palm-to-palm distance. One hand with index and middle
    fingers together: mean distance from the palm to the nearest surface it
    faces. Otherwise: mean thumb-to-index distance.
    """
    used = hands_used(seg, threshold_m)
    if used is HandsUsed.BOTH:
        both = [f for f in seg.frames if f.left is not None and f.right is not None]
        return float(np.mean([np.linalg.norm(f.left["palm"].position - f.right["palm"].position)
                              for f in both]))
    hand = "left" if used is HandsUsed.LEFT_ONLY else "right"
    frames = seg.present(hand)
    spread = np.mean([np.linalg.norm(f.hand(hand)["index_tip"].position
                                     - f.hand(hand)["middle_tip"].position) for f in frames])
    if spread < pinch_threshold_m:
        if scene is None:
            raise NoSurfaceHit("surface-reference size needs a scene")
        lengths = []
        for f in frames:
            palm = f.hand(hand)["palm"]
            ray = Ray(palm.position, palm.rotation.apply(PALM_FACING), ray_length)
            hits = ray_intersect(scene, ray, ignore)
            if hits:
                lengths.append(hits[0].distance)
        if not lengths:
            raise NoSurfaceHit(f"no surface within {ray_length} m of the palm")
        return float(np.mean(lengths))
    return float(np.mean([np.linalg.norm(f.hand(hand)["index_tip"].position
                                         - f.hand(hand)["thumb_tip"].position) for f in frames]))


def _dedupe(points):
    keep = [0] + [i for i in range(1, len(points)) if not np.array_equal(points[i], points[i - 1])]
    return points[keep]


def extract_path(seg: GestureSegment, *, n_samples=DEFAULT_RESAMPLE) -> Path:
    """All joint poses of the segment plus the dominant index-tip trajectory.

    The dominant hand is the one whose index tip travels farthest.
    """
    travel = {}
    for side in HANDS:
        tips = seg.positions(side, "index_tip")
        if len(tips):
            travel[side] = float(np.linalg.norm(np.diff(tips, axis=0), axis=1).sum())
    if not travel:
        raise NoHands("no hand is tracked in the segment")
    hand = max(travel, key=lambda s: (travel[s], s == "right"))
    points = _dedupe(seg.positions(hand, "index_tip"))
    polyline = points.copy() if len(points) == 1 else resample_polyline(points, n_samples)
    return Path(seg.frames, hand, points, polyline)


class GestureExtractor(BaseEstimator):
    """Estimator-style front end bundling the extraction constants.

    ``fit(scene)`` binds the scene used by ray and cone queries;
    ``extract(segment, kind)`` dispatches on the parameter kind.
    """

    def __init__(self, ray_length=DEFAULT_RAY_LENGTH, cone_offset=CONE_VERTEX_OFFSET,
                 cone_height=DEFAULT_CONE_HEIGHT, min_cone_radius=MIN_CONE_RADIUS,
                 move_threshold_m=DEFAULT_MOVE_THRESHOLD_M,
                 pinch_threshold_m=PINCH_MERGE_THRESHOLD_M, path_samples=DEFAULT_RESAMPLE):
        self.ray_length = ray_length
        self.cone_offset = cone_offset
        self.cone_height = cone_height
        self.min_cone_radius = min_cone_radius
        self.move_threshold_m = move_threshold_m
        self.pinch_threshold_m = pinch_threshold_m
        self.path_samples = path_samples

    def fit(self, scene: Scene, y=None):
        self.scene_ = scene
        return self

    def cone(self, seg):
        return build_cone(seg, offset=self.cone_offset, height=self.cone_height,
                          min_radius=self.min_cone_radius, threshold_m=self.move_threshold_m)

    def extract(self, seg: GestureSegment, kind: ParamKind, ignore=()):
        scene = getattr(self, "scene_", None)
        if scene is None:
            scene = Scene()
        t = self.move_threshold_m
        if kind is ParamKind.POSITION:
            return extract_position(seg, scene, ignore, ray_length=self.ray_length, threshold_m=t)
        if kind is ParamKind.OBJECT:
            return extract_pointed_object(seg, scene, ignore, ray_length=self.ray_length,
                                          threshold_m=t)
        if kind is ParamKind.OBJECT_LIST:
            selected = {n for n in cone_intersect(scene, self.cone(seg))
                        if n.casefold() not in {i.casefold() for i in ignore}}
            if not selected:
                raise NoIntersection("the selection cone contains no objects")
            return [n for n in scene.names if n in selected]
        if kind is ParamKind.DIRECTION:
            return extract_direction(seg, threshold_m=t)
        if kind is ParamKind.ROTATION:
            return extract_rotation(seg, threshold_m=t)
        if kind is ParamKind.SIZE:
            return extract_size(seg, scene, ignore, pinch_threshold_m=self.pinch_threshold_m,
                                ray_length=self.ray_length, threshold_m=t)
        if kind is ParamKind.PATH:
            return extract_path(seg, n_samples=self.path_samples)
        raise ExtractionUnavailable(f"{kind.value} parameters cannot be read from a gesture")
