"""Seeded synthetic sessions with known ground truth.

Each generator returns a :class:`Fixture`: a scene, a word-timed transcript,
a 60 Hz hand trace and a ``truth`` dict. With zero noise the trace is built
so that the extraction rules recover the truth exactly. Noise is per frame:
the pointing direction (or palm orientation) is turned by an angle drawn
from N(0, sigma_deg) about a random axis, and every joint of the hand is
shifted by N(0, sigma_p) meters.

Scenes are round-tripped through the three-decimal JSON form before the
truth is computed, so a fixture read back from disk is self-consistent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .errors import SchemaError
from .fitting import SHAPE_TYPES
from .geometry import FORWARD, euler_to_rotation, minimal_arc, normalize
from .gesture import GestureTrace, HandFrame, JointPose, load_trace
from .scene import Cone, Scene, SceneObject, cone_box_intersects, load_scene, serialize_scene
from .transcript import Transcript, WordSpan, parse_transcript

FRAME_RATE_HZ = 60
HOLD_MS = 500  # gesture held this long before and after its token
TASKS = ("position", "object", "direction", "rotation", "size", "path")
SIZE_MODES = ("one", "two", "surface")
DEFAULT_SIZES = {"one": 0.05, "two": 0.20, "surface": 0.20}
PILE_COLORS = {"red": (1.0, 0.0, 0.0), "green": (0.0, 0.5, 0.0), "blue": (0.0, 0.0, 1.0)}

# joint offsets in the palm frame: fingers along +z, palm facing -y
_POINT = {
    "palm": (0.0, 0.0, 0.0),
    "index_metacarpal": (0.0, 0.0, 0.05),
    "index_tip": (0.0, 0.0, 0.12),
    "middle_tip": (0.035, -0.03, 0.06),
    "thumb_tip": (-0.04, -0.01, 0.05),
}
_FLAT = {
    "palm": (0.0, 0.0, 0.0),
    "index_metacarpal": (0.0, 0.0, 0.05),
    "index_tip": (0.0, 0.0, 0.12),
    "middle_tip": (0.015, 0.0, 0.118),
    "thumb_tip": (-0.045, 0.0, 0.04),
}


@dataclass
class Fixture:
    scene: Scene
    transcript: Transcript
    trace: GestureTrace
    truth: dict

    def write(self, directory) -> None:
        d = FsPath(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "scene.json").write_text(serialize_scene(self.scene) + "\n", encoding="utf-8")
        (d / "transcript.json").write_text(json.dumps(self.transcript.to_data()) + "\n",
                                           encoding="utf-8")
        (d / "trace.json").write_text(json.dumps(self.trace.to_data()) + "\n", encoding="utf-8")
        (d / "truth.json").write_text(json.dumps(self.truth, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, directory) -> Fixture:
        d = FsPath(directory)
        truth_file = d / "truth.json"
        truth = json.loads(truth_file.read_text(encoding="utf-8")) if truth_file.exists() else {}
        return cls(
            load_scene((d / "scene.json").read_text(encoding="utf-8")),
            parse_transcript((d / "transcript.json").read_text(encoding="utf-8")),
            load_trace((d / "trace.json").read_text(encoding="utf-8")),
            truth,
        )


# ---------------------------------------------------------------- building blocks


def _round_trip(scene: Scene) -> Scene:
    return load_scene(serialize_scene(scene))


def _utterance(text: str, token: tuple[int, int], gesture_ms: int = 0,
               start_ms: int = 600, word_ms: int = 300, gap_ms: int = 50):
    """Word-timed transcript; the token is stretched to last at least ``gesture_ms``."""
    words, t = [], start_ms
    first, last = token
    for i, w in enumerate(text.split()):
        dur = word_ms
        if i == last and gesture_ms:
            spoken = t - words[first].start_ms if i > first else 0
            dur = max(word_ms, gesture_ms - spoken)
        words.append(WordSpan(w, t, t + dur))
        t += dur + gap_ms
    tr = Transcript(tuple(words))
    return tr, words[first].start_ms, words[last].end_ms


def _frame_times(t0: float, t1: float) -> list[int]:
    k0 = math.ceil(max(t0, 0) * FRAME_RATE_HZ / 1000)
    k1 = math.floor(t1 * FRAME_RATE_HZ / 1000)
    return [round(k * 1000 / FRAME_RATE_HZ) for k in range(k0, k1 + 1)]


def _progress(t, ts, te) -> float:
    return min(max((t - ts) / (te - ts), 0.0), 1.0)


def _hand(rot: Rotation, anchor: str, anchor_pos, layout=_POINT, overrides=None) -> dict:
    local = dict(layout)
    if overrides:
        local.update(overrides)
    base = np.asarray(anchor_pos, dtype=float) - rot.apply(local[anchor])
    quat = rot.as_quat()
    return {j: JointPose(base + rot.apply(off) if j != anchor else np.asarray(anchor_pos, float),
                         quat.copy())
            for j, off in local.items()}


def _shift(hand: dict, delta) -> dict:
    return {j: JointPose(p.position + delta, p.quat) for j, p in hand.items()}


class _Noise:
    def __init__(self, rng, sigma_deg=0.0, sigma_p=0.0):
        self.rng = rng
        self.sigma_deg = float(sigma_deg)
        self.sigma_p = float(sigma_p)

    def turn(self, about=None) -> Rotation:
        """Random small rotation; axis perpendicular to ``about`` when given."""
        axis = self.rng.standard_normal(3)
        angle = self.sigma_deg * self.rng.standard_normal()
        if self.sigma_deg == 0:
            return Rotation.identity()
        if about is not None:
            axis = axis - (axis @ about) * about
        return Rotation.from_rotvec(np.radians(angle) * normalize(axis))

    def offset(self) -> np.ndarray:
        d = self.rng.standard_normal(3)
        return d * self.sigma_p if self.sigma_p else np.zeros(3)

    def direction(self, d):
        return self.turn(d).apply(d) if self.sigma_deg else np.asarray(d, dtype=float)


def _pointing_frames(times, origin, direction, noise: _Noise, side="right"):
    frames = []
    for t in times:
        d = normalize(noise.direction(direction))
        hand = _shift(_hand(minimal_arc(FORWARD, d), "index_metacarpal", origin), noise.offset())
        frames.append(HandFrame(t, **{side: hand}))
    return frames


def _room(wall_z: float) -> list[SceneObject]:
    return [
        SceneObject("floor", (0.0, -0.05, 1.5), scale=(6.0, 0.1, 6.0), manipulatable=False),
        SceneObject("wall", (0.0, 1.5, wall_z), scale=(6.0, 3.0, 0.1), manipulatable=False),
        SceneObject("table", (0.0, 0.375, 0.9), scale=(1.6, 0.75, 0.6), manipulatable=False),
    ]


def _unit(rng, yaw_deg, pitch_deg):
    yaw = np.radians(rng.uniform(*yaw_deg))
    pitch = np.radians(rng.uniform(*pitch_deg))
    return np.array([math.sin(yaw) * math.cos(pitch), math.sin(pitch),
                     math.cos(yaw) * math.cos(pitch)])


def _wall_target(origin, d, distance):
    """Wall placed about ``distance`` along ``d``; returns (wall_z, exact hit point)."""
    wall_z = round(float(origin[2] + distance * d[2] + 0.05), 3)
    face = wall_z - 0.05
    t = (face - origin[2]) / d[2]
    return wall_z, origin + t * d


def _aim(origin, target):
    return normalize(np.asarray(target, dtype=float) - origin)


# ---------------------------------------------------------------- tasks


def synth_position(rng, sigma_deg=0.0, sigma_p=0.0, distance=2.0) -> Fixture:
    origin = np.array([0.15, 1.30, 0.25])
    d = _unit(rng, (-15, 15), (-5, 10))
    wall_z, _ = _wall_target(origin, d, distance)
    cube = SceneObject("cube", (-0.5, 0.77, 0.8), scale=(0.04, 0.04, 0.04), color=(1.0, 0.0, 0.0))
    scene = _round_trip(Scene([*_room(wall_z), cube]))
    # aim at the exact point on the serialized wall face
    face = scene["wall"].position[2] - scene["wall"].scale[2] / 2
    target = origin + (face - origin[2]) / d[2] * d
    tr, ts, te = _utterance("Move the cube here", (3, 3))
    noise = _Noise(rng, sigma_deg, sigma_p)
    frames = _pointing_frames(_frame_times(ts - HOLD_MS, te + HOLD_MS), origin,
                              _aim(origin, target), noise)
    truth = {"task": "position", "object": "cube", "target": [float(v) for v in target],
             "distance": float(np.linalg.norm(target - origin)),
             "sigma_deg": sigma_deg, "sigma_p": sigma_p}
    return Fixture(scene, tr, GestureTrace(tuple(frames)), truth)


def cube_piles(rng, spacing=0.45):
    """25 cubes of 4 cm in three piles: 9 red, 8 green, 8 blue."""
    order = list(rng.permutation(list(PILE_COLORS)))
    objects, piles, k = [], {}, 1
    for slot, color in enumerate(order):
        cx = (slot - 1) * spacing + round(rng.uniform(-0.03, 0.03), 3)
        cz = 0.85 + round(rng.uniform(-0.05, 0.05), 3)
        cells = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]
        if color != "red":
            cells.pop(int(rng.integers(len(cells))))
        piles[color] = np.array([cx, 0.77, cz])
        for i, j in cells:
            pos = (round(cx + 0.06 * i, 3), 0.77, round(cz + 0.06 * j, 3))
            yaw = int(rng.integers(0, 90))
            objects.append(SceneObject(f"cube_{k:02d}", pos, euler_to_rotation((0, yaw, 0)),
                                       (0.04, 0.04, 0.04), color=PILE_COLORS[color]))
            k += 1
    return objects, piles


def object_cone(center_tip, axis, tip_radius, offset=0.30, palm_back=0.12) -> Cone:
    """Cone the extraction rules build from the circling gesture below."""
    base = center_tip - palm_back * axis
    return Cone(base - offset * axis, axis, base, tip_radius, 10.0)


def synth_object(rng, sigma_deg=0.0, sigma_p=0.0, color=None, cone_radius=0.17,
                 aim_jitter_m=0.0, clearance=0.03, max_tries=200) -> Fixture:
    """Circling pointing gesture whose cone covers one pile.

    With ``aim_jitter_m`` the aim point wanders off the pile center. Aims
    that leave a cube within ``clearance`` (relative cone radius) of the
    cone's surface are redrawn, so inside/outside is never a near tie.
    """
    objects, piles = cube_piles(rng)
    scene = _round_trip(Scene([*_room(3.0), *objects]))
    color = color or str(rng.choice(list(PILE_COLORS)))
    hand_c = np.array([0.0, 1.25, 0.25])
    cubes = [o for o in scene if o.name.startswith("cube_")]
    for _ in range(max_tries):
        aim = piles[color] + np.array([rng.uniform(-1, 1), 0.0, rng.uniform(-1, 1)]) * aim_jitter_m
        axis = _aim(hand_c, aim)
        dist = float(np.linalg.norm(aim - hand_c)) + 0.42
        radius = cone_radius * 0.30 / dist
        lo = object_cone(hand_c, axis, radius * (1 - clearance))
        hi = object_cone(hand_c, axis, radius * (1 + clearance))
        if all(cone_box_intersects(lo, o) == cone_box_intersects(hi, o) for o in cubes):
            break
    else:
        raise RuntimeError("could not place a selection cone clear of every cube")
    e1 = normalize(np.cross(axis, [0.0, 1.0, 0.0]))
    e2 = np.cross(axis, e1)
    tr, ts, te = _utterance(f"Select the {color} cubes there", (4, 4))
    noise = _Noise(rng, sigma_deg, sigma_p)
    frames = []
    t0 = ts - HOLD_MS
    for t in _frame_times(t0, te + HOLD_MS):
        theta = 2 * math.pi * (t - t0) / 600.0
        tip = hand_c + radius * (math.cos(theta) * e1 + math.sin(theta) * e2)
        d = normalize(noise.direction(axis))
        hand = _hand(minimal_arc(FORWARD, d), "index_tip", tip)
        frames.append(HandFrame(t, right=_shift(hand, noise.offset())))
    cone = object_cone(hand_c, axis, radius)
    truth = {"task": "object", "color": color,
             "selected": [o.name for o in cubes if o.color == PILE_COLORS[color]],
             "in_cone": [o.name for o in scene if cone_box_intersects(cone, o)],
             "cone": {"vertex": [float(v) for v in cone.vertex], "axis": [float(v) for v in axis],
                      "base_radius": float(radius)},
             "sigma_deg": sigma_deg, "sigma_p": sigma_p}
    return Fixture(scene, tr, GestureTrace(tuple(frames)), truth)


def synth_direction(rng, sigma_deg=0.0, sigma_p=0.0) -> Fixture:
    start = [int(v) for v in rng.integers(-90, 90, size=3)]
    arrow = SceneObject("arrow", (0.0, 1.0, 1.0), euler_to_rotation(start), (0.05, 0.05, 0.3))
    scene = _round_trip(Scene([*_room(3.0), arrow]))
    d = _unit(rng, (-60, 60), (-30, 30))
    origin = np.array([0.15, 1.25, 0.3])
    tr, ts, te = _utterance("Point the arrow this way", (3, 4))
    frames = _pointing_frames(_frame_times(ts - HOLD_MS, te + HOLD_MS), origin, d,
                              _Noise(rng, sigma_deg, sigma_p))
    truth = {"task": "direction", "object": "arrow", "direction": [float(v) for v in d],
             "sigma_deg": sigma_deg, "sigma_p": sigma_p}
    return Fixture(scene, tr, GestureTrace(tuple(frames)), truth)


def synth_rotation(rng, sigma_deg=0.0, sigma_p=0.0, hands="one", angle_deg=None,
                   axis=None) -> Fixture:
    if hands not in ("one", "two"):
        raise ValueError("hands must be 'one' or 'two'")
    start = [int(v) for v in rng.integers(-90, 90, size=3)]
    box = SceneObject("box", (0.0, 1.0, 1.0), euler_to_rotation(start), (0.2, 0.1, 0.3))
    scene = _round_trip(Scene([*_room(3.0), box]))
    axis = normalize(rng.standard_normal(3) if axis is None else np.asarray(axis, float))
    angle = float(rng.uniform(30, 150) if angle_deg is None else angle_deg)
    delta = Rotation.from_rotvec(np.radians(angle) * axis)
    tr, ts, te = _utterance("Rotate the box like this", (3, 4), gesture_ms=1000)
    noise = _Noise(rng, sigma_deg, sigma_p)
    sweep = Slerp([0.0, 1.0], Rotation.concatenate([Rotation.identity(), delta]))
    centre = np.array([0.0, 1.1, 0.35])
    frames = []
    if hands == "one":
        q0 = Rotation.from_euler("x", 90, degrees=True)  # palm facing forward
        for t in _frame_times(ts - HOLD_MS, te + HOLD_MS):
            rot = noise.turn() * sweep(_progress(t, ts, te)) * q0
            frames.append(HandFrame(t, right=_shift(_hand(rot, "palm", centre, _FLAT),
                                                    noise.offset())))
    else:
        u = rng.standard_normal(3)
        line0 = normalize(u - (u @ axis) * axis)
        for t in _frame_times(ts - HOLD_MS, te + HOLD_MS):
            r = noise.turn() * sweep(_progress(t, ts, te))
            line = r.apply(line0)
            left = _hand(r, "palm", centre - 0.15 * line, _FLAT)
            right = _hand(r, "palm", centre + 0.15 * line, _FLAT)
            frames.append(HandFrame(t, left=_shift(left, noise.offset()),
                                    right=_shift(right, noise.offset())))
    target = delta * scene["box"].rotation
    truth = {"task": "rotation", "object": "box", "hands": hands, "angle_deg": angle,
             "axis": [float(v) for v in axis], "delta_quat": [float(v) for v in delta.as_quat()],
             "target_quat": [float(v) for v in target.as_quat()],
             "sigma_deg": sigma_deg, "sigma_p": sigma_p}
    return Fixture(scene, tr, GestureTrace(tuple(frames)), truth)


def synth_size(rng, sigma_deg=0.0, sigma_p=0.0, hands="one", size=None) -> Fixture:
    if hands not in SIZE_MODES:
        raise ValueError(f"hands must be one of {SIZE_MODES}")
    size = float(DEFAULT_SIZES[hands] if size is None else size)
    box = SceneObject("box", (0.5, 0.8, 0.9), scale=(0.1, 0.1, 0.1))
    scene = _round_trip(Scene([*_room(3.0), box]))
    tr, ts, te = _utterance("Make the box this large", (3, 4))
    noise = _Noise(rng, sigma_deg, sigma_p)
    frames = []
    for t in _frame_times(ts - HOLD_MS, te + HOLD_MS):
        if hands == "one":
            hand = _hand(Rotation.identity(), "index_tip", (0.1, 1.1, 0.4), _POINT,
                         {"thumb_tip": (0.0, -size, 0.12), "middle_tip": (0.04, 0.0, 0.10)})
            frames.append(HandFrame(t, right=_shift(hand, noise.offset())))
        elif hands == "two":
            left = _hand(Rotation.identity(), "palm", (-size / 2, 1.1, 0.4), _FLAT)
            right = _hand(Rotation.identity(), "palm", (size / 2, 1.1, 0.4), _FLAT)
            frames.append(HandFrame(t, left=_shift(left, noise.offset()),
                                    right=_shift(right, noise.offset())))
        else:
            top = scene["table"].position[1] + scene["table"].scale[1] / 2
            hand = _hand(noise.turn(), "palm", (-0.2, top + size, 0.8), _FLAT)
            frames.append(HandFrame(t, right=_shift(hand, noise.offset())))
    truth = {"task": "size", "object": "box", "hands": hands, "size": size,
             "sigma_deg": sigma_deg, "sigma_p": sigma_p}
    return Fixture(scene, tr, GestureTrace(tuple(frames)), truth)


def stroke_point(shape: str, s: float, length=0.3, amplitude=0.2, cycles=1.5,
                 diameter=0.3, origin=(-0.15, 1.1, 0.5)) -> np.ndarray:
    """Point at progress ``s`` in [0, 1] of the ideal stroke (vertical plane)."""
    o = np.asarray(origin, dtype=float)
    if shape == "line":
        return o + np.array([length * s, 0.0, 0.0])
    if shape == "circle":
        r = diameter / 2
        a = 2 * math.pi * s
        return o + np.array([r - r * math.cos(a), r * math.sin(a), 0.0])
    if shape == "sine":
        return o + np.array([length * s, amplitude * math.sin(2 * math.pi * cycles * s), 0.0])
    raise ValueError(f"unknown shape {shape!r}; expected one of {SHAPE_TYPES}")


def synth_path(rng, sigma_deg=0.0, sigma_p=0.0, shape=None, stroke_ms=1500) -> Fixture:
    shape = shape or str(rng.choice(SHAPE_TYPES))
    scene = _round_trip(Scene(_room(3.0)))
    noun = {"line": "line", "circle": "circle", "sine": "wave"}[shape]
    tr, ts, te = _utterance(f"Draw a {noun} like this", (3, 4), gesture_ms=stroke_ms)
    noise = _Noise(rng, sigma_deg, sigma_p)
    frames, ideal = [], []
    for t in _frame_times(ts - HOLD_MS, te + HOLD_MS):
        tip = stroke_point(shape, _progress(t, ts, te))
        if not ideal or not np.array_equal(ideal[-1], tip):
            ideal.append(tip)
        hand = _hand(Rotation.identity(), "index_tip", tip, _POINT)
        frames.append(HandFrame(t, right=_shift(hand, noise.offset())))
    truth = {"task": "path", "shape": shape, "polyline": [[float(c) for c in p] for p in ideal],
             "sigma_deg": sigma_deg, "sigma_p": sigma_p}
    return Fixture(scene, tr, GestureTrace(tuple(frames)), truth)


PAINTING_TEXT = "Hang the Starry Night painting on the wall here."


def synth_painting(rng=None, failed=False, sigma_deg=0.0) -> Fixture:
    """Painting scenario; ``failed`` drops the hand while "here" is spoken."""
    rng = np.random.default_rng(0) if rng is None else rng
    painting = SceneObject("Starry Night", (0.8, 0.765, 0.9), scale=(0.73, 0.92, 0.03),
                           color=(0.1, 0.2, 0.5))
    scene = _round_trip(Scene([*_room(2.5), painting]))
    origin = np.array([0.15, 1.3, 0.25])
    face = scene["wall"].position[2] - scene["wall"].scale[2] / 2
    target = np.array([-0.3, 1.6, face])
    tr, ts, te = _utterance(PAINTING_TEXT, (8, 8))
    if failed:
        # the hand is tracked only while the first words are spoken
        times = _frame_times(0, tr.words[1].end_ms)
    else:
        times = _frame_times(ts - HOLD_MS, te + HOLD_MS)
    frames = _pointing_frames(times, origin, _aim(origin, target), _Noise(rng, sigma_deg))
    truth = {"task": "position", "object": "Starry Night", "target": [float(v) for v in target],
             "failed": failed}
    if failed:
        truth["message"] = ("Unable to retrieve 'position' parameter for function "
                            "move(object, position). The 'object' parameter was detected as "
                            "the Starry Night painting. Could you repeat your command?")
    return Fixture(scene, tr, GestureTrace(tuple(frames)), truth)


GENERATORS = {
    "position": synth_position,
    "object": synth_object,
    "direction": synth_direction,
    "rotation": synth_rotation,
    "size": synth_size,
    "path": synth_path,
}


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


def synth_trials(task: str, seed: int, trials: int = 5, **params) -> list[Fixture]:
    if task not in GENERATORS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    return [GENERATORS[task](trial_rng(seed, i), **params) for i in range(trials)]


def write_trials(fixtures, out_dir) -> list[FsPath]:
    out = FsPath(out_dir)
    paths = []
    for i, fx in enumerate(fixtures):
        p = out / f"trial_{i:03d}"
        fx.write(p)
        paths.append(p)
    return paths


def read_trials(directory) -> list[tuple[str, Fixture]]:
    """Fixtures under ``directory`` (itself, or its sorted subdirectories)."""
    d = FsPath(directory)
    if not d.is_dir():
        raise SchemaError(f"{d} is not a directory")
    if (d / "scene.json").exists():
        return [(d.name, Fixture.read(d))]
    return [(p.name, Fixture.read(p)) for p in sorted(d.iterdir())
            if p.is_dir() and (p / "scene.json").exists()]
