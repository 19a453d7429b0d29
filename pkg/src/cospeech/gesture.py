"""Skeletal hand traces, time-window segmentation and movement detection."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import EmptySegment, NoHands, NonMonotonicTime, SchemaError
from .transcript import TimeInterval

JOINTS = ("palm", "thumb_tip", "index_tip", "middle_tip", "index_metacarpal")
HANDS = ("left", "right")
DEFAULT_MOVE_THRESHOLD_M = 0.02


class HandsUsed(enum.Enum):
    LEFT_ONLY = "left"
    RIGHT_ONLY = "right"
    BOTH = "both"


@dataclass(frozen=True)
class JointPose:
    position: np.ndarray
    quat: np.ndarray  # (x, y, z, w), unit norm

    @property
    def rotation(self) -> Rotation:
        return Rotation.from_quat(self.quat)


Hand = dict  # joint name -> JointPose


@dataclass(frozen=True)
class HandFrame:
    t_ms: int
    left: Hand | None = None
    right: Hand | None = None

    def hand(self, side: str) -> Hand | None:
        return self.left if side == "left" else self.right

    def joint(self, side: str, joint: str) -> np.ndarray:
        return self.hand(side)[joint].position


@dataclass(frozen=True)
class GestureTrace:
    frames: tuple[HandFrame, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        for a, b in zip(self.frames, self.frames[1:]):
            if b.t_ms <= a.t_ms:
                raise NonMonotonicTime(f"frame at {b.t_ms} ms does not follow {a.t_ms} ms")

    def __len__(self):
        return len(self.frames)

    def to_data(self) -> dict:
        return {"frames": [frame_to_data(f) for f in self.frames]}


@dataclass(frozen=True)
class GestureSegment:
    frames: tuple[HandFrame, ...]
    interval: TimeInterval

    def __post_init__(self):
        if not self.frames:
            raise EmptySegment("segment has no frames")

    def __len__(self):
        return len(self.frames)

    def present(self, side: str) -> list[HandFrame]:
        return [f for f in self.frames if f.hand(side) is not None]

    def positions(self, side: str, joint: str) -> np.ndarray:
        """(n, 3) positions of one joint over the frames where the hand is present."""
        rows = [f.hand(side)[joint].position for f in self.frames if f.hand(side) is not None]
        return np.array(rows, dtype=float).reshape(-1, 3)

    @classmethod
    def whole(cls, trace: GestureTrace) -> GestureSegment:
        return cls(trace.frames, TimeInterval(trace.frames[0].t_ms, trace.frames[-1].t_ms))


# ---------------------------------------------------------------- JSON


def _parse_joint(raw, where) -> JointPose:
    if not isinstance(raw, dict) or "pos" not in raw or "rot" not in raw:
        raise SchemaError(f"{where}: joint needs 'pos' and 'rot'")
    try:
        pos = np.asarray(raw["pos"], dtype=float)
        quat = np.asarray(raw["rot"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: non-numeric joint data") from exc
    if pos.shape != (3,) or quat.shape != (4,):
        raise SchemaError(f"{where}: 'pos' needs 3 numbers and 'rot' 4 (x, y, z, w)")
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(quat))):
        raise SchemaError(f"{where}: non-finite joint data")
    n = np.linalg.norm(quat)
    if n < 1e-12:
        raise SchemaError(f"{where}: zero quaternion")
    return JointPose(pos, quat / n)


def _parse_hand(raw, where) -> Hand | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: hand must be an object")
    missing = [j for j in JOINTS if j not in raw]
    if missing:
        raise SchemaError(f"{where}: missing joints {missing}")
    return {j: _parse_joint(raw[j], f"{where}.{j}") for j in JOINTS}


def trace_from_data(data) -> GestureTrace:
    if not isinstance(data, dict) or not isinstance(data.get("frames"), list):
        raise SchemaError("trace must be an object with a 'frames' array")
    frames = []
    for i, raw in enumerate(data["frames"]):
        if not isinstance(raw, dict):
            raise SchemaError(f"frame {i} is not an object")
        t = raw.get("t_ms")
        if isinstance(t, bool) or not isinstance(t, int):
            raise SchemaError(f"frame {i}: 't_ms' must be an integer")
        frames.append(
            HandFrame(t, _parse_hand(raw.get("left"), f"frame {i}.left"),
                      _parse_hand(raw.get("right"), f"frame {i}.right"))
        )
    return GestureTrace(tuple(frames))


def load_trace(text: str) -> GestureTrace:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"trace is not valid JSON: {exc}") from exc
    return trace_from_data(data)


def frame_to_data(frame: HandFrame) -> dict:
    out = {"t_ms": frame.t_ms}
    for side in HANDS:
        hand = frame.hand(side)
        if hand is not None:
            out[side] = {
                j: {"pos": [float(v) for v in hand[j].position],
                    "rot": [float(v) for v in hand[j].quat]} for j in JOINTS
            }
    return out


# ---------------------------------------------------------------- analysis


def segment(trace: GestureTrace, interval: TimeInterval) -> GestureSegment:
    """Frames whose timestamp falls inside ``interval`` (inclusive)."""
    frames = tuple(f for f in trace.frames if interval.contains(f.t_ms))
    if not frames:
        raise EmptySegment(
            f"no gesture frames between {interval.start_ms} and {interval.end_ms} ms"
        )
    return GestureSegment(frames, interval)


def detect_movement(seg: GestureSegment, threshold_m: float = DEFAULT_MOVE_THRESHOLD_M) -> dict:
    """Per hand: did the palm get farther than ``threshold_m`` from its first position?

    Hands absent from the whole segment map to False.
    """
    moved = {}
    for side in HANDS:
        palms = seg.positions(side, "palm")
        if len(palms) == 0:
            moved[side] = False
            continue
        drift = np.linalg.norm(palms - palms[0], axis=1)
        moved[side] = bool(drift.max() > threshold_m)
    return moved


def hands_used(seg: GestureSegment, threshold_m: float = DEFAULT_MOVE_THRESHOLD_M) -> HandsUsed:
    present = {side: len(seg.present(side)) for side in HANDS}
    if not any(present.values()):
        raise NoHands("no hand is tracked in the segment")
    if not present["left"]:
        return HandsUsed.RIGHT_ONLY
    if not present["right"]:
        return HandsUsed.LEFT_ONLY
    moved = detect_movement(seg, threshold_m)
    if moved["left"] and moved["right"]:
        return HandsUsed.BOTH
    if moved["left"] != moved["right"]:
        return HandsUsed.LEFT_ONLY if moved["left"] else HandsUsed.RIGHT_ONLY
    # neither moves: two static hands count as a two-hand pose only if both
    # stay tracked for the whole segment
    n = len(seg)
    if present["left"] == n and present["right"] == n:
        return HandsUsed.BOTH
    return HandsUsed.RIGHT_ONLY if present["right"] >= present["left"] else HandsUsed.LEFT_ONLY
