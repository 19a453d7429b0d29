"""Builders for hands, frames and transcripts shared by the tests."""

from dataclasses import replace

import numpy as np
from scipy.spatial.transform import Rotation

from cospeech.gesture import GestureSegment, GestureTrace, HandFrame, JointPose, segment
from cospeech.scene import Scene, SceneObject
from cospeech.transcript import TimeInterval, Transcript, WordSpan

ID = np.array([0.0, 0.0, 0.0, 1.0])


def hand(palm=(0, 0, 0), index_tip=(0, 0, 0.12), index_metacarpal=(0, 0, 0.05),
         thumb_tip=(-0.04, 0, 0.05), middle_tip=(0.04, 0, 0.11), quat=ID):
    """Hand with every joint sharing the orientation ``quat`` (x, y, z, w)."""
    q = np.asarray(quat, float)
    joints = dict(palm=palm, index_tip=index_tip, index_metacarpal=index_metacarpal,
                  thumb_tip=thumb_tip, middle_tip=middle_tip)
    return {k: JointPose(np.asarray(v, float), q) for k, v in joints.items()}


def pointing(origin, direction, quat=ID):
    """Hand whose ray starts at ``origin`` and runs along ``direction``."""
    o = np.asarray(origin, float)
    d = np.asarray(direction, float) / np.linalg.norm(direction)
    return hand(palm=o - 0.05 * d, index_metacarpal=o, index_tip=o + 0.07 * d, quat=quat)


def segment_of(frames):
    frames = tuple(frames)
    return GestureSegment(frames, TimeInterval(frames[0].t_ms, frames[-1].t_ms))


def frames_at(hands_right=None, hands_left=None, dt=17):
    n = len(hands_right if hands_right is not None else hands_left)
    out = []
    for i in range(n):
        out.append(HandFrame(i * dt,
                             left=None if hands_left is None else hands_left[i],
                             right=None if hands_right is None else hands_right[i]))
    return out


def words(text, start=0, dur=300, gap=50):
    out, t = [], start
    for w in text.split():
        out.append(WordSpan(w, t, t + dur))
        t += dur + gap
    return Transcript(tuple(out))


def random_rotation(rng):
    return Rotation.from_quat(rng.standard_normal(4))


def make_trace(frames):
    return GestureTrace(tuple(frames))


def rigid_hand(h, rot, shift):
    if h is None:
        return None
    return {k: JointPose(rot.apply(j.position) + shift, (rot * j.rotation).as_quat()) for k, j in h.items()}


def rigid_trace(trace, rot, shift):
    """Every joint of every frame carried by x -> rot(x) + shift."""
    return GestureTrace(tuple(HandFrame(f.t_ms, rigid_hand(f.left, rot, shift), rigid_hand(f.right, rot, shift))
                              for f in trace.frames))


def rigid_scene(scene, rot, shift):
    return Scene([replace(o, position=rot.apply(o.position) + shift, rotation=rot * o.rotation)
                  for o in scene])


def whole(trace):
    return segment(trace, TimeInterval(trace.frames[0].t_ms, trace.frames[-1].t_ms))
