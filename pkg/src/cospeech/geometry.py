"""Vector and rotation helpers.

Rotations are :class:`scipy.spatial.transform.Rotation` instances. Euler
angles use the engine-style convention: degrees, serialized as ``[x, y, z]``,
composed as ``R = Ry @ Rx @ Rz`` (roll about z first, then pitch, then yaw).
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.spatial.transform import Rotation

FORWARD = np.array([0.0, 0.0, 1.0])
UP = np.array([0.0, 1.0, 0.0])

_EULER_SEQ = "YXZ"


def as_vec3(values, name="vector") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components")
    return arr


def normalize(v, eps=1e-12) -> np.ndarray | None:
    """Unit vector along ``v``, or None when ``v`` is (numerically) zero."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n <= eps:
        return None
    return v / n


def euler_to_rotation(xyz_deg) -> Rotation:
    x, y, z = as_vec3(xyz_deg, "rotation")
    return Rotation.from_euler(_EULER_SEQ, [y, x, z], degrees=True)


def rotation_to_euler(rot: Rotation) -> np.ndarray:
    with warnings.catch_warnings():
        # gimbal lock: scipy picks one of the equivalent triples
        warnings.simplefilter("ignore", UserWarning)
        y, x, z = rot.as_euler(_EULER_SEQ, degrees=True)
    return np.array([x, y, z])


def quat_xyzw(values) -> Rotation:
    q = np.asarray(values, dtype=float)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise ValueError("quaternion must be 4 finite numbers (x, y, z, w)")
    if np.linalg.norm(q) < 1e-12:
        raise ValueError("quaternion has zero norm")
    return Rotation.from_quat(q)


def minimal_arc(a, b) -> Rotation:
    """Shortest rotation taking direction ``a`` onto direction ``b``."""
    a = normalize(a)
    b = normalize(b)
    if a is None or b is None:
        raise ValueError("minimal_arc needs two non-zero vectors")
    cross = np.cross(a, b)
    s = float(np.linalg.norm(cross))
    c = float(np.dot(a, b))
    if s == 0.0:
        if c > 0:
            return Rotation.identity()
        # antiparallel: any axis orthogonal to a works; pick the most stable one
        helper = np.eye(3)[int(np.argmin(np.abs(a)))]
        return Rotation.from_rotvec(normalize(np.cross(a, helper)) * math.pi)
    return Rotation.from_rotvec(cross / s * math.atan2(s, c))


def rotation_angle(rot: Rotation) -> float:
    """Geodesic angle of a rotation in radians, in [0, pi]."""
    q = rot.as_quat()
    return 2.0 * math.atan2(float(np.linalg.norm(q[:3])), abs(float(q[3])))


def geodesic_angle(r1: Rotation, r2: Rotation) -> float:
    """Least rotation (radians) needed to turn ``r1`` into ``r2``.

    Equal to ``2*acos(|<q1, q2>|)`` but evaluated with atan2 so that nearly
    identical rotations keep full precision.
    """
    return rotation_angle(r1.inv() * r2)


def vector_angle(a, b) -> float:
    """Angle between two vectors in radians (atan2 form, stable near 0 and pi)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(np.dot(a, b)))


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal vectors spanning the plane orthogonal to ``normal``."""
    n = normalize(normal)
    helper = np.eye(3)[int(np.argmin(np.abs(n)))]
    e1 = normalize(np.cross(n, helper))
    e2 = np.cross(n, e1)
    return e1, e2
