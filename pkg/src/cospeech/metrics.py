"""Accuracy measures for the six evaluation tasks.

Undefined ratios (zero target length, empty prediction or truth set) come
back as None so a table can show them as such instead of a fake number.
"""

from __future__ import annotations

import math
import statistics

import numpy as np
from scipy.spatial.transform import Rotation

from .fitting import DEFAULT_RESAMPLE, dtw_similarity
from .geometry import as_vec3, geodesic_angle, vector_angle


def metric_position_error(p, target) -> float:
    """Euclidean distance in meters."""
    return float(np.linalg.norm(as_vec3(p) - as_vec3(target)))


def metric_rotation_diff(r: Rotation, target: Rotation) -> float:
    """Smallest rotation angle between two orientations, in degrees."""
    return math.degrees(geodesic_angle(r, target))


def metric_direction_diff(d, target) -> float:
    """Angle between two direction vectors, in degrees."""
    return math.degrees(vector_angle(as_vec3(d), as_vec3(target)))


def metric_size_pct(length: float, target: float) -> float | None:
    if target == 0:
        return None
    return 100.0 * abs(float(length) - float(target)) / abs(float(target))


def metric_selection(selected, truth) -> tuple[float | None, float | None]:
    """(precision, recall) in percent over object-name sets."""
    sel, ref = set(selected), set(truth)
    tp = len(sel & ref)
    precision = 100.0 * tp / len(sel) if sel else None
    recall = 100.0 * tp / len(ref) if ref else None
    return precision, recall


def metric_path(path, target, n: int = DEFAULT_RESAMPLE) -> float:
    """DTW similarity in percent, scaled by the target's bounding box."""
    return dtw_similarity(path, target, n)


def summarize(values) -> tuple[float, float] | None:
    """Mean and sample standard deviation, ignoring undefined entries."""
    vals = [float(v) for v in values if v is not None and not math.isnan(v)]
    if not vals:
        return None
    sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return statistics.fmean(vals), sd
