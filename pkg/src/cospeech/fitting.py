"""Least-squares shape fits and DTW path similarity.

The fitters follow the scikit-learn estimator protocol: hyper-parameters go
to ``__init__``, ``fit`` returns ``self`` and learned values end with an
underscore. Thin functional wrappers (``fit_circle_2d`` and friends) return
plain tuples.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DegenerateInput, EmptyPath, NoConvergence
from .geometry import normalize
from .validation import check_is_fitted, check_points, check_xy

SHAPE_TYPES = ("line", "circle", "sine")
DEFAULT_RESAMPLE = 64


class CircleFit(BaseEstimator):
    """Algebraic (linearized) circle fit in 2-D.

    Solves ``u^2 + v^2 = a*u + b*v + c`` in the least-squares sense; the
    center is ``(a/2, b/2)`` and the radius ``sqrt(c + |center|^2)``.
    Points are centered first to keep the normal equations well scaled.
    """

    def __init__(self, rcond=1e-10):
        self.rcond = rcond

    def fit(self, X, y=None):
        X = check_points(X, 2, min_samples=3)
        mean = X.mean(axis=0)
        P = X - mean
        sv = np.linalg.svd(P, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] <= self.rcond * sv[0]:
            raise DegenerateInput("circle fit needs points that are not collinear")
        A = np.column_stack([P, np.ones(len(P))])
        rhs = (P**2).sum(axis=1)
        (a, b, c), *_ = np.linalg.lstsq(A, rhs, rcond=None)
        local = np.array([a / 2.0, b / 2.0])
        self.center_ = mean + local
        self.radius_ = float(math.sqrt(max(c + local @ local, 0.0)))
        return self

    def residuals(self, X):
        check_is_fitted(self, "center_")
        X = check_points(X, 2)
        return np.linalg.norm(X - self.center_, axis=1) - self.radius_

    def project(self, X):
        """Closest points on the fitted circle."""
        check_is_fitted(self, "center_")
        X = check_points(X, 2)
        d = X - self.center_
        n = np.linalg.norm(d, axis=1, keepdims=True)
        n[n == 0] = 1.0
        return self.center_ + self.radius_ * d / n


class LineFit(BaseEstimator):
    """Total-least-squares line: the first principal axis through the centroid.

    ``direction_`` points from the first sample towards the last one.
    """

    def __init__(self, tol=1e-12):
        self.tol = tol

    def fit(self, X, y=None):
        X = check_points(X, None, min_samples=2)
        centroid = X.mean(axis=0)
        P = X - centroid
        _, sv, vt = np.linalg.svd(P, full_matrices=False)
        if sv[0] <= self.tol:
            raise DegenerateInput("line fit needs at least two distinct points")
        direction = vt[0]
        orient = float((X[-1] - X[0]) @ direction)
        if orient < 0 or (orient == 0 and direction[np.argmax(np.abs(direction))] < 0):
            direction = -direction
        proj = P @ direction
        self.point_ = centroid
        self.direction_ = direction
        self.length_ = float(proj.max() - proj.min())
        self.extent_ = (float(proj.min()), float(proj.max()))
        return self

    def project(self, X):
        check_is_fitted(self, "direction_")
        X = check_points(X, len(self.point_))
        return self.point_ + np.outer((X - self.point_) @ self.direction_, self.direction_)


class SineFit(BaseEstimator):
    """Nonlinear least-squares fit of ``v = A*sin(2*pi*u/T + phase) + offset``.

    A coarse grid over the period, each with a linear solve for the
    in-phase/quadrature/offset terms, picks the starting point. Damped
    Gauss-Newton (Levenberg) then refines all four parameters; a step is
    kept only if it lowers the objective, so ``objective_history_`` is
    non-increasing.
    """

    def __init__(self, n_grid=512, max_iter=100, tol=1e-10, min_points=8):
        self.n_grid = n_grid
        self.max_iter = max_iter
        self.tol = tol
        self.min_points = min_points

    @staticmethod
    def _linear_solve(u, v, omega):
        A = np.column_stack([np.sin(omega * u), np.cos(omega * u), np.ones_like(u)])
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        r = v - A @ coef
        return coef, float(r @ r)

    def period_grid(self, u):
        us = np.unique(u)
        span = float(us[-1] - us[0])
        if span <= 0:
            raise DegenerateInput("sine fit needs samples at distinct abscissae")
        step = float(np.median(np.diff(us)))
        return np.geomspace(max(2.0 * step, span / 200.0), 4.0 * span, self.n_grid)

    def fit(self, u, v):
        u, v = check_xy(u, v, min_samples=self.min_points)
        grid = self.period_grid(u)
        best = None
        for T in grid:
            coef, obj = self._linear_solve(u, v, 2 * math.pi / T)
            if best is None or obj < best[0]:
                best = (obj, coef, 2 * math.pi / T)
        obj, (a, b, c), omega = best
        theta = np.array([a, b, c, omega])
        history = [obj]
        lam = 1e-3
        converged = obj == 0.0
        n_iter = 0
        while not converged and n_iter < self.max_iter:
            n_iter += 1
            a, b, c, omega = theta
            s, co = np.sin(omega * u), np.cos(omega * u)
            r = v - (a * s + b * co + c)
            J = np.column_stack([s, co, np.ones_like(u), u * (a * co - b * s)])
            scale = np.sqrt(np.maximum((J**2).sum(axis=0), 1e-30))
            aug = np.vstack([J, math.sqrt(lam) * np.diag(scale)])
            rhs = np.concatenate([r, np.zeros(4)])
            delta, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
            trial = theta + delta
            ta, tb, tc, tw = trial
            rt = v - (ta * np.sin(tw * u) + tb * np.cos(tw * u) + tc)
            trial_obj = float(rt @ rt)
            if trial_obj < obj:
                theta, obj = trial, trial_obj
                history.append(obj)
                lam = max(lam / 10.0, 1e-12)
                if np.linalg.norm(delta) < self.tol or obj == 0.0:
                    converged = True
            else:
                lam *= 10.0
                if np.linalg.norm(delta) < self.tol or lam > 1e12:
                    # no descent left at this resolution: a stationary point
                    converged = True
        if not converged:
            raise NoConvergence(f"sine fit did not converge in {self.max_iter} iterations")
        a, b, c, omega = theta
        if omega < 0:
            a, omega = -a, -omega
        self.amplitude_ = float(math.hypot(a, b))
        self.period_ = float(2 * math.pi / omega)
        self.phase_ = float(math.atan2(b, a))
        self.offset_ = float(c)
        self.objective_ = obj
        self.objective_history_ = history
        self.n_iter_ = n_iter
        return self

    def predict(self, u):
        check_is_fitted(self, "period_")
        u = np.asarray(u, dtype=float)
        return self.amplitude_ * np.sin(2 * math.pi * u / self.period_ + self.phase_) + self.offset_


def fit_circle_2d(points):
    est = CircleFit().fit(points)
    return est.center_, est.radius_


def fit_line(points):
    est = LineFit().fit(points)
    return est.point_, est.direction_, est.length_


def fit_sine(u, v=None):
    """Return ``(amplitude, period, phase, offset)``.

    Accepts either separate ``u`` and ``v`` arrays or a single (n, 2) array.
    """
    if v is None:
        pts = check_points(u, 2)
        u, v = pts[:, 0], pts[:, 1]
    est = SineFit().fit(u, v)
    return est.amplitude_, est.period_, est.phase_, est.offset_


# ---------------------------------------------------------------- 3-D shapes


def plane_frame(points):
    """Centroid and two in-plane axes of the best-fit plane of 3-D points."""
    X = check_points(points, 3, min_samples=3)
    centroid = X.mean(axis=0)
    _, sv, vt = np.linalg.svd(X - centroid, full_matrices=False)
    return centroid, vt[0], vt[1]


def fit_shape(points, shape_type: str) -> dict:
    """Fit a line, circle or sine to a 3-D stroke.

    Circles and sines are fitted in the stroke's best-fit plane. The result
    holds the fitted parameters and ``polyline``: the stroke samples snapped
    onto the fitted shape, in stroke order.
    """
    if shape_type not in SHAPE_TYPES:
        raise ValueError(f"unknown shape type {shape_type!r}; expected one of {SHAPE_TYPES}")
    X = check_points(points, 3, min_samples=2)
    if shape_type == "line":
        est = LineFit().fit(X)
        lo, hi = est.extent_
        return {
            "shape_type": "line",
            "start": est.point_ + lo * est.direction_,
            "end": est.point_ + hi * est.direction_,
            "direction": est.direction_,
            "length": est.length_,
            "polyline": est.project(X),
        }
    centroid, e1, e2 = plane_frame(X)
    if shape_type == "sine":
        # abscissa along the stroke's chord, which is the wave's travel axis
        normal = np.cross(e1, e2)
        chord = X[-1] - X[0]
        axis = normalize(chord - (chord @ normal) * normal)
        if axis is not None:
            e1 = axis
            e2 = np.cross(normal, e1)
    rel = X - centroid
    uv = np.column_stack([rel @ e1, rel @ e2])
    if shape_type == "circle":
        est = CircleFit().fit(uv)
        snapped = est.project(uv)
        center = centroid + est.center_[0] * e1 + est.center_[1] * e2
        out = {"shape_type": "circle", "center": center, "radius": est.radius_,
               "normal": np.cross(e1, e2)}
    else:
        est = SineFit().fit(uv[:, 0], uv[:, 1])
        snapped = np.column_stack([uv[:, 0], est.predict(uv[:, 0])])
        out = {"shape_type": "sine", "amplitude": est.amplitude_, "period": est.period_,
               "phase": est.phase_, "offset": est.offset_,
               "length": float(uv[:, 0].max() - uv[:, 0].min()), "axis": e1}
    out["polyline"] = centroid + np.outer(snapped[:, 0], e1) + np.outer(snapped[:, 1], e2)
    return out


# ---------------------------------------------------------------- DTW


def resample_polyline(points, n: int = DEFAULT_RESAMPLE) -> np.ndarray:
    """``n`` points spaced uniformly by arc length along a polyline."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) == 0:
        raise EmptyPath("cannot resample an empty polyline")
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0.0:
        return np.repeat(P[:1], n, axis=0)
    targets = np.linspace(0.0, cum[-1], n)
    return np.column_stack([np.interp(targets, cum, P[:, k]) for k in range(P.shape[1])])


def dtw(a, b):
    """Classic DTW with Euclidean point cost.

    Returns ``(total_cost, path)`` where ``path`` is the list of aligned index
    pairs; ties in the traceback prefer the diagonal move.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = len(a), len(b)
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        row_cost = cost[i - 1]
        prev = acc[i - 1]
        cur = acc[i]
        for j in range(1, m + 1):
            cur[j] = row_cost[j - 1] + min(prev[j - 1], prev[j], cur[j - 1])
    path = [(n - 1, m - 1)]
    i, j = n, m
    while (i, j) != (1, 1):
        options = ((acc[i - 1, j - 1], i - 1, j - 1), (acc[i - 1, j], i - 1, j),
                   (acc[i, j - 1], i, j - 1))
        _, i, j = min(options, key=lambda o: o[0])  # min keeps the first (diagonal) on ties
        path.append((i - 1, j - 1))
    path.reverse()
    return float(acc[n, m]), path


def similarity_from_cost(mean_cost: float, reference) -> float:
    """Map a mean DTW alignment cost to a percentage.

    The cost is normalized by the diagonal of the reference polyline's
    bounding box; 0 cost is 100 %, a diagonal-sized cost or worse is 0 %.
    """
    ref = np.asarray(reference, dtype=float)
    diag = float(np.linalg.norm(ref.max(axis=0) - ref.min(axis=0)))
    if diag == 0.0:
        return 100.0 if mean_cost == 0.0 else 0.0
    return 100.0 * max(0.0, 1.0 - mean_cost / diag)


def dtw_similarity(a, b, n: int = DEFAULT_RESAMPLE) -> float:
    """Percent similarity of polyline ``a`` to reference polyline ``b``.

    Not symmetric: the normalizing length comes from ``b``.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptyPath("dtw_similarity needs two non-empty polylines")
    ra = resample_polyline(a, n)
    rb = resample_polyline(b, n)
    total, path = dtw(ra, rb)
    return similarity_from_cost(total / len(path), rb)
