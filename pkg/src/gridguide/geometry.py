"""Polyline and curve primitives for deployment-path geometry.

Everything here is a pure function of its inputs: 3D polylines, timed
deformation paths, arc-length parameterized planar curves, involute
construction, and the deviation metric between a smooth path and its
piecewise-linear approximation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Polyline3",
    "TimedPath",
    "PlanarArcCurve",
    "point_segment_distance",
    "segment_distances",
    "max_deviation",
    "involute",
    "resample_arclength",
    "polyline_hausdorff",
]


def as_points(arr) -> np.ndarray:
    """Coerce input to an (N, 3) float64 array, padding 2D points with z=0."""
    pts = np.asarray(arr, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise InvalidInputError(f"expected an (N, 2) or (N, 3) point array, got shape {pts.shape}")
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    return pts


def _cumulative_length(pts: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


@dataclass(frozen=True)
class Polyline3:
    """An ordered 3D polyline with positive-length edges (meters)."""

    vertices: np.ndarray

    def __post_init__(self):
        pts = as_points(self.vertices)
        if len(pts) < 2:
            raise InvalidInputError("polyline needs at least 2 vertices")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("polyline coordinates must be finite")
        if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) <= 0.0):
            raise InvalidInputError("consecutive polyline vertices must be distinct")
        object.__setattr__(self, "vertices", pts)

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    @property
    def length(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def cumulative_lengths(self) -> np.ndarray:
        return _cumulative_length(self.vertices)


@dataclass(frozen=True)
class TimedPath:
    """A sampled deformation path c(t), t in [0, 1] (t=0: collapsed rest state)."""

    vertices: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        pts = as_points(self.vertices)
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) != len(pts):
            raise InvalidInputError("vertex and time sample counts must match")
        if len(t) < 2:
            raise InvalidInputError("timed path needs at least 2 samples")
        if np.any(np.diff(t) <= 0.0):
            raise InvalidInputError("time samples must be strictly increasing")
        if abs(t[0]) > 1e-9 or abs(t[-1] - 1.0) > 1e-9:
            raise InvalidInputError("time samples must start at 0 and end at 1")
        t = t.copy()
        t[0], t[-1] = 0.0, 1.0
        object.__setattr__(self, "vertices", pts)
        object.__setattr__(self, "times", t)

    def at(self, t) -> np.ndarray:
        """Linearly interpolate positions at time values t (scalar or array)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise InvalidInputError("interpolation time outside [0, 1]")
        cols = [np.interp(t, self.times, self.vertices[:, k]) for k in range(3)]
        return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class PlanarArcCurve:
    """An arc-length parameterized curve gamma(s), re-sampled uniformly.

    Construction re-samples the input points so consecutive samples are
    uniformly spaced in arc length (relative spacing error below 0.1% for
    reasonably dense, smooth inputs).
    """

    samples: np.ndarray
    length: float = field(init=False)

    RESAMPLE_COUNT = 4096

    def __post_init__(self):
        pts = as_points(self.samples)
        if len(pts) < 2:
            raise InvalidInputError("curve needs at least 2 sample points")
        cum = _cumulative_length(pts)
        total = float(cum[-1])
        if total <= 0.0:
            raise InvalidInputError("curve has zero length")
        count = max(len(pts), self.RESAMPLE_COUNT)
        s = np.linspace(0.0, total, count)
        uni = np.column_stack([np.interp(s, cum, pts[:, k]) for k in range(3)])
        object.__setattr__(self, "samples", uni)
        object.__setattr__(self, "length", total)

    @property
    def _ds(self) -> float:
        return self.length / (len(self.samples) - 1)

    def point(self, s) -> np.ndarray:
        """Position gamma(s) for arc length s (scalar or array)."""
        s = np.asarray(s, dtype=float)
        grid = np.linspace(0.0, self.length, len(self.samples))
        cols = [np.interp(s, grid, self.samples[:, k]) for k in range(3)]
        return np.stack(cols, axis=-1)

    def tangent(self, s) -> np.ndarray:
        """Unit tangent gamma'(s) via central differences on the uniform samples."""
        s = np.asarray(s, dtype=float)
        tans = np.gradient(self.samples, self._ds, axis=0, edge_order=2)
        tans /= np.linalg.norm(tans, axis=1)[:, None]
        grid = np.linspace(0.0, self.length, len(self.samples))
        cols = [np.interp(s, grid, tans[:, k]) for k in range(3)]
        out = np.stack(cols, axis=-1)
        norms = np.linalg.norm(out, axis=-1, keepdims=True)
        return out / norms


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from point p to the closed segment [a, b]."""
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    denom = float(ab @ ab)
    if denom <= 0.0:
        raise InvalidInputError("degenerate segment: endpoints coincide")
    u = np.clip((p - a) @ ab / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + u * ab)))


def segment_distances(points: np.ndarray, a, b) -> np.ndarray:
    """Distances from many points to the closed segment [a, b] (vectorized).

    Falls back to point-to-point distance when the segment is degenerate.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= 0.0:
        return np.linalg.norm(points - a, axis=1)
    u = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + u[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)


def _check_interior_knots(knots) -> np.ndarray:
    t = np.atleast_1d(np.asarray(knots, dtype=float))
    if t.ndim != 1:
        raise InvalidInputError("knots must be a 1D sequence")
    if t.size and (t.min() < 0.0 or t.max() > 1.0):
        raise InvalidInputError("knots must lie in [0, 1]")
    if np.any(np.diff(t) < 0.0):
        raise InvalidInputError("knots must be sorted ascending")
    return t


def max_deviation(path: TimedPath, knots) -> tuple[np.ndarray, float]:
    """Per-segment deviations and their maximum for a knot linearization.

    The polyline runs through the path positions interpolated at times
    {0, t_1, ..., t_n, 1}. Each path sample is assigned to the segment(s)
    whose knot interval contains its time; samples exactly at a knot count
    for both adjacent segments, which keeps the maximum conservative.
    Returns (d, d_max) with one entry of d per polyline segment.
    """
    interior = _check_interior_knots(knots)
    full = np.concatenate([[0.0], interior, [1.0]])
    verts = path.at(full)
    times = path.times
    pts = path.vertices
    d = np.zeros(len(full) - 1)
    for i in range(len(full) - 1):
        lo = np.searchsorted(times, full[i], side="left")
        hi = np.searchsorted(times, full[i + 1], side="right")
        if hi <= lo:
            continue
        d[i] = float(segment_distances(pts[lo:hi], verts[i], verts[i + 1]).max())
    return d, float(d.max()) if len(d) else 0.0


def involute(curve: PlanarArcCurve, s0: float, samples: int) -> TimedPath:
    """Trajectory of the material point at arc length s0 of a straight element
    progressively wrapped onto the curve.

    c(u) = gamma(u) + (s0 - u) * gamma'(u) for u in [0, s0], with time t = u / s0.
    The free part of the element stays straight and inextensible, so
    |c(u) - gamma(u)| = s0 - u exactly.
    """
    if not (0.0 < s0 <= curve.length * (1.0 + 1e-12)):
        raise InvalidInputError(f"s0 must satisfy 0 < s0 <= curve length ({curve.length:g})")
    if samples < 2:
        raise InvalidInputError("need at least 2 samples")
    s0 = min(float(s0), curve.length)
    u = np.linspace(0.0, s0, samples)
    pts = curve.point(u) + (s0 - u)[:, None] * curve.tangent(u)
    return TimedPath(pts, u / s0)


def resample_arclength(polyline: Polyline3, count: int) -> Polyline3:
    """Re-sample a polyline to `count` uniformly arc-length-spaced vertices.

    Endpoints are preserved exactly.
    """
    if count < 2:
        raise InvalidInputError("count must be >= 2")
    pts = polyline.vertices
    cum = polyline.cumulative_lengths
    s = np.linspace(0.0, cum[-1], count)
    out = np.column_stack([np.interp(s, cum, pts[:, k]) for k in range(3)])
    out[0], out[-1] = pts[0], pts[-1]
    return Polyline3(out)


def polyline_hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two polylines (vertex-to-segment)."""
    a_pts, b_pts = as_points(a), as_points(b)

    def directed(p, q):
        worst = 0.0
        seg_a = q[:-1]
        seg_ab = q[1:] - q[:-1]
        denom = np.einsum("ij,ij->i", seg_ab, seg_ab)
        safe = np.where(denom > 0.0, denom, 1.0)
        for pt in p:
            u = np.clip(np.einsum("ij,ij->i", pt - seg_a, seg_ab) / safe, 0.0, 1.0)
            proj = seg_a + u[:, None] * seg_ab
            worst = max(worst, float(np.linalg.norm(pt - proj, axis=1).min()))
        return worst

    return max(directed(a_pts, b_pts), directed(b_pts, a_pts))
