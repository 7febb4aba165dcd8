"""Bundled synthetic models: a single wrapped strip and a desk-scale dome.

Building-scale reference structures are not available, so these builders
provide reproducible stand-ins: a single elastic strip anchored to wrap a
circular arc (whose ideal traced path is an analytic involute), a small
two-family grid over a spherical cap for end-to-end pipeline runs, and a
purely geometric dome trace set for optimizer benchmarks.
"""
from __future__ import annotations

import numpy as np

from .collapse import TraceSet
from .geometry import PlanarArcCurve, Polyline3, TimedPath
from .rod import Anchor, CrossSection, GridModel, Member, SlidingJoint

__all__ = [
    "default_cross_section",
    "circle_arc_curve",
    "wrap_strip_grid",
    "dome_grid",
    "dome_traceset",
]


def default_cross_section(
    width: float = 0.03,
    thickness: float = 0.002,
    youngs_modulus: float = 1.0e10,
    shear_modulus: float = 0.7e9,
) -> CrossSection:
    """Plywood-like lamella section: 30 x 2 mm, E = 10 GPa."""
    return CrossSection(width, thickness, youngs_modulus, shear_modulus)


def circle_arc_curve(radius: float, angle: float, samples: int = 4096) -> PlanarArcCurve:
    """Circular arc of given radius and opening angle in the xy-plane."""
    phi = np.linspace(0.0, angle, samples)
    pts = np.column_stack([radius * np.cos(phi), radius * np.sin(phi), np.zeros(samples)])
    return PlanarArcCurve(pts)


def wrap_strip_grid(
    length: float = 1.0,
    radius: float = 2.0,
    n_vertices: int = 21,
    clamp_weight: float = 1e4,
    cross_section: CrossSection | None = None,
) -> GridModel:
    """A single strip anchored to wrap a circular arc of the given radius.

    The rest centerline is straight along +x; the deployed state lies on the
    arc, every vertex anchored to its wrapped position. The two vertices at
    arc length 0 carry a clamp-strength anchor weight, so lifting the global
    anchor weight peels the strip off the arc from the far end only: the
    free endpoint ideally traces the involute of the arc.
    """
    cs = cross_section or default_cross_section()
    s = np.linspace(0.0, length, n_vertices)
    rest = Polyline3(np.column_stack([s, np.zeros_like(s), np.zeros_like(s)]))
    # width direction out of the bending plane: in-plane curvature is flatwise
    member = Member(id="strip", rest_centerline=rest, cross_section=cs,
                    width_dir=np.array([0.0, 0.0, 1.0]))
    phi = s / radius
    deployed = np.column_stack(
        [radius * np.cos(phi), radius * np.sin(phi), np.zeros_like(phi)]
    )
    anchors = [
        Anchor(
            member="strip",
            vertex=i,
            target=deployed[i],
            weight=clamp_weight if i < 2 else 1.0,
        )
        for i in range(n_vertices)
    ]
    return GridModel(
        members=[member],
        joints=[],
        anchors=anchors,
        deployed_positions={"strip": deployed},
    )


def _cap_lift(xy: np.ndarray, curvature: float) -> np.ndarray:
    """Map flat points onto a spherical cap, preserving radial arc length.

    A point at planar distance d from the origin moves to geodesic distance
    d from the cap apex on a sphere of the given curvature.
    """
    d = np.linalg.norm(xy[:, :2], axis=1)
    if curvature <= 0.0:
        return np.column_stack([xy[:, 0], xy[:, 1], np.zeros(len(xy))])
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(d > 0.0, np.sin(curvature * d) / (curvature * d), 1.0)
    z = (1.0 - np.cos(curvature * d)) / curvature
    return np.column_stack([xy[:, 0] * scale, xy[:, 1] * scale, z])


def dome_grid(
    half_span: float = 0.5,
    curvature: float = 1.2,
    n_lines: int = 5,
    n_vertices: int = 11,
    hole_half_length: float = 0.05,
    cross_section: CrossSection | None = None,
) -> GridModel:
    """Two crossing families of n_lines members each over a spherical cap.

    Members run along the lifted grid lines x = const and y = const of the
    square [-half_span, half_span]^2; rest centerlines are their straight
    developments. Joints sit at the crossings, anchors hold the member
    endpoints at the deployed boundary.
    """
    cs = cross_section or default_cross_section()
    coords = np.linspace(-half_span, half_span, n_lines)
    members, deployed, joints, anchors = [], {}, [], {}
    span = np.linspace(-half_span, half_span, n_vertices)

    def build_family(axis: str):
        for i, c in enumerate(coords):
            if axis == "x":
                xy = np.column_stack([span, np.full_like(span, c)])
                mid = f"a{i}"
            else:
                xy = np.column_stack([np.full_like(span, c), span])
                mid = f"b{i}"
            pts = _cap_lift(xy, curvature)
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            cum = np.concatenate([[0.0], np.cumsum(seg)])
            rest = Polyline3(
                np.column_stack([cum, np.zeros_like(cum), np.zeros_like(cum)])
            )
            members.append(
                Member(id=mid, rest_centerline=rest, cross_section=cs,
                       width_dir=np.array([0.0, 0.0, 1.0]))
            )
            deployed[mid] = pts

    build_family("x")
    build_family("y")

    by_id = {m.id: m for m in members}

    def arc_of_crossing(mid: str, coord: float) -> float:
        # arc length along the member's deployed curve to parameter `coord`
        pts = deployed[mid]
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return float(np.interp(coord, span, cum))

    for i, ca in enumerate(coords):  # member a_i lies at y = ca
        for j, cb in enumerate(coords):  # member b_j lies at x = cb
            ma, mb = f"a{i}", f"b{j}"
            sa = arc_of_crossing(ma, cb)
            sb = arc_of_crossing(mb, ca)
            la, lb = by_id[ma].length, by_id[mb].length
            h = hole_half_length
            joints.append(
                SlidingJoint(
                    member_a=ma,
                    member_b=mb,
                    hole_a=(max(sa - h, 0.0), min(sa + h, la)),
                    hole_b=(max(sb - h, 0.0), min(sb + h, lb)),
                    t1=0.5,
                    t2=0.5,
                )
            )

    anchor_list = []
    for m in members:
        pts = deployed[m.id]
        for vidx in (0, len(pts) - 1):
            anchor_list.append(Anchor(member=m.id, vertex=vidx, target=pts[vidx]))

    return GridModel(
        members=members, joints=joints, anchors=anchor_list, deployed_positions=deployed
    )


def dome_traceset(
    m: int = 10,
    samples: int = 1000,
    half_span: float = 0.5,
    curvature: float = 1.2,
    seed: int = 0,
) -> TraceSet:
    """Synchronized deployment paths of m points on a flattening dome.

    Each traced point sits on a spherical cap whose curvature grows linearly
    with the shared time parameter (t=0 flat, t=1 fully curved); points keep
    their geodesic distance from the apex, so the paths are smooth, curved,
    and length-preserving along the surface.
    """
    rng = np.random.default_rng(seed)
    radii = rng.uniform(0.35 * half_span, 1.1 * half_span, m)
    angles = rng.uniform(0.0, 2.0 * np.pi, m)
    xy = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    times = np.linspace(0.0, 1.0, samples)
    paths = []
    for j in range(m):
        pts = np.array([_cap_lift(xy[j : j + 1], curvature * t)[0] for t in times])
        paths.append(TimedPath(pts, times))
    node_refs = [("synthetic", j) for j in range(m)]
    return TraceSet(
        paths=paths,
        node_refs=node_refs,
        provenance={"generator": "dome_traceset", "seed": seed, "m": m, "samples": samples},
    )
