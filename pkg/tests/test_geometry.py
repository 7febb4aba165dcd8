import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridguide.errors import InvalidInputError
from gridguide.geometry import (
    PlanarArcCurve,
    Polyline3,
    TimedPath,
    involute,
    max_deviation,
    point_segment_distance,
    polyline_hausdorff,
    resample_arclength,
    segment_distances,
)
from gridguide.models import circle_arc_curve


def straight_path(n=100):
    t = np.linspace(0.0, 1.0, n)
    return TimedPath(np.column_stack([t, np.zeros(n), np.zeros(n)]), t)


def arc_path(angle, n=1000, radius=1.0):
    t = np.linspace(0.0, 1.0, n)
    phi = angle * t
    pts = np.column_stack([radius * np.cos(phi), radius * np.sin(phi), np.zeros(n)])
    return TimedPath(pts, t)


class TestPointSegmentDistance:
    def test_perpendicular_foot_inside(self):
        assert point_segment_distance((0, 1, 0), (0, 0, 0), (1, 0, 0)) == pytest.approx(1.0)

    def test_point_on_segment(self):
        assert point_segment_distance((0.5, 0, 0), (0, 0, 0), (1, 0, 0)) == pytest.approx(0.0)

    def test_clamped_to_endpoint(self):
        d = point_segment_distance((2, 1, 0), (0, 0, 0), (1, 0, 0))
        assert d == pytest.approx(np.sqrt(2.0))

    def test_degenerate_segment_rejected(self):
        with pytest.raises(InvalidInputError):
            point_segment_distance((1, 1, 1), (0, 0, 0), (0, 0, 0))

    @given(
        st.lists(st.floats(-10, 10), min_size=9, max_size=9).filter(
            lambda v: np.linalg.norm(np.subtract(v[3:6], v[6:9])) > 1e-6
        )
    )
    @settings(max_examples=100, deadline=None)
    def test_symmetry(self, vals):
        p, a, b = vals[0:3], vals[3:6], vals[6:9]
        assert point_segment_distance(p, a, b) == pytest.approx(
            point_segment_distance(p, b, a), abs=1e-12
        )

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(20, 3))
        a, b = np.array([0.5, -1, 2.0]), np.array([1.5, 1, -0.5])
        batch = segment_distances(pts, a, b)
        for p, d in zip(pts, batch):
            assert d == pytest.approx(point_segment_distance(p, a, b), abs=1e-12)


class TestMaxDeviation:
    def test_straight_path_zero(self):
        path = straight_path()
        for knots in ([0.5], [0.2, 0.7], [0.1, 0.5, 0.9]):
            d, dmax = max_deviation(path, knots)
            assert dmax == pytest.approx(0.0, abs=1e-12)
            assert len(d) == len(knots) + 1

    def test_semicircle_single_chord(self):
        # the sagitta of a semicircle equals its radius
        _, dmax = max_deviation(arc_path(np.pi), [])
        assert dmax == pytest.approx(1.0, abs=1e-4)

    def test_quarter_circle_single_chord(self):
        # frozen from the dense-sampling oracle; analytic sagitta R(1-cos(pi/4))
        _, dmax = max_deviation(arc_path(np.pi / 2), [])
        assert dmax == pytest.approx(0.2928932, abs=1e-4)

    def test_knot_outside_range_rejected(self):
        with pytest.raises(InvalidInputError):
            max_deviation(straight_path(), [1.5])
        with pytest.raises(InvalidInputError):
            max_deviation(straight_path(), [-0.1])

    @given(st.lists(st.floats(0.05, 0.95), min_size=1, max_size=5, unique=True))
    @settings(max_examples=50, deadline=None)
    def test_refinement_never_hurts(self, extra):
        path = arc_path(2.0)
        base = np.array([0.3, 0.6])
        refined = np.unique(np.concatenate([base, extra]))
        _, d_base = max_deviation(path, base)
        _, d_ref = max_deviation(path, refined)
        assert d_ref <= d_base + 1e-12

    def test_zero_iff_on_polyline(self):
        # samples off the chord make the deviation strictly positive
        path = arc_path(1.0)
        _, dmax = max_deviation(path, [0.5])
        assert dmax > 0.0


class TestInvolute:
    def test_straight_curve_stationary_point(self):
        line = PlanarArcCurve(np.column_stack([np.linspace(0, 2, 50), np.zeros(50)]))
        path = involute(line, 1.5, 100)
        target = np.array([1.5, 0.0, 0.0])
        assert np.allclose(path.vertices, target, atol=1e-9)

    def test_unit_circle_endpoints(self):
        circ = circle_arc_curve(1.0, np.pi / 2 + 0.2)
        path = involute(circ, np.pi / 2, 400)
        assert np.allclose(path.vertices[0], [1.0, np.pi / 2, 0.0], atol=1e-5)
        assert np.allclose(path.vertices[-1], [0.0, 1.0, 0.0], atol=1e-5)

    def test_unit_circle_against_analytic_formula(self):
        # c(u) = (cos u + (s0-u) (-sin u), sin u + (s0-u) cos u)
        s0 = np.pi / 2
        circ = circle_arc_curve(1.0, np.pi / 2 + 0.2)
        path = involute(circ, s0, 200)
        u = path.times * s0
        expected = np.column_stack(
            [
                np.cos(u) - (s0 - u) * np.sin(u),
                np.sin(u) + (s0 - u) * np.cos(u),
                np.zeros_like(u),
            ]
        )
        assert np.max(np.linalg.norm(path.vertices - expected, axis=1)) < 1e-5

    def test_free_segment_inextensible(self):
        circ = circle_arc_curve(0.7, 2.0)
        s0 = 1.2
        path = involute(circ, s0, 300)
        u = path.times * s0
        free = np.linalg.norm(path.vertices - circ.point(u), axis=1)
        assert np.max(np.abs(free - (s0 - u))) < 1e-9

    def test_monotone_distance_to_circle_center(self):
        circ = circle_arc_curve(1.0, 2.5)
        path = involute(circ, 2.0, 500)
        radial = np.linalg.norm(path.vertices, axis=1)
        # wrapping up: distance to the center decreases monotonically
        assert np.all(np.diff(radial) < 1e-12)

    def test_s0_beyond_curve_rejected(self):
        circ = circle_arc_curve(1.0, 1.0)
        with pytest.raises(InvalidInputError):
            involute(circ, 2.0, 50)


class TestResample:
    def test_two_vertex_midpoint(self):
        out = resample_arclength(Polyline3([[0, 0, 0], [2, 0, 0]]), 3)
        assert np.allclose(out.vertices[1], [1, 0, 0])

    def test_count_two_keeps_endpoints(self):
        poly = Polyline3([[0, 0, 0], [1, 1, 0], [2, 0, 0]])
        out = resample_arclength(poly, 2)
        assert np.allclose(out.vertices, [[0, 0, 0], [2, 0, 0]])

    def test_circle_spacing_uniform(self):
        phi = np.linspace(0, np.pi, 500) ** 1.3 / np.pi**0.3  # deliberately non-uniform
        poly = Polyline3(np.column_stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)]))
        out = resample_arclength(poly, 100)
        seg = out.edge_lengths
        assert np.max(np.abs(seg - seg.mean())) / seg.mean() < 1e-3
        # analytic arc length of the semicircle
        assert out.length == pytest.approx(np.pi, rel=1e-3)


class TestTypes:
    def test_polyline_needs_two_vertices(self):
        with pytest.raises(InvalidInputError):
            Polyline3([[0, 0, 0]])

    def test_polyline_rejects_duplicates(self):
        with pytest.raises(InvalidInputError):
            Polyline3([[0, 0, 0], [0, 0, 0], [1, 0, 0]])

    def test_timed_path_count_mismatch(self):
        with pytest.raises(InvalidInputError):
            TimedPath([[0, 0, 0], [1, 0, 0]], [0.0, 0.5, 1.0])

    def test_timed_path_times_monotone(self):
        with pytest.raises(InvalidInputError):
            TimedPath([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [0.0, 0.6, 0.5])

    def test_arc_curve_resampled_uniformly(self):
        curve = circle_arc_curve(2.0, 1.5, samples=300)
        seg = np.linalg.norm(np.diff(curve.samples, axis=0), axis=1)
        assert np.max(np.abs(seg - seg.mean())) / seg.mean() < 1e-3
        assert curve.length == pytest.approx(3.0, rel=1e-4)


def test_hausdorff_simple():
    a = [[0, 0, 0], [1, 0, 0]]
    b = [[0, 0.5, 0], [1, 0.5, 0]]
    assert polyline_hausdorff(a, b) == pytest.approx(0.5)
    assert polyline_hausdorff(a, a) == pytest.approx(0.0)
