import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railprox.errors import GeometryError, ProjectionError
from railprox.geo import (EARTH_RADIUS_M, GeoPoint, PlanarPoint, haversine, point_to_polyline_distance,
                          principal_bearing, project_local, unproject_local)
from railprox.ingest import RailLine



def chord_distance(a, b):
    """Independent great-circle oracle: chord length between unit vectors."""
    def unit(p):
        la, lo = math.radians(p.lat), math.radians(p.lon)
        return (math.cos(la) * math.cos(lo), math.cos(la) * math.sin(lo), math.sin(la))
    u, v = unit(a), unit(b)
    chord = math.sqrt(sum((x - y) ** 2 for x, y in zip(u, v)))
    return 2 * EARTH_RADIUS_M * math.asin(chord / 2)


def dense_oracle(p, line, samples=10_000):
    best = math.inf
    for a, b in zip(line.vertices, line.vertices[1:]):
        t = np.linspace(0.0, 1.0, samples)
        lat = a.lat + t * (b.lat - a.lat)
        lon = a.lon + t * (b.lon - a.lon)
        phi1, phi2 = math.radians(p.lat), np.radians(lat)
        h = (np.sin((phi2 - phi1) / 2) ** 2
             + math.cos(phi1) * np.cos(phi2) * np.sin(np.radians(lon - p.lon) / 2) ** 2)
        best = min(best, float(np.min(2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(h)))))
    return best


def closed_form_bearing(points):
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    a = sum((x - mx) ** 2 for x in xs) / len(xs)
    c = sum((y - my) ** 2 for y in ys) / len(ys)
    b = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / len(xs)
    theta = 0.5 * math.degrees(math.atan2(2 * b, a - c))  # from east, counter-clockwise
    return (90.0 - theta) % 180.0


metro_lat = st.floats(41.3, 42.7)
metro_lon = st.floats(-88.8, -87.3)
metro_point = st.builds(GeoPoint, metro_lat, metro_lon)

CHICAGO = GeoPoint(41.8781, -87.6298)


class TestHaversine:
    def test_identity(self):
        assert haversine(CHICAGO, CHICAGO) == 0.0

    def test_same_meridian_is_analytic(self):
        b = GeoPoint(42.0, -87.6298)
        expected = (42.0 - 41.8781) * math.pi / 180 * EARTH_RADIUS_M
        assert haversine(CHICAGO, b) == pytest.approx(expected, rel=1e-9)

    def test_evanston_matches_oracle(self):
        b = GeoPoint(42.0451, -87.6877)
        assert haversine(CHICAGO, b) == pytest.approx(chord_distance(CHICAGO, b), rel=1e-9)
        assert haversine(CHICAGO, b) == pytest.approx(19_176.74, abs=0.01)

    @given(metro_point, metro_point)
    def test_symmetric_nonnegative(self, a, b):
        assert haversine(a, b) == haversine(b, a) >= 0.0

    @given(metro_point, metro_point, metro_point)
    def test_triangle_inequality(self, a, b, c):
        assert haversine(a, c) <= (haversine(a, b) + haversine(b, c)) * (1 + 1e-9) + 1e-9

    def test_invalid_point_rejected(self):
        with pytest.raises(GeometryError):
            GeoPoint(95.0, 0.0)
        with pytest.raises(GeometryError):
            GeoPoint(0.0, float("nan"))


class TestProjection:
    def test_origin_maps_to_zero(self):
        q = project_local(CHICAGO, CHICAGO)
        assert (q.x, q.y) == (0.0, 0.0)

    def test_one_degree_north(self):
        q = project_local(GeoPoint(CHICAGO.lat + 1, CHICAGO.lon), CHICAGO)
        assert q.x == 0.0
        assert q.y == pytest.approx(EARTH_RADIUS_M * math.pi / 180, rel=1e-12)

    @given(st.floats(-1.9, 1.9), st.floats(-1.9, 1.9))
    def test_round_trip(self, dlat, dlon):
        p = GeoPoint(CHICAGO.lat + dlat, CHICAGO.lon + dlon)
        back = unproject_local(project_local(p, CHICAGO))
        assert back.lat == pytest.approx(p.lat, abs=1e-12)
        assert back.lon == pytest.approx(p.lon, abs=1e-12)

    def test_outside_window_rejected(self):
        with pytest.raises(ProjectionError):
            project_local(GeoPoint(39.78, -89.65), CHICAGO)


class TestPointToPolyline:
    line = RailLine("UP-N", (GeoPoint(41.88, -87.64), GeoPoint(41.97, -87.67),
                             GeoPoint(42.05, -87.68)))

    def test_vertex_is_zero(self):
        d, idx = point_to_polyline_distance(self.line.vertices[1], self.line, CHICAGO)
        assert d == pytest.approx(0.0, abs=1e-9)
        assert idx == 0  # shared vertex: lower segment index wins

    @pytest.mark.parametrize("offset", [10.0, 250.0, 3000.0])
    def test_perpendicular_offset(self, offset):
        origin = GeoPoint(41.9, -87.7)
        a = PlanarPoint(-2000.0, -1000.0, origin)
        b = PlanarPoint(2000.0, 1000.0, origin)
        line = RailLine("X", (unproject_local(a), unproject_local(b)))
        n = math.hypot(2000.0, 1000.0)
        p = unproject_local(PlanarPoint(-1000.0 / n * offset, 2000.0 / n * offset, origin))
        d, idx = point_to_polyline_distance(p, line, origin)
        assert idx == 0
        assert d == pytest.approx(offset, rel=1e-3)

    def test_matches_dense_oracle(self):
        rng = random.Random(11)
        for _ in range(25):
            lat0, lon0 = rng.uniform(41.5, 42.4), rng.uniform(-88.5, -87.5)
            verts = [GeoPoint(lat0 + rng.uniform(-0.05, 0.05), lon0 + rng.uniform(-0.05, 0.05))
                     for _ in range(rng.randint(2, 5))]
            line = RailLine("R", tuple(verts))
            p = GeoPoint(lat0 + rng.uniform(-0.08, 0.08), lon0 + rng.uniform(-0.08, 0.08))
            d, _ = point_to_polyline_distance(p, line, p)
            ref = dense_oracle(p, line)
            assert abs(d - ref) <= max(1.0, 1e-3 * ref)

    def test_far_point_nearest_vertex_is_exact(self):
        p = GeoPoint(42.0, -87.5)
        line = RailLine("R", (GeoPoint(42.0, -88.5), GeoPoint(42.25, -88.0)))
        d, idx = point_to_polyline_distance(p, line, p)
        assert idx == 0
        assert d == pytest.approx(haversine(p, line.vertices[1]), rel=1e-12)

    @settings(max_examples=50)
    @given(metro_point, st.lists(metro_point, min_size=2, max_size=6, unique=True))
    def test_vertex_bound_and_reversal(self, p, verts):
        verts = [v for i, v in enumerate(verts) if i == 0 or v != verts[i - 1]]
        line = RailLine("R", tuple(verts))
        reverse = RailLine("R", tuple(reversed(verts)))
        d, _ = point_to_polyline_distance(p, line, p)
        dr, _ = point_to_polyline_distance(p, reverse, p)
        bound = min(haversine(p, v) for v in verts)
        assert d <= bound * 1.001 + 1e-6
        assert dr == pytest.approx(d, rel=1e-3, abs=1e-6)


class TestPrincipalBearing:
    o = GeoPoint(41.9, -87.7)

    def pts(self, coords):
        return [PlanarPoint(x, y, self.o) for x, y in coords]

    def test_diagonal_is_45(self):
        assert principal_bearing(self.pts([(k, k) for k in range(10)])) == pytest.approx(45.0)

    def test_north_south_is_0(self):
        assert principal_bearing(self.pts([(0, k) for k in range(10)])) == pytest.approx(0.0)

    def test_east_west_is_90(self):
        assert principal_bearing(self.pts([(k, 0) for k in range(10)])) == pytest.approx(90.0)

    def test_scattered_matches_closed_form(self):
        rng = random.Random(5)
        pts = self.pts([(rng.gauss(0, 900), rng.gauss(0, 400) + 0.3 * k * 40) for k in range(50)])
        assert principal_bearing(pts) == pytest.approx(closed_form_bearing(pts), abs=1e-6)

    @given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.floats(0.01, 100))
    def test_translation_and_scale_invariant(self, dx, dy, s):
        base = [(0, 0), (300, 520), (610, 990), (880, 1600), (100, 400)]
        b0 = principal_bearing(self.pts(base))
        moved = principal_bearing(self.pts([(s * x + dx, s * y + dy) for x, y in base]))
        gap = abs(b0 - moved) % 180
        assert min(gap, 180 - gap) < 1e-6

    def test_coincident_points_rejected(self):
        with pytest.raises(GeometryError):
            principal_bearing(self.pts([(5, 5)] * 4))
