import json
import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railprox.analyze import (CoincidentCluster, ProximityResult, analyze_proximity,
                              cluster_coincident, group_distance_summary, monte_carlo_null,
                              nearest_rail_distance, nearest_rail_distances, permutation_test,
                              sensitivity_rerun, stripe_analysis)
from railprox.classify import ExposureClass
from railprox.errors import AnalysisError, SchemaVersionError
from railprox.geo import (CHICAGO_REGION, BoundingBox, GeoPoint, PlanarPoint, haversine,
                          point_to_polyline_distance, unproject_local)
from railprox.ingest import RailLine
from railprox.locate import LocationSource

from conftest import located, straight_line

T, C = ExposureClass.TRAVEL, ExposureClass.COMMUNITY
ORIGIN = GeoPoint(41.9, -87.7)


def planar(x, y, origin=ORIGIN):
    return unproject_local(PlanarPoint(float(x), float(y), origin))


def line_at_bearing(line_id, bearing_deg, half_len=20_000.0, origin=ORIGIN, n=2):
    b = math.radians(bearing_deg)
    ts = np.linspace(-half_len, half_len, n)
    return RailLine(line_id, tuple(planar(t * math.sin(b), t * math.cos(b), origin) for t in ts))


def exhaustive_p(community, travel):
    """Oracle: enumerate every relabelling of the pooled sample in exact arithmetic."""
    pooled = [Fraction(v) for v in list(community) + list(travel)]
    n_t, n_c = len(travel), len(community)
    t_obs = sum(pooled[n_c:]) / n_t - sum(pooled[:n_c]) / n_c
    hits = total = 0
    for idx in combinations(range(len(pooled)), n_t):
        tr = sum(pooled[i] for i in idx)
        co = sum(pooled) - tr
        total += 1
        hits += tr / n_t - co / n_c >= t_obs
    return hits / total


UPN = straight_line("UP-N", 41.88, -87.64, 42.25, -87.80, n=6)
MDN = straight_line("MD-N", 41.88, -87.64, 42.05, -88.00, n=4)
BNSF = straight_line("BNSF", 41.88, -87.64, 41.76, -88.30, n=5)
UPW = straight_line("UP-NW", 41.88, -87.64, 42.10, -88.30, n=3)
LINES = [UPN, MDN, BNSF, UPW]


class TestNearest:
    def test_vertex_is_zero(self):
        v = UPN.vertices[2]
        assert nearest_rail_distance(located(1, v.lat, v.lon), LINES) == ("UP-N", pytest.approx(0.0, abs=1e-6))

    def test_single_line(self):
        line_id, d = nearest_rail_distance(located(1, 41.4, -88.7), [BNSF])
        assert line_id == "BNSF" and d > 10_000

    def test_tie_goes_to_smaller_id(self):
        a = straight_line("B", 41.9, -87.7, 42.0, -87.7)
        b = straight_line("A", 41.9, -87.7, 42.0, -87.7)
        assert nearest_rail_distance(located(1, 41.95, -87.69), [a, b])[0] == "A"

    def test_empty_lines(self):
        with pytest.raises(AnalysisError):
            nearest_rail_distance(located(1, 41.9, -87.7), [])

    def test_brute_force_5x4(self):
        cases = [located(i, 41.8 + 0.07 * i, -87.9 + 0.05 * i) for i in range(5)]
        got = nearest_rail_distances(cases, LINES)
        for (cid, line_id, d), c in zip(got, cases):
            per_line = {ln.line_id: point_to_polyline_distance(c.location, ln, c.location)[0] for ln in LINES}
            best = min(sorted(per_line), key=lambda k: per_line[k])
            assert (cid, line_id) == (c.case_id, best)
            assert d == pytest.approx(per_line[best], rel=1e-9, abs=1e-6)
            assert nearest_rail_distance(c, LINES) == (line_id, pytest.approx(d, rel=1e-9, abs=1e-6))

    @settings(max_examples=40)
    @given(st.floats(41.5, 42.4), st.floats(-88.5, -87.5), st.floats(41.5, 42.4), st.floats(-88.5, -87.5))
    def test_adding_line_never_increases(self, lat, lon, lat2, lon2):
        c = located(1, lat, lon)
        extra = straight_line("ZZ", lat2, lon2, lat2 + 0.05, lon2 + 0.03)
        assert nearest_rail_distance(c, LINES + [extra])[1] <= nearest_rail_distance(c, LINES)[1]


def cases_at_distances(distances_m, exposure=C, start_id=1, source=LocationSource.CITY_GIVEN, conf=1.0):
    """Cases due east of a north-south line at the given offsets."""
    return [located(start_id + k, *_east(d), exposure=exposure, source=source, confidence=conf)
            for k, d in enumerate(distances_m)]


def _east(d):
    p = planar(d, 0.0)
    return p.lat, p.lon


NS = line_at_bearing("NS", 0.0, half_len=30_000)


class TestSummary:
    def test_one_to_four_km(self):
        s = group_distance_summary(cases_at_distances([1000, 2000, 3000, 4000]), C, [NS])
        assert s.n == 4
        assert s.mean_m == pytest.approx(2500, rel=1e-3)
        assert s.median_m == pytest.approx(2500, rel=1e-3)

    def test_single_case(self):
        s = group_distance_summary(cases_at_distances([1234.0]), C, [NS])
        assert s.mean_m == s.median_m == s.q25_m == s.q75_m == pytest.approx(1234.0, rel=1e-3)

    def test_filters_class_and_county_only(self):
        cases = (cases_at_distances([1000, 3000], T)
                 + cases_at_distances([50, 60], C, start_id=10)
                 + cases_at_distances([9000], T, start_id=20, source=LocationSource.COUNTY_ONLY, conf=0.25))
        s = group_distance_summary(cases, T, [NS])
        assert s.n == 2 and [i for i, _, _ in s.per_case] == [1, 2]

    def test_empty_group_names_it(self):
        with pytest.raises(AnalysisError, match="travel"):
            group_distance_summary(cases_at_distances([1]), T, [NS])


cm = st.integers(0, 1_000_000)


class TestPermutation:
    def test_identical_groups_reproducible(self):
        d = list(np.random.default_rng(3).uniform(0, 5000, 20))
        ps = [permutation_test(d, d, 999, seed) for seed in range(10)]
        assert all(0.3 <= p <= 1.0 for p in ps)
        assert permutation_test(d, d, 999, 4) == ps[4]

    def test_separated(self):
        assert permutation_test([0.0] * 20, [10_000.0] * 20, 9999, seed=1) < 0.01

    def test_reverse_direction(self):
        assert permutation_test([10_000.0] * 20, [0.0] * 20, 999, seed=1) > 0.99

    @pytest.mark.parametrize("community,travel", [
        ([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]),
        ([5.0, 1.0, 9.0], [2.0, 8.0, 3.0]),
        ([2.0, 2.0, 2.0], [2.0, 2.0, 2.0]),
        ([0.0, 700.0, 300.0], [300.0, 1200.0, 50.0]),
    ])
    def test_exhaustive_n3(self, community, travel):
        assert permutation_test(community, travel, 999, seed=0) == exhaustive_p(community, travel)

    # Centimetre resolution: distinct statistics differ far beyond float rounding.
    @given(st.lists(cm, min_size=3, max_size=3), st.lists(cm, min_size=3, max_size=3))
    def test_exhaustive_oracle_property(self, community, travel):
        exact = exhaustive_p([Fraction(v, 100) for v in community], [Fraction(v, 100) for v in travel])
        got = permutation_test([v / 100 for v in community], [v / 100 for v in travel], 100)
        assert got == exact

    def test_duality(self):
        rng = np.random.default_rng(8)
        c, t = rng.uniform(0, 3000, 15), rng.uniform(500, 4000, 15)
        g = permutation_test(c, t, 999, 2, "greater")
        l = permutation_test(c, t, 999, 2, "less")
        assert g + l >= 1.0  # the observed statistic is counted by both tails

    def test_too_few_replicates(self):
        with pytest.raises(AnalysisError, match="100"):
            permutation_test([1.0], [2.0], 99)

    def test_empty_group(self):
        with pytest.raises(AnalysisError):
            permutation_test([], [1.0, 2.0], 999)


class TestMonteCarlo:
    region = BoundingBox(41.7, -87.9, 42.1, -87.5)

    def test_on_rail_sparse(self):
        line = straight_line("ONE", 41.75, -87.85, 42.05, -87.55, n=2)
        cases = [located(k, *(lambda t: (41.75 + 0.3 * t, -87.85 + 0.3 * t))(k / 29)) for k in range(30)]
        assert monte_carlo_null(cases, self.region, [line], 999, seed=5) <= 0.02

    def test_dense_grid(self):
        r = self.region
        step = 0.01
        lines = [straight_line(f"H{k:02d}", r.min_lat + k * step, r.min_lon, r.min_lat + k * step, r.max_lon)
                 for k in range(41)]
        lines += [straight_line(f"V{k:02d}", r.min_lat, r.min_lon + k * step, r.max_lat, r.min_lon + k * step)
                  for k in range(41)]
        rng = np.random.default_rng(1)
        cells = rng.integers(0, 40, size=(20, 2))
        cases = [located(k, r.min_lat + (i + 0.5) * step, r.min_lon + (j + 0.5) * step)
                 for k, (i, j) in enumerate(cells)]
        assert monte_carlo_null(cases, r, lines, 199, seed=2) >= 0.5

    def test_deterministic(self):
        cases = [located(k, 41.8 + 0.01 * k, -87.7) for k in range(10)]
        a = monte_carlo_null(cases, self.region, LINES, 200, seed=9)
        assert a == monte_carlo_null(cases, self.region, LINES, 200, seed=9)

    def test_zero_area(self):
        with pytest.raises(AnalysisError, match="zero area"):
            monte_carlo_null([located(1, 41.9, -87.7)], BoundingBox(41.9, -87.9, 41.9, -87.5), LINES, 999)

    def test_too_few_simulations(self):
        with pytest.raises(AnalysisError):
            monte_carlo_null([located(1, 41.9, -87.7)], self.region, LINES, 50)


def cloud(xy, exposure=C):
    return [located(k, (p := planar(x, y)).lat, p.lon, exposure) for k, (x, y) in enumerate(xy)]


class TestStripe:
    def test_north_south_collinear(self):
        res = stripe_analysis(cloud([(0.0, 100.0 * k) for k in range(-10, 11)]),
                              [line_at_bearing("EW", 90), line_at_bearing("NS", 0)], ORIGIN)
        assert res.stripe_bearing == pytest.approx(0.0, abs=1e-6) or res.stripe_bearing == pytest.approx(180.0)
        assert res.best_aligned_line[0] == "NS"
        assert math.isfinite(res.elongation_ratio) and res.elongation_ratio > 1e4

    def test_isotropic(self):
        rng = np.random.default_rng(42)
        xy = rng.normal(0, 2000, size=(500, 2))
        res = stripe_analysis(cloud(xy), [NS], ORIGIN)
        cov = np.cov(xy.T, bias=True)
        tr, det = np.trace(cov), np.linalg.det(cov)
        disc = math.sqrt(tr * tr / 4 - det)
        assert res.elongation_ratio == pytest.approx((tr / 2 + disc) / (tr / 2 - disc), rel=1e-3)
        assert res.elongation_ratio < 1.5

    def test_thirty_degree_line(self):
        rng = np.random.default_rng(30)
        t = rng.uniform(-15_000, 15_000, 500)
        b = math.radians(30)
        xy = np.column_stack([t * math.sin(b), t * math.cos(b)]) + rng.normal(0, 500, (500, 2))
        res = stripe_analysis(cloud(xy), [line_at_bearing("L120", 120), line_at_bearing("L30", 30)], ORIGIN)
        assert res.elongation_ratio > 10
        assert res.best_aligned_line[0] == "L30" and res.best_aligned_line[1] < 5

    def test_rotation_moves_bearing(self):
        rng = np.random.default_rng(7)
        xy = rng.normal(0, 1, (200, 2)) * [800, 3000]
        a = math.radians(37)
        rot = xy @ np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        b0 = stripe_analysis(cloud(xy), [NS], ORIGIN).stripe_bearing
        b1 = stripe_analysis(cloud(rot), [NS], ORIGIN).stripe_bearing
        gap = abs((b1 - b0) % 180 - 37)
        assert min(gap, 180 - gap) < 0.05

    def test_coincident_error(self):
        with pytest.raises(AnalysisError):
            stripe_analysis(cloud([(5.0, 5.0)] * 5), [NS])

    def test_too_few_points(self):
        with pytest.raises(AnalysisError):
            stripe_analysis(cloud([(0, 0), (1, 1)]), [NS])


class TestClusters:
    def test_forty_six_coincident(self):
        cases = [located(k, 41.7644, -87.9418) for k in range(46)] + [located(100, 41.9, -87.7)]
        (cl,) = cluster_coincident(cases)
        assert cl.count == 46 and cl.case_ids == tuple(range(46))
        assert cl.radius_m == pytest.approx(0.0, abs=1e-6)

    def test_far_apart(self):
        assert cluster_coincident(cloud([(k * 1000.0, 0.0) for k in range(10)])) == []

    def test_dumbbells(self):
        cases = cloud([(0, 0), (30, 0), (10_000, 0), (10_040, 0), (10_020, 30)])
        got = cluster_coincident(cases, 100)
        assert [cl.count for cl in got] == [3, 2]

    def test_bad_radius(self):
        with pytest.raises(AnalysisError):
            cluster_coincident([], 0)

    @settings(max_examples=30)
    @given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 8)), min_size=2, max_size=30))
    def test_partition(self, cells):
        cases = cloud([(60.0 * i, 60.0 * j) for i, j in cells])
        clusters = cluster_coincident(cases, 100)
        ids = [i for cl in clusters for i in cl.case_ids]
        assert len(ids) == len(set(ids))
        by_id = {c.case_id: c for c in cases}
        for cl in clusters:
            assert all(haversine(cl.center, by_id[i].location) <= cl.radius_m + 1e-6 for i in cl.case_ids)
            outside = [c for c in cases if c.case_id not in cl.case_ids]
            for c in outside:  # nobody outside links to a member
                assert all(haversine(c.location, by_id[i].location) > 100 for i in cl.case_ids)
        counts = [cl.count for cl in clusters]
        assert counts == sorted(counts, reverse=True)

    def test_dict_round_trip(self):
        cl = CoincidentCluster(GeoPoint(41.9, -87.7), 12.5, (3, 4), 2)
        assert CoincidentCluster.from_dict(json.loads(json.dumps(cl.to_dict()))) == cl


def mixed_cases():
    rng = np.random.default_rng(11)
    out = []
    tiers = [(LocationSource.CITY_GIVEN, 1.0), (LocationSource.HISTORY_PLACE, 0.65),
             (LocationSource.CITY_IMPUTED, 0.4), (LocationSource.CITY_IMPUTED, 0.8),
             (LocationSource.COUNTY_ONLY, 0.25)]
    for k in range(60):
        exposure = C if k % 2 else T
        src, conf = tiers[k % 5]
        spread = 3000 if exposure is C else 15000
        x, y = rng.normal(0, spread), rng.normal(0, 8000)
        p = planar(x, y)
        out.append(located(k, p.lat, p.lon, exposure, src, conf))
    return out


class TestSensitivity:
    lines = [NS, line_at_bearing("EW", 90)]
    kw = dict(n_perm=199, n_sim=199)

    def test_zero_equals_unfiltered(self):
        cases = mixed_cases()
        assert sensitivity_rerun(cases, self.lines, CHICAGO_REGION, 3, 0.0, **self.kw) == \
            analyze_proximity(cases, self.lines, CHICAGO_REGION, 3, **self.kw)

    @pytest.mark.parametrize("threshold,kept", [
        (1.0, {LocationSource.CITY_GIVEN}),
        (0.65, {LocationSource.CITY_GIVEN, LocationSource.HISTORY_PLACE, "imputed-0.8"}),
    ])
    def test_thresholds(self, threshold, kept):
        cases = mixed_cases()
        res = sensitivity_rerun(cases, self.lines, CHICAGO_REGION, 3, threshold, **self.kw)

        def tag(c):
            return "imputed-0.8" if c.source is LocationSource.CITY_IMPUTED and c.confidence == 0.8 else c.source
        expect = sorted(c.case_id for c in cases if tag(c) in kept)
        got = sorted(i for s in (res.community, res.travel) for i, _, _ in s.per_case)
        assert got == expect

    def test_error_names_threshold(self):
        cases = [c for c in mixed_cases() if not (c.exposure is T and c.confidence == 1.0)]
        with pytest.raises(AnalysisError, match="threshold 1.0"):
            sensitivity_rerun(cases, self.lines, CHICAGO_REGION, 3, 1.0, **self.kw)


def test_result_json_round_trip():
    res = analyze_proximity(mixed_cases(), TestSensitivity.lines, CHICAGO_REGION, 5, 199, 199)
    back = ProximityResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert back == res
    bad = res.to_dict() | {"schema_version": 2}
    with pytest.raises(SchemaVersionError):
        ProximityResult.from_dict(bad)
