import csv
import io
import json
import math
from importlib import resources
from pathlib import Path

import geojson
import pytest

from railprox.classify import ClassifiedCase, ExposureClass
from railprox.geo import CHICAGO_REGION, GeoPoint
from railprox.ingest import Gazetteer, GazetteerEntry, RailLine
from railprox.locate import LocatedCase, LocationSource

FIXTURE_DIR = Path(str(resources.files("railprox").joinpath("data/fixture")))


@pytest.fixture
def fixture_dir():
    return FIXTURE_DIR


def read_fixture(name):
    return (FIXTURE_DIR / name).read_text(encoding="utf-8")


def labels_from(name):
    """Ground-truth histroy_result column keyed by row id."""
    return {int(r["id"]): r["histroy_result"]
            for r in csv.DictReader(io.StringIO(read_fixture(name)))}


def located(case_id, lat, lon, exposure=ExposureClass.COMMUNITY,
            source=LocationSource.CITY_GIVEN, confidence=1.0):
    return LocatedCase(case_id, exposure, GeoPoint(lat, lon), source, confidence)


def entry(name, kind="city", lat=41.9, lon=-87.7, aliases=(), county="Cook"):
    return GazetteerEntry(name, tuple(aliases), kind, county, GeoPoint(lat, lon))


def straight_line(line_id, lat0, lon0, lat1, lon1, n=2):
    pts = [GeoPoint(lat0 + (lat1 - lat0) * k / (n - 1), lon0 + (lon1 - lon0) * k / (n - 1))
           for k in range(n)]
    return RailLine(line_id, tuple(pts))


def assert_strict_geojson(text, region=CHICAGO_REGION):
    """RFC 7946 structural checks on top of the geojson package's validator."""
    obj = geojson.loads(text)
    assert obj.is_valid, obj.errors()
    doc = json.loads(text)
    assert doc["type"] == "FeatureCollection"
    assert set(doc) <= {"type", "features", "bbox"}
    for feat in doc["features"]:
        assert feat["type"] == "Feature"
        assert set(feat) <= {"type", "geometry", "properties", "id", "bbox"}
        assert isinstance(feat["properties"], dict)
        geom = feat["geometry"]
        if geom["type"] == "Point":
            positions = [geom["coordinates"]]
        elif geom["type"] == "LineString":
            positions = geom["coordinates"]
            assert len(positions) >= 2
        else:
            raise AssertionError(f"unexpected geometry {geom['type']}")
        for pos in positions:
            assert len(pos) == 2 and all(isinstance(v, float) and math.isfinite(v) for v in pos)
            lon, lat = pos
            assert region.min_lon <= lon <= region.max_lon
            assert region.min_lat <= lat <= region.max_lat
    return doc


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
