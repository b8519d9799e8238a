"""Geodesic and local planar geometry on a spherical earth.

Distances are great-circle meters on a sphere of radius 6,371 km. Anything
that needs segment geometry goes through a local equirectangular projection,
which is accurate to well under a percent at metro scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GeometryError, ProjectionError

EARTH_RADIUS_M = 6_371_000.0

# Projection window half-width in degrees.
PROJECTION_WINDOW_DEG = 2.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise GeometryError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise GeometryError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise GeometryError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class PlanarPoint:
    """Meters east (x) and north (y) of ``origin``."""

    x: float
    y: float
    origin: GeoPoint


@dataclass(frozen=True)
class BoundingBox:
    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float

    def __post_init__(self):
        GeoPoint(self.min_lat, self.min_lon)
        GeoPoint(self.max_lat, self.max_lon)
        if self.min_lat > self.max_lat or self.min_lon > self.max_lon:
            raise GeometryError(f"inverted bounding box {self}")

    @classmethod
    def parse(cls, text: str) -> "BoundingBox":
        """Parse ``"min_lat,min_lon,max_lat,max_lon"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise GeometryError(f"region needs 4 comma-separated numbers, got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as exc:
            raise GeometryError(f"bad region {text!r}: {exc}") from None

    def contains(self, p: GeoPoint) -> bool:
        return (self.min_lat <= p.lat <= self.max_lat
                and self.min_lon <= p.lon <= self.max_lon)

    @property
    def has_area(self) -> bool:
        return self.max_lat > self.min_lat and self.max_lon > self.min_lon

    def __str__(self):
        return f"{self.min_lat},{self.min_lon},{self.max_lat},{self.max_lon}"


# Greater Chicago: Waukegan to Joliet, Fox Lake to the lakefront.
CHICAGO_REGION = BoundingBox(41.3, -88.8, 42.7, -87.3)


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def haversine_many(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Vectorised haversine over broadcastable degree arrays."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def _check_window(p: GeoPoint, origin: GeoPoint) -> None:
    if (abs(p.lat - origin.lat) > PROJECTION_WINDOW_DEG
            or abs(p.lon - origin.lon) > PROJECTION_WINDOW_DEG):
        raise ProjectionError(
            f"({p.lat}, {p.lon}) is more than {PROJECTION_WINDOW_DEG} deg "
            f"from projection origin ({origin.lat}, {origin.lon})")


def project_local(p: GeoPoint, origin: GeoPoint) -> PlanarPoint:
    _check_window(p, origin)
    x = EARTH_RADIUS_M * math.radians(p.lon - origin.lon) * math.cos(math.radians(origin.lat))
    y = EARTH_RADIUS_M * math.radians(p.lat - origin.lat)
    return PlanarPoint(x, y, origin)


def unproject_local(q: PlanarPoint) -> GeoPoint:
    o = q.origin
    lat = o.lat + math.degrees(q.y / EARTH_RADIUS_M)
    lon = o.lon + math.degrees(q.x / (EARTH_RADIUS_M * math.cos(math.radians(o.lat))))
    return GeoPoint(lat, lon)


def project_arrays(lat, lon, origin: GeoPoint) -> tuple[np.ndarray, np.ndarray]:
    """Project degree arrays around ``origin``; raises if any point leaves the window."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if lat.size and (np.max(np.abs(lat - origin.lat)) > PROJECTION_WINDOW_DEG
                     or np.max(np.abs(lon - origin.lon)) > PROJECTION_WINDOW_DEG):
        raise ProjectionError(
            f"points lie outside the {PROJECTION_WINDOW_DEG} deg window around "
            f"({origin.lat}, {origin.lon})")
    x = EARTH_RADIUS_M * np.radians(lon - origin.lon) * math.cos(math.radians(origin.lat))
    y = EARTH_RADIUS_M * np.radians(lat - origin.lat)
    return x, y


def centroid(points: Iterable[GeoPoint]) -> GeoPoint:
    pts = list(points)
    if not pts:
        raise GeometryError("centroid of an empty point set")
    return GeoPoint(sum(p.lat for p in pts) / len(pts), sum(p.lon for p in pts) / len(pts))


def _segment_feet(px, py, ax, ay, bx, by) -> tuple[np.ndarray, np.ndarray]:
    """Planar closest point(s) on segments a->b to point(s) p."""
    dx = bx - ax
    dy = by - ay
    len2 = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = ((px - ax) * dx + (py - ay) * dy) / len2
    t = np.where(len2 > 0, np.clip(t, 0.0, 1.0), 0.0)
    return ax + t * dx, ay + t * dy


def point_to_polyline_distance(p: GeoPoint, line, origin: GeoPoint) -> tuple[float, int]:
    """Distance in meters from ``p`` to a rail polyline and the nearest segment index.

    The closest point of each segment is found in the local plane, then its
    distance to ``p`` is measured on the sphere, so the result is exact
    whenever the closest point is a vertex. ``line`` is anything with a
    ``vertices`` sequence of GeoPoints. Ties go to the lower segment index.
    """
    verts: Sequence[GeoPoint] = line.vertices
    if len(verts) < 2:
        raise GeometryError("polyline needs at least 2 vertices")
    q = project_local(p, origin)
    xs, ys = project_arrays([v.lat for v in verts], [v.lon for v in verts], origin)
    fx, fy = _segment_feet(q.x, q.y, xs[:-1], ys[:-1], xs[1:], ys[1:])
    flat = origin.lat + np.degrees(fy / EARTH_RADIUS_M)
    flon = origin.lon + np.degrees(fx / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    d = haversine_many(p.lat, p.lon, flat, flon)
    idx = int(np.argmin(d))
    return float(d[idx]), idx


def polyline_distances(lat, lon, line) -> np.ndarray:
    """Distance from each (lat, lon) to ``line``, each projected about itself.

    Projecting around the query point keeps the scale error proportional to
    the point-to-rail distance rather than to the size of the study area.
    """
    lat = np.asarray(lat, dtype=float)[:, None]
    lon = np.asarray(lon, dtype=float)[:, None]
    vlat = np.array([v.lat for v in line.vertices])[None, :]
    vlon = np.array([v.lon for v in line.vertices])[None, :]
    if np.any(np.abs(vlat - lat) > PROJECTION_WINDOW_DEG) or np.any(
            np.abs(vlon - lon) > PROJECTION_WINDOW_DEG):
        raise ProjectionError(
            f"line {getattr(line, 'line_id', '?')} leaves the projection window of a query point")
    kx = EARTH_RADIUS_M * np.cos(np.radians(lat))
    vx = np.radians(vlon - lon) * kx
    vy = EARTH_RADIUS_M * np.radians(vlat - lat)
    fx, fy = _segment_feet(0.0, 0.0, vx[:, :-1], vy[:, :-1], vx[:, 1:], vy[:, 1:])
    d = haversine_many(lat, lon, lat + np.degrees(fy / EARTH_RADIUS_M), lon + np.degrees(fx / kx))
    return d.min(axis=1)


def covariance_eigen(xs, ys) -> tuple[float, float, np.ndarray]:
    """Eigenvalues (descending) and the leading unit eigenvector of the 2x2 covariance."""
    pts = np.column_stack([np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)])
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    vals, vecs = np.linalg.eigh(cov)
    return float(vals[1]), float(vals[0]), vecs[:, 1]


def axis_bearing(vx: float, vy: float) -> float:
    """Clockwise-from-north bearing of an undirected axis, in [0, 180)."""
    b = math.degrees(math.atan2(vx, vy)) % 180.0
    return 0.0 if b >= 180.0 else b


def principal_bearing(points: Sequence[PlanarPoint]) -> float:
    if len(points) < 2:
        raise GeometryError("principal bearing needs at least 2 points")
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    if max(xs) == min(xs) and max(ys) == min(ys):
        raise GeometryError("all points coincide; no principal axis")
    _, _, vec = covariance_eigen(xs, ys)
    return axis_bearing(vec[0], vec[1])


def bearing_gap(a: float, b: float) -> float:
    """Smallest angle between two undirected axes, in [0, 90]."""
    d = abs(a - b) % 180.0
    return min(d, 180.0 - d)
