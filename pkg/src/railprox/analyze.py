"""Proximity statistics between located cases and rail lines.

Two one-sided nulls test whether community cases sit closer to the rails
than expected: a label permutation against travel cases, and a Monte Carlo
null of points scattered uniformly over the study region. Each replicate
draws from its own substream keyed by (seed, stream, replicate index), so
results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .classify import ExposureClass
from .errors import AnalysisError, SchemaVersionError
from .geo import (BoundingBox, GeoPoint, axis_bearing, bearing_gap, centroid,
                  covariance_eigen, haversine, haversine_many, point_to_polyline_distance,
                  polyline_distances, project_arrays)
from .ingest import RailLine
from .locate import LocatedCase

RESULT_SCHEMA_VERSION = 1

DEFAULT_PERMUTATIONS = 9_999
DEFAULT_SIMULATIONS = 999
MIN_REPLICATES = 100
DEFAULT_CLUSTER_RADIUS_M = 100.0
LAMBDA_FLOOR_M2 = 1.0

_PERM_STREAM = 0
_MC_STREAM = 1
_MC_CHUNK = 64


def _substream(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


# --- distances -------------------------------------------------------------

def nearest_rail_distance(case: LocatedCase, lines: Sequence[RailLine],
                          origin: Optional[GeoPoint] = None) -> tuple[str, float]:
    """Nearest line id and distance in meters; ties go to the smaller line id.

    The projection origin defaults to the case location itself.
    """
    if not lines:
        raise AnalysisError("no rail lines to measure against")
    origin = origin or case.location
    best: Optional[tuple[str, float]] = None
    for line in sorted(lines, key=lambda ln: ln.line_id):
        d, _ = point_to_polyline_distance(case.location, line, origin)
        if best is None or d < best[1]:
            best = (line.line_id, d)
    return best


def _line_matrix(lats, lons, lines: Sequence[RailLine]) -> tuple[list[RailLine], np.ndarray]:
    ordered = sorted(lines, key=lambda ln: ln.line_id)
    mat = np.column_stack([polyline_distances(lats, lons, ln) for ln in ordered])
    return ordered, mat


def nearest_rail_distances(cases: Sequence[LocatedCase], lines: Sequence[RailLine]
                           ) -> list[tuple[int, str, float]]:
    """Vectorised ``nearest_rail_distance`` over many cases: (case id, line id, meters)."""
    if not lines:
        raise AnalysisError("no rail lines to measure against")
    if not cases:
        return []
    ordered, mat = _line_matrix([c.location.lat for c in cases],
                                [c.location.lon for c in cases], lines)
    idx = np.argmin(mat, axis=1)  # first minimum == lexicographically smallest id
    return [(c.case_id, ordered[i].line_id, float(mat[k, i]))
            for k, (c, i) in enumerate(zip(cases, idx))]


def _mean_nearest(lats, lons, lines) -> float:
    _, mat = _line_matrix(lats, lons, lines)
    return float(mat.min(axis=1).mean())


@dataclass(frozen=True)
class DistanceSummary:
    group: ExposureClass
    n: int
    mean_m: float
    median_m: float
    q25_m: float
    q75_m: float
    per_case: tuple[tuple[int, str, float], ...] = field(default=())

    @property
    def distances(self) -> list[float]:
        return [d for _, _, d in self.per_case]

    def to_dict(self) -> dict:
        return {"group": self.group.value, "n": self.n, "mean_m": self.mean_m,
                "median_m": self.median_m, "q25_m": self.q25_m, "q75_m": self.q75_m,
                "per_case": [{"id": i, "line_id": ln, "distance_m": d}
                             for i, ln, d in self.per_case]}

    @classmethod
    def from_dict(cls, d: dict) -> "DistanceSummary":
        return cls(ExposureClass(d["group"]), d["n"], d["mean_m"], d["median_m"],
                   d["q25_m"], d["q75_m"],
                   tuple((p["id"], p["line_id"], p["distance_m"]) for p in d["per_case"]))


def group_distance_summary(cases: Sequence[LocatedCase], class_filter: ExposureClass,
                           lines: Sequence[RailLine]) -> DistanceSummary:
    group = sorted((c for c in cases if c.exposure is class_filter and c.eligible),
                   key=lambda c: c.case_id)
    if not group:
        raise AnalysisError(f"no eligible {class_filter.value} cases to summarise")
    per_case = tuple(nearest_rail_distances(group, lines))
    d = np.array([x for _, _, x in per_case])
    q25, med, q75 = np.percentile(d, [25, 50, 75])
    return DistanceSummary(class_filter, len(per_case), float(d.mean()), float(med),
                           float(q25), float(q75), per_case)


# --- significance ----------------------------------------------------------

def _tolerance(values: np.ndarray) -> float:
    return 1e-10 * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)


def permutation_test(community_d: Sequence[float], travel_d: Sequence[float],
                     n_perm: int = DEFAULT_PERMUTATIONS, seed: int = 0,
                     alternative: str = "greater") -> float:
    """One-sided label-permutation p-value for T = mean(travel) - mean(community).

    ``alternative="greater"`` tests whether community cases sit closer to
    the rails. When the number of distinct label assignments does not exceed
    ``n_perm``, every assignment is enumerated and the exact p-value returned.
    """
    if n_perm < MIN_REPLICATES:
        raise AnalysisError(f"n_perm must be at least {MIN_REPLICATES}, got {n_perm}")
    if alternative not in ("greater", "less"):
        raise AnalysisError(f"alternative must be 'greater' or 'less', got {alternative!r}")
    c = np.asarray(community_d, dtype=float)
    t = np.asarray(travel_d, dtype=float)
    if c.size == 0 or t.size == 0:
        raise AnalysisError("both groups need at least one distance")
    pooled = np.concatenate([c, t])
    n_total, n_t = pooled.size, t.size
    total_sum = pooled.sum()
    tol = _tolerance(pooled)

    def stat(travel_sum):
        return travel_sum / n_t - (total_sum - travel_sum) / (n_total - n_t)

    t_obs = stat(t.sum())

    if math.comb(n_total, n_t) <= n_perm:
        sums = np.array([pooled[list(idx)].sum() for idx in combinations(range(n_total), n_t)])
        null = stat(sums)
        hits = np.sum(null >= t_obs - tol) if alternative == "greater" else np.sum(null <= t_obs + tol)
        return float(hits) / null.size

    sums = np.empty(n_perm)
    for i in range(n_perm):
        perm = _substream(seed, _PERM_STREAM, i).permutation(n_total)
        sums[i] = pooled[perm[:n_t]].sum()
    null = stat(sums)
    hits = np.sum(null >= t_obs - tol) if alternative == "greater" else np.sum(null <= t_obs + tol)
    return (1.0 + float(hits)) / (n_perm + 1)


def monte_carlo_null(community_cases: Sequence[LocatedCase], region: BoundingBox,
                     lines: Sequence[RailLine], n_sim: int = DEFAULT_SIMULATIONS,
                     seed: int = 0) -> float:
    """p = (1 + #{null mean <= observed mean}) / (n_sim + 1) under uniform placement."""
    if n_sim < MIN_REPLICATES:
        raise AnalysisError(f"n_sim must be at least {MIN_REPLICATES}, got {n_sim}")
    if not region.has_area:
        raise AnalysisError(f"region {region} has zero area")
    if not lines:
        raise AnalysisError("no rail lines to measure against")
    pts = [c for c in community_cases if c.eligible]
    if not pts:
        raise AnalysisError("no eligible community cases for the Monte Carlo null")
    n = len(pts)
    observed = _mean_nearest([c.location.lat for c in pts], [c.location.lon for c in pts], lines)

    null = np.empty(n_sim)
    for start in range(0, n_sim, _MC_CHUNK):
        stop = min(n_sim, start + _MC_CHUNK)
        lat = np.empty((stop - start, n))
        lon = np.empty((stop - start, n))
        for k, i in enumerate(range(start, stop)):
            rng = _substream(seed, _MC_STREAM, i)
            lat[k] = rng.uniform(region.min_lat, region.max_lat, n)
            lon[k] = rng.uniform(region.min_lon, region.max_lon, n)
        _, mat = _line_matrix(lat.ravel(), lon.ravel(), lines)
        null[start:stop] = mat.min(axis=1).reshape(stop - start, n).mean(axis=1)
    tol = _tolerance(np.append(null, observed))
    return (1.0 + float(np.sum(null <= observed + tol))) / (n_sim + 1)


# --- shape of the community point cloud ------------------------------------

@dataclass(frozen=True)
class StripeResult:
    elongation_ratio: float
    stripe_bearing: float
    best_aligned_line: tuple[str, float]


def stripe_analysis(community_cases: Sequence[LocatedCase], lines: Sequence[RailLine],
                    origin: Optional[GeoPoint] = None) -> StripeResult:
    """Elongation and orientation of the community cloud, and the line best aligned with it.

    The minor eigenvalue is floored at 1 m^2 so collinear inputs give a large
    finite ratio instead of a division by zero.
    """
    pts = [c.location for c in community_cases]
    if len(pts) < 3:
        raise AnalysisError(f"stripe analysis needs at least 3 points, got {len(pts)}")
    if len(set(pts)) == 1:
        raise AnalysisError("all community points coincide; covariance is degenerate")
    if not lines:
        raise AnalysisError("no rail lines to align against")
    origin = origin or centroid(pts)
    xs, ys = project_arrays([p.lat for p in pts], [p.lon for p in pts], origin)
    lam1, lam2, vec = covariance_eigen(xs, ys)
    bearing = axis_bearing(vec[0], vec[1])
    ratio = lam1 / max(lam2, LAMBDA_FLOOR_M2)

    by_id: dict[str, list[GeoPoint]] = {}
    for ln in lines:
        by_id.setdefault(ln.line_id, []).extend(ln.vertices)
    best = None
    for line_id in sorted(by_id):
        lb = line_bearing(by_id[line_id], origin)
        gap = bearing_gap(lb, bearing)
        if best is None or gap < best[1]:
            best = (line_id, gap)
    return StripeResult(float(ratio), float(bearing), best)


def line_bearing(vertices: Sequence[GeoPoint], origin: Optional[GeoPoint] = None) -> float:
    origin = origin or centroid(vertices)
    xs, ys = project_arrays([v.lat for v in vertices], [v.lon for v in vertices], origin)
    _, _, vec = covariance_eigen(xs, ys)
    return axis_bearing(vec[0], vec[1])


# --- coincident cases ------------------------------------------------------

@dataclass(frozen=True)
class CoincidentCluster:
    center: GeoPoint
    radius_m: float  # farthest member from center
    case_ids: tuple[int, ...]
    count: int

    def to_dict(self) -> dict:
        return {"center": {"lat": self.center.lat, "lon": self.center.lon},
                "radius_m": self.radius_m, "case_ids": list(self.case_ids), "count": self.count}

    @classmethod
    def from_dict(cls, d: dict) -> "CoincidentCluster":
        return cls(GeoPoint(d["center"]["lat"], d["center"]["lon"]), d["radius_m"],
                   tuple(d["case_ids"]), d["count"])


def cluster_coincident(cases: Sequence[LocatedCase],
                       radius_m: float = DEFAULT_CLUSTER_RADIUS_M) -> list[CoincidentCluster]:
    """Single-linkage groups of cases within ``radius_m``; groups of two or more, largest first."""
    if radius_m <= 0:
        raise AnalysisError(f"radius_m must be positive, got {radius_m}")
    cases = sorted(cases, key=lambda c: c.case_id)
    if len(cases) < 2:
        return []
    lat = np.array([c.location.lat for c in cases])
    lon = np.array([c.location.lon for c in cases])
    dist = haversine_many(lat[:, None], lon[:, None], lat[None, :], lon[None, :])
    n_comp, labels = connected_components(csr_matrix(dist <= radius_m), directed=False)

    clusters = []
    for label in range(n_comp):
        members = [c for c, lab in zip(cases, labels) if lab == label]
        if len(members) < 2:
            continue
        center = centroid(c.location for c in members)
        extent = max(haversine(center, c.location) for c in members)
        ids = tuple(c.case_id for c in members)
        clusters.append(CoincidentCluster(center, extent, ids, len(ids)))
    clusters.sort(key=lambda cl: (-cl.count, cl.case_ids[0]))
    return clusters


# --- full result -----------------------------------------------------------

@dataclass(frozen=True)
class ProximityResult:
    community: DistanceSummary
    travel: DistanceSummary
    permutation_p: float
    monte_carlo_p: float
    elongation_ratio: float
    stripe_bearing: float
    best_aligned_line: tuple[str, float]
    seed: int
    n_permutations: int
    n_simulations: int
    confidence_threshold: float = 0.0

    def to_dict(self) -> dict:
        return {
            "schema_version": RESULT_SCHEMA_VERSION,
            "community": self.community.to_dict(),
            "travel": self.travel.to_dict(),
            "permutation_p": self.permutation_p,
            "monte_carlo_p": self.monte_carlo_p,
            "elongation_ratio": self.elongation_ratio,
            "stripe_bearing": self.stripe_bearing,
            "best_aligned_line": {"line_id": self.best_aligned_line[0],
                                  "bearing_gap": self.best_aligned_line[1]},
            "seed": self.seed,
            "n_permutations": self.n_permutations,
            "n_simulations": self.n_simulations,
            "confidence_threshold": self.confidence_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProximityResult":
        if d.get("schema_version") != RESULT_SCHEMA_VERSION:
            raise SchemaVersionError(
                f"proximity result schema version {d.get('schema_version')!r}, "
                f"expected {RESULT_SCHEMA_VERSION}")
        return cls(
            DistanceSummary.from_dict(d["community"]), DistanceSummary.from_dict(d["travel"]),
            d["permutation_p"], d["monte_carlo_p"], d["elongation_ratio"], d["stripe_bearing"],
            (d["best_aligned_line"]["line_id"], d["best_aligned_line"]["bearing_gap"]),
            d["seed"], d["n_permutations"], d["n_simulations"], d["confidence_threshold"])


def analyze_proximity(cases: Sequence[LocatedCase], lines: Sequence[RailLine],
                      region: BoundingBox, seed: int,
                      n_perm: int = DEFAULT_PERMUTATIONS, n_sim: int = DEFAULT_SIMULATIONS,
                      confidence_threshold: float = 0.0) -> ProximityResult:
    if not 0.0 <= confidence_threshold <= 1.0:
        raise AnalysisError(f"confidence threshold {confidence_threshold} outside [0, 1]")
    kept = sorted((c for c in cases if c.eligible and c.confidence >= confidence_threshold),
                  key=lambda c: c.case_id)
    community = group_distance_summary(kept, ExposureClass.COMMUNITY, lines)
    travel = group_distance_summary(kept, ExposureClass.TRAVEL, lines)
    perm_p = permutation_test(community.distances, travel.distances, n_perm, seed)
    comm_cases = [c for c in kept if c.exposure is ExposureClass.COMMUNITY]
    mc_p = monte_carlo_null(comm_cases, region, lines, n_sim, seed)
    stripe = stripe_analysis(comm_cases, lines, origin=centroid(c.location for c in kept))
    return ProximityResult(community, travel, perm_p, mc_p, stripe.elongation_ratio,
                           stripe.stripe_bearing, stripe.best_aligned_line, seed,
                           n_perm, n_sim, confidence_threshold)


def sensitivity_rerun(cases: Sequence[LocatedCase], lines: Sequence[RailLine],
                      region: BoundingBox, seed: int, confidence_threshold: float,
                      n_perm: int = DEFAULT_PERMUTATIONS,
                      n_sim: int = DEFAULT_SIMULATIONS) -> ProximityResult:
    """Recompute the result using only cases located with at least the given confidence."""
    try:
        return analyze_proximity(cases, lines, region, seed, n_perm, n_sim, confidence_threshold)
    except AnalysisError as exc:
        raise AnalysisError(f"confidence threshold {confidence_threshold}: {exc}") from exc
