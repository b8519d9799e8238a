"""Map and report writers.

The map is an RFC 7946 FeatureCollection using simplestyle properties, so
any GeoJSON viewer draws travel cases green and community cases red.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Mapping, Optional, Sequence

import jsonschema

from .analyze import CoincidentCluster, DistanceSummary, ProximityResult, line_bearing
from .classify import DatasetStats, ExposureClass
from .errors import RailproxError, SchemaVersionError
from .ingest import RailLine
from .locate import LocatedCase

REPORT_SCHEMA = "railprox-report"
REPORT_VERSION = 1
TOP_CLUSTERS = 10

MARKER_COLORS = {ExposureClass.TRAVEL: "#008000", ExposureClass.COMMUNITY: "#ff0000"}
RAIL_STROKE = "#1f3a93"


class ReportError(RailproxError):
    pass


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def emit_geojson(cases: Sequence[LocatedCase], lines: Sequence[RailLine],
                 distances: Mapping[int, tuple[str, float]]) -> str:
    """Serialize cases and rail lines; ``distances`` maps case id to (nearest line, meters)."""
    features = []
    for c in sorted(cases, key=lambda c: c.case_id):
        if c.exposure is ExposureClass.DROPPED:
            raise ReportError(f"dropped case {c.case_id} cannot be mapped")
        nearest = distances.get(c.case_id) if c.eligible else None
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [c.location.lon, c.location.lat]},
            "properties": {
                "id": c.case_id,
                "class": c.exposure.value,
                "source": c.source.value,
                "confidence": c.confidence,
                "nearest_line": nearest[0] if nearest else None,
                "distance_m": nearest[1] if nearest else None,
                "excluded_from_stats": not c.eligible,
                "marker-color": MARKER_COLORS[c.exposure],
                "marker-symbol": "circle",
                "marker-size": "small",
            },
        })
    for ln in sorted(lines, key=lambda ln: ln.line_id):
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString",
                         "coordinates": [[v.lon, v.lat] for v in ln.vertices]},
            "properties": {
                "line_id": ln.line_id,
                "bearing": line_bearing(ln.vertices),
                "stroke": RAIL_STROKE,
                "stroke-width": 3,
            },
        })
    if not features:
        raise ReportError("nothing to map: no cases and no rail lines")
    return _dumps({"type": "FeatureCollection", "features": features})


def _summary_dict(s: DistanceSummary) -> dict:
    return {"n": s.n, "mean_m": s.mean_m, "median_m": s.median_m,
            "q25_m": s.q25_m, "q75_m": s.q75_m}


def emit_summary(stats: DatasetStats, result: ProximityResult,
                 clusters: Sequence[CoincidentCluster],
                 located: Optional[Sequence[LocatedCase]] = None) -> dict:
    """Build the report document. ``located`` only feeds the located/excluded counts."""
    located = located or []
    counts = stats.as_dict()
    counts["located"] = len(located)
    counts["excluded_from_stats"] = sum(1 for c in located if not c.eligible)
    return {
        "schema": REPORT_SCHEMA,
        "schema_version": REPORT_VERSION,
        "counts": counts,
        "permutation_test": {"p_value": result.permutation_p, "seed": result.seed,
                             "n_permutations": result.n_permutations},
        "monte_carlo": {"p_value": result.monte_carlo_p, "seed": result.seed,
                        "n_simulations": result.n_simulations},
        "distances": {"community": _summary_dict(result.community),
                      "travel": _summary_dict(result.travel)},
        "stripe": {"elongation_ratio": result.elongation_ratio,
                   "bearing_deg": result.stripe_bearing,
                   "best_aligned_line": result.best_aligned_line[0],
                   "bearing_gap_deg": result.best_aligned_line[1]},
        "clusters": [cl.to_dict() for cl in list(clusters)[:TOP_CLUSTERS]],
        "confidence_threshold": result.confidence_threshold,
    }


def report_schema() -> dict:
    return json.loads(resources.files("railprox").joinpath("data/report.schema.json")
                      .read_text("utf-8"))


def validate_report(doc: dict) -> None:
    if doc.get("schema") == REPORT_SCHEMA and doc.get("schema_version", 0) > REPORT_VERSION:
        raise SchemaVersionError(
            f"report schema version {doc['schema_version']} is newer than {REPORT_VERSION}")
    jsonschema.validate(doc, report_schema())


def dumps_report(doc: dict) -> str:
    return _dumps(doc)


def loads_report(text: str) -> dict:
    doc = json.loads(text)
    validate_report(doc)
    return doc


_TEXT_TEMPLATE = """\
Rail proximity report (schema {schema_version})

Cases
  total          {c[total]}
  travel         {c[travel]}
  community      {c[community]}
  dropped        {c[dropped]}
  missing city   {c[missing_city]}
  located        {c[located]}
  county only    {c[excluded_from_stats]}

Distance to nearest rail line (m)
  group      n      mean    median       q25       q75
{dist_rows}

Significance (one-sided: community closer than expected)
  permutation  p = {perm[p_value]:.4f}  seed {perm[seed]}  replicates {perm[n_permutations]}
  monte carlo  p = {mc[p_value]:.4f}  seed {mc[seed]}  replicates {mc[n_simulations]}
  confidence threshold {threshold}

Community point cloud
  elongation ratio   {s[elongation_ratio]:.3f}
  principal bearing  {s[bearing_deg]:.2f} deg
  best aligned line  {s[best_aligned_line]} (gap {s[bearing_gap_deg]:.2f} deg)

Coincident clusters (largest first)
{cluster_rows}
"""


def render_text(doc: dict) -> str:
    dist_rows = "\n".join(
        f"  {g:<9} {d['n']:>3} {d['mean_m']:>9.1f} {d['median_m']:>9.1f} "
        f"{d['q25_m']:>9.1f} {d['q75_m']:>9.1f}"
        for g, d in doc["distances"].items())
    cluster_rows = "\n".join(
        f"  {cl['count']:>4} cases at ({cl['center']['lat']:.5f}, {cl['center']['lon']:.5f})"
        f"  radius {cl['radius_m']:.1f} m"
        for cl in doc["clusters"]) or "  none"
    return _TEXT_TEMPLATE.format(
        schema_version=doc["schema_version"], c=doc["counts"], dist_rows=dist_rows,
        perm=doc["permutation_test"], mc=doc["monte_carlo"],
        threshold=doc["confidence_threshold"], s=doc["stripe"], cluster_rows=cluster_rows)
