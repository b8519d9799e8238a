"""Classify epidemiological case reports, geocode them offline, and test
whether community-acquired cases sit closer to commuter rail than expected."""

from .analyze import (CoincidentCluster, DistanceSummary, ProximityResult, analyze_proximity,
                      cluster_coincident, group_distance_summary, monte_carlo_null,
                      nearest_rail_distance, permutation_test, sensitivity_rerun,
                      stripe_analysis)
from .classify import (ClassificationRule, ClassifiedCase, DatasetStats, ExposureClass, Ruleset,
                       classify_all, classify_history, default_ruleset, parse_rules)
from .geo import (BoundingBox, GeoPoint, PlanarPoint, haversine, point_to_polyline_distance,
                  principal_bearing, project_local, unproject_local)
from .ingest import (CaseRecord, Gazetteer, GazetteerEntry, RailLine, RowIssue,
                     load_gazetteer, load_rail_lines, parse_case_records)
from .locate import (LocatedCase, LocationSource, PlaceMention, build_city_frequency,
                     extract_place_mentions, impute_city, resolve_location)

__version__ = "0.1.0"
