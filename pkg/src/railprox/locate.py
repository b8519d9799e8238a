"""Resolve classified cases to coordinates.

Resolution tiers, best first:

1. a facility or landmark named in the history text (community cases only),
2. the reported city,
3. the county's most frequent reported city,
4. the county centroid.

Each tier carries a fixed confidence except imputation, whose confidence is
the modal city's share of its county.
"""

from __future__ import annotations

import csv
import enum
import io
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .classify import ClassifiedCase, DatasetStats, ExposureClass
from .errors import RailproxError, SchemaVersionError
from .geo import BoundingBox, GeoPoint
from .ingest import CaseRecord, Gazetteer, GazetteerEntry, RowIssue

HISTORY_PLACE_CONFIDENCE = 0.65
CITY_GIVEN_CONFIDENCE = 1.0
COUNTY_ONLY_CONFIDENCE = 0.25

LOCATED_SCHEMA = "railprox-located"
LOCATED_VERSION = 1


class LocationSource(str, enum.Enum):
    CITY_GIVEN = "city_given"
    CITY_IMPUTED = "city_imputed"
    HISTORY_PLACE = "history_place"
    COUNTY_ONLY = "county_only"


CityFrequencyTable = dict[str, Counter]


def build_city_frequency(records: Iterable[CaseRecord]) -> CityFrequencyTable:
    table: CityFrequencyTable = {}
    for r in records:
        if r.city is not None:
            table.setdefault(r.county, Counter())[r.city] += 1
    return table


def impute_city(record: CaseRecord, table: CityFrequencyTable) -> Optional[tuple[str, float]]:
    """Modal city of the record's county and its share; alphabetical tie-break.

    Returns None when the county has no observed cities.
    """
    counts = table.get(record.county)
    if not counts:
        return None
    city, n = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return city, n / sum(counts.values())


@dataclass(frozen=True)
class PlaceMention:
    matched_text: str
    entry: GazetteerEntry
    char_span: tuple[int, int]


def extract_place_mentions(history_text: str, gazetteer: Gazetteer) -> list[PlaceMention]:
    candidates = []
    for pattern, entry in gazetteer.name_patterns():
        for m in pattern.finditer(history_text):
            candidates.append((m.start(), m.end(), entry))
    # Longest first, then leftmost; overlapping shorter candidates lose.
    candidates.sort(key=lambda c: (-(c[1] - c[0]), c[0]))
    taken: list[tuple[int, int, GazetteerEntry]] = []
    for start, end, entry in candidates:
        if all(end <= s or start >= e for s, e, _ in taken):
            taken.append((start, end, entry))
    taken.sort(key=lambda c: c[0])
    return [PlaceMention(history_text[s:e], entry, (s, e)) for s, e, entry in taken]


@dataclass(frozen=True)
class LocatedCase:
    case_id: int
    exposure: ExposureClass
    location: GeoPoint
    source: LocationSource
    confidence: float
    place: Optional[str] = None
    case: Optional[ClassifiedCase] = None

    @property
    def eligible(self) -> bool:
        """County centroids are too coarse for distance statistics."""
        return self.source is not LocationSource.COUNTY_ONLY


class UnresolvedLocation(RailproxError):
    def __init__(self, case_id: int, field: str, message: str):
        self.case_id = case_id
        self.field = field
        super().__init__(message)

    def as_issue(self) -> RowIssue:
        return RowIssue(self.case_id, self.field, "unresolved_location", str(self))


def resolve_location(case: ClassifiedCase, table: CityFrequencyTable, gazetteer: Gazetteer,
                     history_confidence: float = HISTORY_PLACE_CONFIDENCE) -> LocatedCase:
    rec = case.case
    if case.exposure is ExposureClass.DROPPED:
        raise UnresolvedLocation(rec.id, "class", f"case {rec.id} is dropped and cannot be located")

    def located(entry: GazetteerEntry, source: LocationSource, conf: float) -> LocatedCase:
        return LocatedCase(rec.id, case.exposure, entry.location, source, conf,
                           entry.canonical_name, case)

    # Travel cases were most likely infected away from their workplace.
    if case.exposure is not ExposureClass.TRAVEL:
        for mention in extract_place_mentions(rec.history_text, gazetteer):
            if mention.entry.kind in ("facility", "landmark"):
                return located(mention.entry, LocationSource.HISTORY_PLACE, history_confidence)

    if rec.city is not None:
        entry = gazetteer.lookup(rec.city)
        if entry is None:
            raise UnresolvedLocation(rec.id, "city", f"city {rec.city!r} not in gazetteer")
        return located(entry, LocationSource.CITY_GIVEN, CITY_GIVEN_CONFIDENCE)

    imputed = impute_city(rec, table)
    if imputed is not None:
        city, share = imputed
        entry = gazetteer.lookup(city)
        if entry is None:
            raise UnresolvedLocation(rec.id, "city", f"imputed city {city!r} not in gazetteer")
        return located(entry, LocationSource.CITY_IMPUTED, share)

    entry = gazetteer.lookup_county(rec.county)
    if entry is None:
        raise UnresolvedLocation(rec.id, "county", f"county {rec.county!r} not in gazetteer")
    return located(entry, LocationSource.COUNTY_ONLY, COUNTY_ONLY_CONFIDENCE)


def locate_all(classified: Sequence[ClassifiedCase], gazetteer: Gazetteer,
               region: Optional[BoundingBox] = None,
               history_confidence: float = HISTORY_PLACE_CONFIDENCE,
               ) -> tuple[list[LocatedCase], list[RowIssue]]:
    """Locate every non-dropped case; failures and out-of-region results become issues."""
    table = build_city_frequency(cc.case for cc in classified)
    located, issues = [], []
    for cc in classified:
        if cc.exposure is ExposureClass.DROPPED:
            continue
        try:
            lc = resolve_location(cc, table, gazetteer, history_confidence)
        except UnresolvedLocation as exc:
            issues.append(exc.as_issue())
            continue
        if region is not None and not region.contains(lc.location):
            issues.append(RowIssue(lc.case_id, "location", "outside_region",
                                   f"{lc.place} ({lc.location.lat}, {lc.location.lon}) "
                                   f"lies outside region {region}"))
            continue
        located.append(lc)
    located.sort(key=lambda lc: lc.case_id)
    return located, issues


# --- resolved-case table ---------------------------------------------------

LOCATED_COLUMNS = ("id", "class", "source", "confidence", "lat", "lon")


def write_located_table(cases: Iterable[LocatedCase], stats: Optional[DatasetStats] = None) -> str:
    """CSV with a version line and, optionally, the upstream dataset counts as comments."""
    buf = io.StringIO()
    buf.write(f"# {LOCATED_SCHEMA} {LOCATED_VERSION}\n")
    if stats is not None:
        buf.write("# stats " + " ".join(f"{k}={v}" for k, v in stats.as_dict().items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOCATED_COLUMNS)
    for lc in sorted(cases, key=lambda c: c.case_id):
        w.writerow([lc.case_id, lc.exposure.value, lc.source.value, repr(lc.confidence),
                    repr(lc.location.lat), repr(lc.location.lon)])
    return buf.getvalue()


def read_located_table(text: str) -> tuple[list[LocatedCase], Optional[DatasetStats]]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# {LOCATED_SCHEMA} "):
        raise SchemaVersionError(f"missing '# {LOCATED_SCHEMA} <version>' header line")
    try:
        version = int(lines[0].split()[2])
    except (IndexError, ValueError):
        raise SchemaVersionError(f"unreadable located-table header {lines[0]!r}") from None
    if version != LOCATED_VERSION:
        raise SchemaVersionError(
            f"located table is schema version {version}; this build reads version {LOCATED_VERSION}")
    stats = None
    body = []
    for ln in lines[1:]:
        if ln.startswith("# stats "):
            kv = dict(item.split("=", 1) for item in ln[len("# stats "):].split())
            stats = DatasetStats(**{k: int(v) for k, v in kv.items()})
        elif not ln.startswith("#"):
            body.append(ln)
    cases = []
    for row in csv.DictReader(io.StringIO("\n".join(body))):
        cases.append(LocatedCase(
            case_id=int(row["id"]),
            exposure=ExposureClass(row["class"]),
            location=GeoPoint(float(row["lat"]), float(row["lon"])),
            source=LocationSource(row["source"]),
            confidence=float(row["confidence"]),
        ))
    return cases, stats
