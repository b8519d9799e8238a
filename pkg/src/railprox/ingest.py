"""Parsing of the three input artifacts: case table, gazetteer, rail geometry.

Every data row of the case table ends up either as a ``CaseRecord`` or as a
``RowIssue``; nothing is silently discarded.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import asdict, dataclass, field
from datetime import date
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ConfigError, EmptyInputError, GazetteerError, GeometryError
from .geo import CHICAGO_REGION, BoundingBox, GeoPoint

# Logical field -> accepted source column names, first match wins. The
# original export's headers (including the "histroy" misspelling) come first.
DEFAULT_SCHEMA: dict[str, tuple[str, ...]] = {
    "id": ("id", ""),
    "date_announced": ("data_announced", "date_announced"),
    "county": ("COUNTY", "county"),
    "city": ("CITY", "city"),
    "history": ("histroy", "history"),
}
REQUIRED_FIELDS = ("date_announced", "county", "city", "history")

UNKNOWN_CITY = "unknown"

_DATE_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CaseRecord:
    id: int
    date_announced: date
    county: str
    city: Optional[str]
    history_text: str


@dataclass(frozen=True)
class RowIssue:
    row: int
    field: str
    code: str
    message: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def normalize_place(name: str) -> str:
    """Strip periods, collapse whitespace, title-case.

    Words that already mix upper and lower case ("McHenry", "LaSalle") are
    kept as written so the result is idempotent and keeps internal capitals.
    """
    words = _WS_RE.sub(" ", name.replace(".", " ")).strip().split(" ")
    out = []
    for w in words:
        if w.islower() or w.isupper():
            w = w[:1].upper() + w[1:].lower()
        out.append(w)
    return " ".join(w for w in out if w)


def place_key(name: str) -> str:
    """Case- and punctuation-insensitive lookup key for place names."""
    return normalize_place(name).casefold()


def normalize_history(text: str) -> str:
    return text.strip().lower()


def parse_date(text: str) -> date:
    m = _DATE_RE.match(text.strip())
    if not m:
        raise ValueError(f"expected M/D/YYYY, got {text!r}")
    month, day, year = (int(g) for g in m.groups())
    return date(year, month, day)


def format_date(d: date) -> str:
    return f"{d.month}/{d.day}/{d.year}"


def sniff_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def _read_table(raw_table: str) -> tuple[list[str], list[list[str]]]:
    text = raw_table.lstrip("﻿").lstrip("\r\n")
    if not text.strip():
        raise EmptyInputError("input table is empty")
    delim = sniff_delimiter(text.splitlines()[0])
    rows = [r for r in csv.reader(io.StringIO(text, newline=""), delimiter=delim)
            if any(c.strip() for c in r)]
    return [h.strip() for h in rows[0]], rows[1:]


def _resolve_columns(header: Sequence[str], schema_config: Optional[Mapping]) -> dict[str, Optional[int]]:
    schema: dict[str, tuple[str, ...]] = dict(DEFAULT_SCHEMA)
    for key, value in (schema_config or {}).items():
        if key not in DEFAULT_SCHEMA:
            raise ConfigError(f"unknown schema field {key!r}")
        schema[key] = (value,) if isinstance(value, str) else tuple(value)

    columns: dict[str, Optional[int]] = {}
    for logical, candidates in schema.items():
        idx = next((header.index(c) for c in candidates if c in header), None)
        if idx is None and logical in REQUIRED_FIELDS:
            raise ConfigError(
                f"missing required column for {logical!r}: expected one of "
                + ", ".join(repr(c) for c in candidates))
        columns[logical] = idx
    return columns


def parse_case_records(raw_table: str, schema_config: Optional[Mapping] = None
                       ) -> tuple[list[CaseRecord], list[RowIssue]]:
    """Parse a delimited case table into records and row issues.

    ``schema_config`` maps logical fields (``id``, ``date_announced``,
    ``county``, ``city``, ``history``) to a source column name or a list of
    candidates. Without an ``id`` column, the 1-based data row number is used.
    """
    header, rows = _read_table(raw_table)
    if not rows:
        raise EmptyInputError("case table has a header but no data rows")
    cols = _resolve_columns(header, schema_config)

    def cell(row, logical):
        idx = cols[logical]
        if idx is None or idx >= len(row):
            return ""
        return row[idx].strip()

    records: list[CaseRecord] = []
    issues: list[RowIssue] = []
    seen_ids: set[int] = set()
    for n, row in enumerate(rows, start=1):
        raw_id = cell(row, "id")
        if raw_id:
            try:
                rid = int(raw_id)
            except ValueError:
                issues.append(RowIssue(n, "id", "bad_id", f"row id {raw_id!r} is not an integer"))
                continue
        else:
            rid = n
        if rid in seen_ids:
            issues.append(RowIssue(rid, "id", "duplicate_id", f"row id {rid} appears twice"))
            continue

        try:
            announced = parse_date(cell(row, "date_announced"))
        except ValueError as exc:
            issues.append(RowIssue(rid, "date_announced", "bad_date", str(exc)))
            continue

        county = normalize_place(cell(row, "county"))
        if not county:
            issues.append(RowIssue(rid, "county", "missing_county", "county is empty"))
            continue

        city_raw = cell(row, "city")
        city = None if city_raw.casefold() == UNKNOWN_CITY else normalize_place(city_raw) or None

        seen_ids.add(rid)
        records.append(CaseRecord(rid, announced, county, city,
                                  normalize_history(cell(row, "history"))))
    return records, issues


CANONICAL_HEADER = ["id", "data_announced", "COUNTY", "CITY", "histroy"]


def write_case_records(records: Iterable[CaseRecord]) -> str:
    """Serialize records to the canonical CSV form that ``parse_case_records`` reads back."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CANONICAL_HEADER)
    for r in records:
        w.writerow([r.id, format_date(r.date_announced), r.county,
                    r.city if r.city is not None else "Unknown", r.history_text])
    return buf.getvalue()


def write_issue_log(issues: Iterable[RowIssue]) -> str:
    return "".join(i.to_json() + "\n" for i in issues)


# --- gazetteer -------------------------------------------------------------

KINDS = ("city", "landmark", "facility", "county")


@dataclass(frozen=True)
class GazetteerEntry:
    canonical_name: str
    aliases: tuple[str, ...]
    kind: str
    county: Optional[str]
    location: GeoPoint

    @property
    def names(self) -> tuple[str, ...]:
        return (self.canonical_name,) + self.aliases


@dataclass
class Gazetteer:
    entries: list[GazetteerEntry] = field(default_factory=list)
    _index: dict[str, GazetteerEntry] = field(default_factory=dict, repr=False)
    _patterns: Optional[list] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        entries, self.entries = self.entries, []
        for e in entries:
            self.add(e)

    def add(self, entry: GazetteerEntry) -> None:
        if place_key(entry.canonical_name) in self._index:
            other = self._index[place_key(entry.canonical_name)]
            if other.canonical_name.casefold() == entry.canonical_name.casefold():
                raise GazetteerError(f"duplicate canonical name {entry.canonical_name!r}")
        for name in entry.names:
            key = place_key(name)
            other = self._index.get(key)
            if other is not None and other is not entry:
                raise GazetteerError(
                    f"name {name!r} of {entry.canonical_name!r} collides with "
                    f"entry {other.canonical_name!r}")
        for name in entry.names:
            self._index[place_key(name)] = entry
        self.entries.append(entry)
        self._patterns = None

    def name_patterns(self) -> list[tuple[re.Pattern, GazetteerEntry]]:
        """Word-bounded regex for every name and alias; periods optional, whitespace flexible."""
        if self._patterns is None:
            pats = []
            for e in self.entries:
                for name in e.names:
                    tokens = [re.escape(t).replace(r"\.", r"\.?") for t in name.lower().split()]
                    pats.append((re.compile(r"(?<!\w)" + r"\s+".join(tokens) + r"(?!\w)"), e))
            self._patterns = pats
        return self._patterns

    def lookup(self, name: str) -> Optional[GazetteerEntry]:
        return self._index.get(place_key(name))

    def lookup_county(self, county: str) -> Optional[GazetteerEntry]:
        """County centroids are stored as ``<name> County`` entries of kind county."""
        e = self.lookup(f"{county} County")
        return e if e is not None and e.kind == "county" else None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


GAZETTEER_COLUMNS = ("canonical_name", "aliases", "kind", "county", "lat", "lon")


def load_gazetteer(raw_table: str) -> Gazetteer:
    header, rows = _read_table(raw_table)
    missing = [c for c in GAZETTEER_COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"gazetteer missing column(s): {', '.join(missing)}")
    col = {c: header.index(c) for c in GAZETTEER_COLUMNS}
    gaz = Gazetteer()
    for n, row in enumerate(rows, start=2):
        get = lambda c: row[col[c]].strip() if col[c] < len(row) else ""
        name = get("canonical_name")
        if not name:
            raise GazetteerError(f"line {n}: empty canonical_name")
        kind = get("kind").lower()
        if kind not in KINDS:
            raise GazetteerError(f"line {n}: kind {kind!r} not one of {', '.join(KINDS)}")
        try:
            lat, lon = float(get("lat")), float(get("lon"))
        except ValueError:
            raise GazetteerError(f"line {n}: non-numeric lat/lon for {name!r}") from None
        if not (-90 <= lat <= 90 and -180 <= lon <= 180):
            raise GazetteerError(f"line {n}: lat/lon ({lat}, {lon}) out of range for {name!r}")
        aliases = tuple(a.strip().lower() for a in get("aliases").split(";") if a.strip())
        gaz.add(GazetteerEntry(name, aliases, kind, normalize_place(get("county")) or None,
                               GeoPoint(lat, lon)))
    return gaz


# --- rail geometry ---------------------------------------------------------

@dataclass(frozen=True)
class RailLine:
    line_id: str
    vertices: tuple[GeoPoint, ...]

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise GeometryError(f"line {self.line_id!r} has fewer than 2 vertices")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if a == b:
                raise GeometryError(f"line {self.line_id!r} repeats vertex ({a.lat}, {a.lon})")


def _build_line(line_id: str, coords: Sequence[tuple[float, float]], region: BoundingBox) -> RailLine:
    verts: list[GeoPoint] = []
    for lat, lon in coords:
        try:
            p = GeoPoint(lat, lon)
        except GeometryError as exc:
            raise GeometryError(f"line {line_id!r}: {exc}") from None
        if not region.contains(p):
            raise GeometryError(f"line {line_id!r}: vertex ({lat}, {lon}) outside region {region}")
        if not verts or verts[-1] != p:
            verts.append(p)
    if len(verts) < 2:
        raise GeometryError(f"line {line_id!r} has fewer than 2 distinct vertices")
    return RailLine(line_id, tuple(verts))


def rail_lines_from_geojson(doc: Mapping, region: BoundingBox = CHICAGO_REGION,
                            id_property: str = "line_id") -> list[RailLine]:
    """LineString features map to one line; MultiLineString parts each become a line with the same id."""
    if doc.get("type") == "Feature":
        features = [doc]
    elif doc.get("type") == "FeatureCollection":
        features = doc.get("features", [])
    else:
        raise GeometryError(f"expected Feature or FeatureCollection, got {doc.get('type')!r}")
    lines = []
    for i, feat in enumerate(features):
        props = feat.get("properties") or {}
        line_id = props.get(id_property)
        if line_id is None:
            raise GeometryError(f"feature {i} lacks the {id_property!r} property")
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        if gtype == "LineString":
            parts = [geom["coordinates"]]
        elif gtype == "MultiLineString":
            parts = geom["coordinates"]
        else:
            raise GeometryError(f"line {line_id!r}: unsupported geometry type {gtype!r}")
        for part in parts:
            lines.append(_build_line(str(line_id), [(c[1], c[0]) for c in part], region))
    return lines


_GTFS_ALIASES = {
    "shape_id": ("shape_id",),
    "lat": ("shape_pt_lat", "lat"),
    "lon": ("shape_pt_lon", "lon"),
    "sequence": ("shape_pt_sequence", "sequence"),
}


def rail_lines_from_gtfs(raw_table: str, region: BoundingBox = CHICAGO_REGION) -> list[RailLine]:
    header, rows = _read_table(raw_table)
    col = {}
    for key, names in _GTFS_ALIASES.items():
        idx = next((header.index(n) for n in names if n in header), None)
        if idx is None:
            raise ConfigError(f"GTFS shapes table missing column {names[0]!r}")
        col[key] = idx
    shapes: dict[str, list[tuple[int, float, float]]] = {}
    for n, row in enumerate(rows, start=2):
        try:
            shapes.setdefault(row[col["shape_id"]].strip(), []).append(
                (int(row[col["sequence"]]), float(row[col["lat"]]), float(row[col["lon"]])))
        except (ValueError, IndexError):
            raise GeometryError(f"GTFS shapes line {n}: unparseable row {row!r}") from None
    return [_build_line(sid, [(lat, lon) for _, lat, lon in sorted(pts)], region)
            for sid, pts in shapes.items()]


def load_rail_lines(geometry_input: str, region: BoundingBox = CHICAGO_REGION,
                    id_property: str = "line_id") -> list[RailLine]:
    """Load rail lines from GeoJSON text or a GTFS shapes table, detected by content."""
    stripped = geometry_input.lstrip("﻿ \t\r\n")
    if not stripped:
        raise EmptyInputError("rail geometry input is empty")
    if stripped.startswith("{"):
        return rail_lines_from_geojson(json.loads(stripped), region, id_property)
    return rail_lines_from_gtfs(stripped, region)
