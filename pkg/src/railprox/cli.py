"""Command-line pipeline: classify, locate, analyze, report.

Usage:
  railprox run --cases cases.csv --gazetteer gaz.csv --rails rails.geojson --seed 7 --out out/
  railprox classify-only --cases cases.csv --out stage1/
  railprox locate-only --classified stage1/classified.json --gazetteer gaz.csv --out stage2/
  railprox analyze-only --located stage2/located.csv --rails rails.geojson --seed 7 --out stage3/

Every stage writes plain files, so a run can be inspected or restarted at
any boundary. Chaining the three ``-only`` commands reproduces ``run``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

from . import analyze as an
from .classify import (ClassifiedCase, DatasetStats, ExposureClass, Ruleset, classify_all,
                       default_ruleset, parse_rules)
from .errors import (ConfigError, GeometryError, RailproxError, SchemaVersionError,
                     StageError)
from .geo import CHICAGO_REGION, BoundingBox
from .ingest import (CaseRecord, RowIssue, load_gazetteer, load_rail_lines,
                     parse_case_records, write_issue_log)
from .locate import (HISTORY_PLACE_CONFIDENCE, LocatedCase, LocationSource, locate_all,
                     read_located_table, write_located_table)
from .report import dumps_report, emit_geojson, emit_summary, render_text, validate_report

log = logging.getLogger("railprox")

CLASSIFIED_SCHEMA = "railprox-classified"
CLASSIFIED_VERSION = 1

ISSUES_FILE = "issues.jsonl"
CLASSIFIED_FILE = "classified.json"
LOCATED_FILE = "located.csv"
MAP_FILE = "map.geojson"
REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"


@dataclass(frozen=True)
class RunConfig:
    cases: Path
    gazetteer: Path
    rails: Path
    seed: int
    out: Path
    rules: Optional[Path] = None
    n_perm: int = an.DEFAULT_PERMUTATIONS
    n_sim: int = an.DEFAULT_SIMULATIONS
    confidence_threshold: float = 0.0
    region: BoundingBox = CHICAGO_REGION
    history_confidence: float = HISTORY_PLACE_CONFIDENCE

    def validate(self) -> None:
        for label, path in (("cases", self.cases), ("gazetteer", self.gazetteer),
                            ("rails", self.rails), ("rules", self.rules)):
            if path is not None:
                _check_readable(label, path)
        _check_analysis_settings(self.seed, self.n_perm, self.n_sim, self.confidence_threshold)


def _check_analysis_settings(seed: int, n_perm: int, n_sim: int, threshold: float) -> None:
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    if n_perm < an.MIN_REPLICATES:
        raise ConfigError(f"--permutations must be >= {an.MIN_REPLICATES}, got {n_perm}")
    if n_sim < an.MIN_REPLICATES:
        raise ConfigError(f"--simulations must be >= {an.MIN_REPLICATES}, got {n_sim}")
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"--confidence-threshold must be in [0, 1], got {threshold}")


def _check_readable(label: str, path: Path) -> None:
    if not path.is_file() or not os.access(path, os.R_OK):
        raise ConfigError(f"{label} file not readable: {path}")


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8-sig")


def _load_rules(path: Optional[Path]) -> Ruleset:
    return parse_rules(_read(path)) if path is not None else default_ruleset()


class _Stage:
    """Context manager that tags any package error with the stage name."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (RailproxError, ValueError, KeyError, OSError)) \
                and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


class _Outputs:
    """Stage files into a scratch directory and move them into place only on success."""

    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def commit(self) -> list[Path]:
        self.out.mkdir(parents=True, exist_ok=True)
        scratch = Path(tempfile.mkdtemp(prefix=".railprox-", dir=self.out))
        try:
            for name, text in self.files.items():
                (scratch / name).write_text(text, encoding="utf-8", newline="\n")
            written = []
            for name in self.files:
                os.replace(scratch / name, self.out / name)
                written.append(self.out / name)
            return written
        finally:
            shutil.rmtree(scratch, ignore_errors=True)


# --- stage functions -------------------------------------------------------

def stage_classify(cases_text: str, ruleset: Ruleset
                   ) -> tuple[list[ClassifiedCase], DatasetStats, list[RowIssue]]:
    with _Stage("ingest"):
        records, issues = parse_case_records(cases_text)
    with _Stage("classify"):
        classified, stats = classify_all(records, ruleset)
    return classified, stats, issues


def stage_locate(classified, gazetteer_text: str, region: BoundingBox,
                 history_confidence: float = HISTORY_PLACE_CONFIDENCE):
    with _Stage("locate"):
        gazetteer = load_gazetteer(gazetteer_text)
        return locate_all(classified, gazetteer, region, history_confidence)


def stage_analyze(located: Sequence[LocatedCase], stats: DatasetStats, rails_text: str,
                  region: BoundingBox, seed: int, n_perm: int, n_sim: int,
                  threshold: float) -> dict[str, str]:
    with _Stage("analyze"):
        lines = load_rail_lines(rails_text, region)
        result = an.sensitivity_rerun(located, lines, region, seed, threshold, n_perm, n_sim)
        eligible = [c for c in located if c.eligible]
        distances = {cid: (line_id, d)
                     for cid, line_id, d in an.nearest_rail_distances(eligible, lines)}
        clusters = an.cluster_coincident(eligible)
    with _Stage("report"):
        doc = emit_summary(stats, result, clusters, located)
        validate_report(doc)
        return {
            MAP_FILE: emit_geojson(located, lines, distances),
            REPORT_JSON: dumps_report(doc),
            REPORT_TXT: render_text(doc),
        }


def _stats_from_located(located: Sequence[LocatedCase]) -> DatasetStats:
    return DatasetStats(
        total=len(located),
        travel=sum(c.exposure is ExposureClass.TRAVEL for c in located),
        community=sum(c.exposure is ExposureClass.COMMUNITY for c in located),
        dropped=0,
        missing_city=sum(c.source in (LocationSource.CITY_IMPUTED, LocationSource.COUNTY_ONLY)
                         for c in located))


# --- classified stage file -------------------------------------------------

def dump_classified(classified: Sequence[ClassifiedCase], stats: DatasetStats,
                    issues: Sequence[RowIssue], ruleset: Ruleset) -> str:
    doc = {
        "schema": CLASSIFIED_SCHEMA,
        "schema_version": CLASSIFIED_VERSION,
        "rules_version": ruleset.version,
        "stats": stats.as_dict(),
        "issues": [json.loads(i.to_json()) for i in issues],
        "cases": [{"id": cc.case.id, "date_announced": cc.case.date_announced.isoformat(),
                   "county": cc.case.county, "city": cc.case.city,
                   "history": cc.case.history_text, "class": cc.exposure.value,
                   "fired_rule": cc.fired_rule} for cc in classified],
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load_classified(text: str) -> tuple[list[ClassifiedCase], DatasetStats, list[RowIssue]]:
    doc = json.loads(text)
    if doc.get("schema") != CLASSIFIED_SCHEMA:
        raise SchemaVersionError(f"not a classified-case file (schema {doc.get('schema')!r})")
    if doc.get("schema_version") != CLASSIFIED_VERSION:
        raise SchemaVersionError(
            f"classified file is schema version {doc.get('schema_version')}; "
            f"this build reads version {CLASSIFIED_VERSION}")
    classified = [
        ClassifiedCase(CaseRecord(c["id"], date.fromisoformat(c["date_announced"]), c["county"],
                                  c["city"], c["history"]),
                       ExposureClass(c["class"]), c["fired_rule"])
        for c in doc["cases"]]
    issues = [RowIssue(**i) for i in doc["issues"]]
    return classified, DatasetStats(**doc["stats"]), issues


# --- orchestration ---------------------------------------------------------

def run_pipeline(config: RunConfig) -> list[Path]:
    """Run every stage and write the five artifacts; nothing is written on failure."""
    with _Stage("config"):
        config.validate()
        ruleset = _load_rules(config.rules)
    classified, stats, issues = stage_classify(_read(config.cases), ruleset)
    located, loc_issues = stage_locate(classified, _read(config.gazetteer), config.region,
                                       config.history_confidence)
    located_table = write_located_table(located, stats)
    artifacts = stage_analyze(located, stats, _read(config.rails), config.region, config.seed,
                              config.n_perm, config.n_sim, config.confidence_threshold)
    outputs = _Outputs(config.out)
    outputs.add(ISSUES_FILE, write_issue_log(list(issues) + list(loc_issues)))
    outputs.add(LOCATED_FILE, located_table)
    for name, text in artifacts.items():
        outputs.add(name, text)
    return outputs.commit()


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rails", type=Path, required=True, help="GeoJSON or GTFS shapes file")
    p.add_argument("--seed", type=int, required=True, help="random seed (mandatory)")
    p.add_argument("--permutations", type=int, default=an.DEFAULT_PERMUTATIONS)
    p.add_argument("--simulations", type=int, default=an.DEFAULT_SIMULATIONS)
    p.add_argument("--confidence-threshold", type=float, default=0.0)


def _region_arg(text: str) -> BoundingBox:
    try:
        return BoundingBox.parse(text)
    except GeometryError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_region(p: argparse.ArgumentParser) -> None:
    p.add_argument("--region", type=_region_arg, default=CHICAGO_REGION,
                   help="min_lat,min_lon,max_lat,max_lon (default: greater Chicago)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="railprox", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full pipeline")
    run.add_argument("--cases", type=Path, required=True)
    run.add_argument("--gazetteer", type=Path, required=True)
    run.add_argument("--rules", type=Path, default=None, help="override the built-in ruleset")
    _add_analysis_flags(run)
    _add_region(run)
    run.add_argument("--out", type=Path, required=True)

    cl = sub.add_parser("classify-only", help="ingest and classify cases")
    cl.add_argument("--cases", type=Path, required=True)
    cl.add_argument("--rules", type=Path, default=None)
    cl.add_argument("--out", type=Path, required=True)

    lo = sub.add_parser("locate-only", help="geocode a classified-case file")
    lo.add_argument("--classified", type=Path, required=True)
    lo.add_argument("--gazetteer", type=Path, required=True)
    _add_region(lo)
    lo.add_argument("--out", type=Path, required=True)

    az = sub.add_parser("analyze-only", help="analyze a located-case table")
    az.add_argument("--located", type=Path, required=True)
    _add_analysis_flags(az)
    _add_region(az)
    az.add_argument("--out", type=Path, required=True)
    return parser


def _dispatch(args) -> list[Path]:
    if args.command == "run":
        return run_pipeline(RunConfig(
            cases=args.cases, gazetteer=args.gazetteer, rails=args.rails, rules=args.rules,
            seed=args.seed, out=args.out, n_perm=args.permutations, n_sim=args.simulations,
            confidence_threshold=args.confidence_threshold, region=args.region))

    outputs = _Outputs(args.out)
    if args.command == "classify-only":
        with _Stage("config"):
            _check_readable("cases", args.cases)
            ruleset = _load_rules(args.rules)
        classified, stats, issues = stage_classify(_read(args.cases), ruleset)
        outputs.add(CLASSIFIED_FILE, dump_classified(classified, stats, issues, ruleset))
        outputs.add(ISSUES_FILE, write_issue_log(issues))

    elif args.command == "locate-only":
        with _Stage("config"):
            _check_readable("classified", args.classified)
            _check_readable("gazetteer", args.gazetteer)
            classified, stats, issues = load_classified(_read(args.classified))
        located, loc_issues = stage_locate(classified, _read(args.gazetteer), args.region)
        outputs.add(LOCATED_FILE, write_located_table(located, stats))
        outputs.add(ISSUES_FILE, write_issue_log(list(issues) + list(loc_issues)))

    elif args.command == "analyze-only":
        with _Stage("config"):
            _check_readable("located", args.located)
            _check_readable("rails", args.rails)
            _check_analysis_settings(args.seed, args.permutations, args.simulations,
                                     args.confidence_threshold)
            located, stats = read_located_table(_read(args.located))
        if stats is None:
            stats = _stats_from_located(located)
        artifacts = stage_analyze(located, stats, _read(args.rails), args.region, args.seed,
                                  args.permutations, args.simulations, args.confidence_threshold)
        for name, text in artifacts.items():
            outputs.add(name, text)
    return outputs.commit()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        written = _dispatch(args)
    except StageError as exc:
        err = {"stage": exc.stage, "type": type(exc.cause).__name__, "message": str(exc.cause)}
        print(json.dumps({"error": err}, sort_keys=True), file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
