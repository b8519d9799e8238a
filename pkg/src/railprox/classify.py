"""Ordered regex rule engine assigning an exposure class to each case."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional, Sequence

from .errors import RulesetError
from .ingest import CaseRecord

RULES_VERSION = 1
DEFAULT_RULE_ID = "default"


class ExposureClass(str, enum.Enum):
    TRAVEL = "travel"
    COMMUNITY = "community"
    DROPPED = "dropped"


@dataclass(frozen=True)
class ClassificationRule:
    rule_id: str
    pattern: str
    target_class: ExposureClass
    priority: int

    def __post_init__(self):
        object.__setattr__(self, "_regex", compile_pattern(self.pattern, self.rule_id))

    def matches(self, text: str) -> bool:
        return self._regex.search(text) is not None


def compile_pattern(pattern: str, rule_id: str = "?") -> re.Pattern:
    """``re:`` prefix means a regular expression; anything else is a word-bounded phrase."""
    try:
        if pattern.startswith("re:"):
            return re.compile(pattern[3:], re.IGNORECASE)
        words = [re.escape(w) for w in pattern.split()]
        if not words:
            raise RulesetError(f"rule {rule_id!r}: empty pattern")
        return re.compile(r"(?<!\w)" + r"\s+".join(words) + r"(?!\w)", re.IGNORECASE)
    except re.error as exc:
        raise RulesetError(f"rule {rule_id!r}: invalid pattern {pattern!r}: {exc}") from None


@dataclass(frozen=True)
class Ruleset:
    rules: tuple[ClassificationRule, ...]
    version: int = RULES_VERSION

    def __post_init__(self):
        ids = [r.rule_id for r in self.rules]
        dup = {i for i in ids if ids.count(i) > 1}
        if dup:
            raise RulesetError(f"duplicate rule id(s): {', '.join(sorted(dup))}")
        prios = [r.priority for r in self.rules]
        dup_p = {p for p in prios if prios.count(p) > 1}
        if dup_p:
            raise RulesetError(f"duplicate priorities: {sorted(dup_p)}")
        if DEFAULT_RULE_ID in ids:
            raise RulesetError(f"rule id {DEFAULT_RULE_ID!r} is reserved")
        object.__setattr__(self, "rules", tuple(sorted(self.rules, key=lambda r: r.priority)))

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)


def parse_rules(text: str) -> Ruleset:
    rules = []
    version = RULES_VERSION
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("rules-version"):
            try:
                version = int(line.split()[1])
            except (IndexError, ValueError):
                raise RulesetError(f"line {lineno}: bad rules-version directive") from None
            if version > RULES_VERSION:
                raise RulesetError(
                    f"rules file version {version} is newer than supported {RULES_VERSION}")
            continue
        parts = line.split(None, 3)
        if len(parts) != 4:
            raise RulesetError(f"line {lineno}: expected 'priority rule_id class pattern'")
        prio, rule_id, cls, pattern = parts
        try:
            priority = int(prio)
        except ValueError:
            raise RulesetError(f"line {lineno}: rule {rule_id!r} has non-integer priority {prio!r}") from None
        try:
            target = ExposureClass(cls.lower())
        except ValueError:
            raise RulesetError(f"line {lineno}: rule {rule_id!r} has unknown class {cls!r}") from None
        rules.append(ClassificationRule(rule_id, pattern, target, priority))
    return Ruleset(tuple(rules), version)


@lru_cache(maxsize=1)
def default_ruleset() -> Ruleset:
    text = resources.files("railprox").joinpath("data/default_rules.txt").read_text("utf-8")
    return parse_rules(text)


def classify_history(history_text: str, ruleset: Optional[Ruleset] = None
                     ) -> tuple[ExposureClass, str]:
    """First matching rule wins; no match means community via the default rule."""
    rules = ruleset if ruleset is not None else default_ruleset()
    for rule in rules:
        if rule.matches(history_text):
            return rule.target_class, rule.rule_id
    return ExposureClass.COMMUNITY, DEFAULT_RULE_ID


@dataclass(frozen=True)
class ClassifiedCase:
    case: CaseRecord
    exposure: ExposureClass
    fired_rule: str


@dataclass(frozen=True)
class DatasetStats:
    total: int = 0
    travel: int = 0
    community: int = 0
    dropped: int = 0
    missing_city: int = 0

    def as_dict(self) -> dict:
        return {"total": self.total, "travel": self.travel, "community": self.community,
                "dropped": self.dropped, "missing_city": self.missing_city}


def compute_stats(classified: Sequence[ClassifiedCase]) -> DatasetStats:
    counts = {c: 0 for c in ExposureClass}
    for cc in classified:
        counts[cc.exposure] += 1
    return DatasetStats(
        total=len(classified),
        travel=counts[ExposureClass.TRAVEL],
        community=counts[ExposureClass.COMMUNITY],
        dropped=counts[ExposureClass.DROPPED],
        missing_city=sum(1 for cc in classified if cc.case.city is None),
    )


def classify_all(records: Iterable[CaseRecord], ruleset: Optional[Ruleset] = None
                 ) -> tuple[list[ClassifiedCase], DatasetStats]:
    rules = ruleset if ruleset is not None else default_ruleset()
    out = []
    for rec in records:
        cls, rule_id = classify_history(rec.history_text, rules)
        out.append(ClassifiedCase(rec, cls, rule_id))
    return out, compute_stats(out)
