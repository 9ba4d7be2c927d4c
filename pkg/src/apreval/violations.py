"""Normalized static-analysis violation records and report ingestion.

A violation is one analyzer finding: file, rule, type, severity, line span,
message. Reports are ingested through named adapters (native CSV always
registered, analyzer JSON exports via a shipped field-mapping file) and
normalized into a canonical sorted order so that all downstream matching is
deterministic. The identity used by matching is the four-field key
``(file, rule, start_line, end_line)``.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from typing import IO, Iterable, Mapping, NamedTuple

from .errors import (
    ConfigError,
    MalformedInputError,
    MissingRequiredFieldError,
    UnknownAdapterError,
)

RULE_ID_RE = re.compile(r"^S\d{1,5}$")

#: Header of the native normalized violation CSV.
CSV_HEADER = ("file", "rule", "type", "severity", "start_line", "end_line", "message")


class ViolationType(Enum):
    BUG = "Bug"
    CODE_SMELL = "CodeSmell"
    VULNERABILITY = "Vulnerability"


class Severity(Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"


class StateLabel(Enum):
    PRE_REPAIR = "pre"
    POST_REPAIR = "post"


def check_rule_id(code: str) -> str:
    """Validate an analyzer rule code (``S`` + 1-5 digits) and return it."""
    if not RULE_ID_RE.match(code):
        raise ValueError(f"invalid rule id {code!r}; expected 'S' followed by 1-5 digits")
    return code


class ViolationKey(NamedTuple):
    """Matching identity of a violation: message/type/severity excluded."""

    file_id: str
    rule: str
    start_line: int
    end_line: int


@dataclass(frozen=True)
class Violation:
    """One static-analysis finding at a file + line span."""

    file_id: str
    rule: str
    vtype: ViolationType
    severity: Severity
    start_line: int
    end_line: int
    message: str = ""

    def __post_init__(self) -> None:
        if not self.file_id:
            raise ValueError("file_id must be non-empty")
        check_rule_id(self.rule)
        if self.start_line < 1:
            raise ValueError(f"start_line must be >= 1, got {self.start_line}")
        if self.end_line < self.start_line:
            raise ValueError(
                f"end_line {self.end_line} precedes start_line {self.start_line}"
            )

    @property
    def key(self) -> ViolationKey:
        return ViolationKey(self.file_id, self.rule, self.start_line, self.end_line)

    @property
    def span(self) -> tuple[int, int]:
        return (self.start_line, self.end_line)


def key_of(v: Violation) -> ViolationKey:
    """Project a violation onto its matching key."""
    return v.key


@dataclass(frozen=True)
class RuleProfile:
    """An ordered set of rule ids; order is the tool's application order."""

    name: str
    rules: tuple[str, ...]

    def __post_init__(self) -> None:
        for r in self.rules:
            check_rule_id(r)
        if len(set(self.rules)) != len(self.rules):
            raise ValueError(f"profile {self.name!r} contains duplicate rule ids")

    @property
    def application_order(self) -> tuple[str, ...]:
        return self.rules

    def __contains__(self, rule: str) -> bool:
        return rule in set(self.rules)


#: The 30 repairable rules, in the repair tool's application order.
SORALD_30 = RuleProfile(
    name="sorald-30",
    rules=(
        "S1118", "S1068", "S1854", "S1481", "S1132", "S1444", "S2184", "S2142",
        "S1948", "S2095", "S4973", "S2057", "S2111", "S1656", "S2755", "S1155",
        "S2116", "S1217", "S2272", "S1860", "S2097", "S3067", "S3984", "S3032",
        "S4065", "S2167", "S1596", "S2204", "S2225", "S2164",
    ),
)

PROFILES: dict[str, RuleProfile] = {SORALD_30.name: SORALD_30}


def get_profile(name: str) -> RuleProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError("profile", f"unknown profile {name!r}; known: {', '.join(sorted(PROFILES))}") from None


def normalize_path(path: str) -> str:
    """Canonicalize a file id to forward-slash relative form."""
    p = path.replace("\\", "/")
    while p.startswith("./"):
        p = p[2:]
    # collapse duplicate separators; keep the path otherwise untouched
    while "//" in p:
        p = p.replace("//", "/")
    return p


def _sort_key(v: Violation) -> tuple:
    return (
        v.file_id, v.rule, v.start_line, v.end_line,
        v.vtype.value, v.severity.value, v.message,
    )


@dataclass(frozen=True)
class ViolationReport:
    """A set of violations for one corpus state (pre- or post-repair)."""

    state: StateLabel
    entries: tuple[Violation, ...]
    profile: RuleProfile | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def normalize_report(report: ViolationReport) -> ViolationReport:
    """Canonicalize paths and sort entries; idempotent."""
    entries = tuple(
        sorted(
            (replace(v, file_id=normalize_path(v.file_id)) for v in report.entries),
            key=_sort_key,
        )
    )
    return replace(report, entries=entries)


@dataclass(frozen=True)
class ReportWarning:
    kind: str  # "out_of_profile" | "duplicate_entry" | "blank_file_id"
    detail: str


def validate_report(report: ViolationReport, profile: RuleProfile) -> list[ReportWarning]:
    """Lint a report against a profile; never mutates the report."""
    warnings: list[ReportWarning] = []
    in_profile = set(profile.rules)
    seen_rules: set[str] = set()
    for v in report.entries:
        if v.rule not in in_profile and v.rule not in seen_rules:
            warnings.append(ReportWarning("out_of_profile", f"rule {v.rule} is not in profile {profile.name!r}"))
            seen_rules.add(v.rule)
        if not v.file_id.strip():
            warnings.append(ReportWarning("blank_file_id", f"entry at {v.key} has a blank file id"))
    counts: dict[tuple, int] = {}
    for v in report.entries:
        counts[_sort_key(v)] = counts.get(_sort_key(v), 0) + 1
    for k, n in sorted(counts.items()):
        if n > 1:
            warnings.append(
                ReportWarning("duplicate_entry", f"{n} byte-identical entries for {k[0]}:{k[1]}@{k[2]}-{k[3]}")
            )
    return warnings


# --- adapters ----------------------------------------------------------------

_ENUM_ALIASES_TYPE = {
    "bug": ViolationType.BUG,
    "codesmell": ViolationType.CODE_SMELL,
    "code_smell": ViolationType.CODE_SMELL,
    "vulnerability": ViolationType.VULNERABILITY,
}
_ENUM_ALIASES_SEV = {
    "high": Severity.HIGH,
    "medium": Severity.MEDIUM,
    "low": Severity.LOW,
}


def _parse_vtype(raw: str, line: int) -> ViolationType:
    try:
        return _ENUM_ALIASES_TYPE[raw.strip().lower()]
    except KeyError:
        raise MalformedInputError(f"unknown violation type {raw!r}", line) from None


def _parse_severity(raw: str, line: int) -> Severity:
    try:
        return _ENUM_ALIASES_SEV[raw.strip().lower()]
    except KeyError:
        raise MalformedInputError(f"unknown severity {raw!r}", line) from None


def _parse_line_no(raw: str, name: str, line: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise MalformedInputError(f"{name} must be an integer, got {raw!r}", line) from None


def _decode(raw: bytes | str | IO) -> str:
    if isinstance(raw, bytes):
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInputError(f"stream is not valid UTF-8: {exc}") from None
    if isinstance(raw, str):
        return raw
    data = raw.read()
    if isinstance(data, bytes):
        return _decode(data)
    return data


def _csv_adapter(text: str, options: Mapping) -> Iterable[Violation]:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedInputError("empty stream: expected a header row", 1) from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise MalformedInputError(
            f"unexpected header {header!r}; expected {','.join(CSV_HEADER)}", 1
        )
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise MalformedInputError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", lineno)
        rec = dict(zip(CSV_HEADER, row))
        for required in ("file", "rule", "type", "severity", "start_line", "end_line"):
            if not rec[required].strip():
                raise MissingRequiredFieldError(required, lineno)
        try:
            yield Violation(
                file_id=rec["file"],
                rule=rec["rule"].strip(),
                vtype=_parse_vtype(rec["type"], lineno),
                severity=_parse_severity(rec["severity"], lineno),
                start_line=_parse_line_no(rec["start_line"], "start_line", lineno),
                end_line=_parse_line_no(rec["end_line"], "end_line", lineno),
                message=rec["message"],
            )
        except ValueError as exc:
            raise MalformedInputError(str(exc), lineno) from None


def _load_json_mappings() -> dict:
    with resources.files("apreval.data").joinpath("analyzer_json_mappings.json").open(
        "r", encoding="utf-8"
    ) as fh:
        return json.load(fh)


def _analyzer_json_adapter(text: str, options: Mapping) -> Iterable[Violation]:
    mappings = _load_json_mappings()
    mapping_name = options.get("mapping", "sonarqube-9")
    if mapping_name not in mappings:
        raise UnknownAdapterError(mapping_name, list(mappings))
    m = mappings[mapping_name]
    fallback = bool(options.get("end_line_fallback", False))
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    issues = doc.get(m["issues_key"])
    if issues is None:
        raise MissingRequiredFieldError(m["issues_key"])
    f = m["fields"]
    for i, issue in enumerate(issues):
        def get(path: str, *, required: bool = True):
            node = issue
            for part in path.split("."):
                if not isinstance(node, dict) or part not in node:
                    if required:
                        raise MissingRequiredFieldError(f"{path} (issue {i})")
                    return None
                node = node[part]
            return node

        component = str(get(f["file"]))
        if m.get("file_strip_prefix_through"):
            sep = m["file_strip_prefix_through"]
            if sep in component:
                component = component.split(sep, 1)[1]
        rule = str(get(f["rule"]))
        if m.get("rule_strip_prefix_through"):
            sep = m["rule_strip_prefix_through"]
            if sep in rule:
                rule = rule.split(sep, 1)[1]
        start_line = get(f["start_line"])
        end_line = get(f["end_line"], required=False)
        if end_line is None:
            if not fallback:
                raise MissingRequiredFieldError(f"{f['end_line']} (issue {i})")
            end_line = start_line
        raw_type = str(get(f["type"]))
        raw_sev = str(get(f["severity"]))
        try:
            vtype = ViolationType(m["type_map"][raw_type])
            severity = Severity(m["severity_map"][raw_sev])
        except KeyError as exc:
            raise MalformedInputError(f"unmapped enum value {exc} (issue {i})") from None
        message = get(f["message"], required=False) or ""
        try:
            yield Violation(
                file_id=component,
                rule=rule,
                vtype=vtype,
                severity=severity,
                start_line=int(start_line),
                end_line=int(end_line),
                message=str(message),
            )
        except (TypeError, ValueError) as exc:
            raise MalformedInputError(f"issue {i}: {exc}") from None


ADAPTERS = {
    "csv": _csv_adapter,
    "analyzer-json": _analyzer_json_adapter,
}


def register_adapter(name: str, fn) -> None:
    """Register a report adapter: ``fn(text, options) -> iterable of Violation``."""
    ADAPTERS[name] = fn


def parse_report(
    raw: bytes | str | IO,
    adapter: str = "csv",
    state: StateLabel = StateLabel.PRE_REPAIR,
    options: Mapping | None = None,
    profile: RuleProfile | None = None,
) -> ViolationReport:
    """Ingest a raw analyzer report through a named adapter and normalize it."""
    if adapter not in ADAPTERS:
        raise UnknownAdapterError(adapter, list(ADAPTERS))
    text = _decode(raw)
    entries = tuple(ADAPTERS[adapter](text, options or {}))
    return normalize_report(ViolationReport(state=state, entries=entries, profile=profile))


def serialize_report(report: ViolationReport) -> str:
    """Render a report in the native normalized CSV format (UTF-8, LF)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for v in report.entries:
        writer.writerow(
            [v.file_id, v.rule, v.vtype.value, v.severity.value, v.start_line, v.end_line, v.message]
        )
    return buf.getvalue()
