"""Behavior-preservation analysis from per-test outcomes.

Generated tests that pass on the original code form a baseline; the same
tests are run on the repaired code and every non-pass becomes a
regression. Failures are bucketed by exception kind and compile
diagnostics by javac message, both through substring-pattern tables
shipped as editable data files, keeping the module runner-agnostic.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import IO, Iterable, Mapping, Sequence

from .errors import MalformedInputError, UnknownAdapterError

RESULTS_CSV_HEADER = ("test_id", "target_file", "status", "failure_kind")


class TestStatus(Enum):
    __test__ = False  # domain class, not a pytest case

    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


@dataclass(frozen=True)
class TestOutcome:
    """One test case's result in one corpus state."""

    __test__ = False  # domain class, not a pytest case

    test_id: str
    target_file: str | None
    status: TestStatus
    failure_kind: str | None = None

    def __post_init__(self) -> None:
        if (self.status is TestStatus.FAIL) != (self.failure_kind is not None):
            raise ValueError("failure_kind must be present exactly for failing outcomes")


class FailureClass(Enum):
    ILLEGAL_ACCESS = "IllegalAccess"
    NO_CLASS_DEF = "NoClassDef"
    ASSERTION = "Assertion"
    SIMULATION_ARTIFACT = "SimulationArtifact"
    OTHER = "Other"


class CompileErrorClass(Enum):
    CANNOT_FIND_SYMBOL = "CannotFindSymbol"
    NOT_INITIALIZED = "NotInitialized"
    ASSIGN_TO_FINAL = "AssignToFinal"
    NOT_A_STATEMENT = "NotAStatement"
    EXCEPTION_NEVER_THROWN = "ExceptionNeverThrown"
    ILLEGAL_MODIFIER_COMBO = "IllegalModifierCombo"
    PARENT_PRIVATE_ACCESS = "ParentPrivateAccess"
    OTHER = "Other"


@lru_cache(maxsize=None)
def _failure_patterns() -> tuple[tuple[FailureClass, tuple[str, ...], bool], ...]:
    with resources.files("apreval.data").joinpath("failure_patterns.json").open(
        "r", encoding="utf-8"
    ) as fh:
        doc = json.load(fh)
    return tuple(
        (FailureClass(entry["class"]), tuple(entry["patterns"]), bool(entry.get("ci", False)))
        for entry in doc["classes"]
    )


@lru_cache(maxsize=None)
def _compile_patterns() -> tuple[tuple[CompileErrorClass, str], ...]:
    with resources.files("apreval.data").joinpath("compile_error_patterns.json").open(
        "r", encoding="utf-8"
    ) as fh:
        doc = json.load(fh)
    return tuple((CompileErrorClass(entry["class"]), entry["pattern"]) for entry in doc["classes"])


def classify_failure(outcome: TestOutcome) -> FailureClass:
    """Bucket a failing outcome by its recorded failure kind.

    Patterns are tried in table order; the first substring hit wins and
    anything unmatched is Other, so classification is total.
    """
    if outcome.status is not TestStatus.FAIL:
        raise ValueError(f"cannot classify non-failing outcome {outcome.test_id!r}")
    raw = outcome.failure_kind or ""
    for cls, patterns, ci in _failure_patterns():
        haystack = raw.lower() if ci else raw
        for pattern in patterns:
            if (pattern.lower() if ci else pattern) in haystack:
                return cls
    return FailureClass.OTHER


@dataclass(frozen=True)
class CompileErrorMatch:
    cls: CompileErrorClass
    matched_pattern: str


def classify_compile_error(diagnostic: str) -> CompileErrorMatch:
    """Bucket a compiler diagnostic; first matching table pattern wins."""
    lowered = diagnostic.lower()
    for cls, pattern in _compile_patterns():
        if pattern.lower() in lowered:
            return CompileErrorMatch(cls=cls, matched_pattern=pattern)
    return CompileErrorMatch(cls=CompileErrorClass.OTHER, matched_pattern="")


# --- ingestion ----------------------------------------------------------------


def _csv_results_adapter(text: str) -> Iterable[TestOutcome]:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        return
    if tuple(h.strip() for h in header) != RESULTS_CSV_HEADER:
        raise MalformedInputError(f"unexpected header {header!r}", 1)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(RESULTS_CSV_HEADER):
            raise MalformedInputError(f"expected {len(RESULTS_CSV_HEADER)} fields, got {len(row)}", lineno)
        test_id, target_file, status_raw, failure_kind = row
        try:
            status = TestStatus(status_raw.strip().lower())
        except ValueError:
            raise MalformedInputError(f"unknown status {status_raw!r}", lineno) from None
        try:
            yield TestOutcome(
                test_id=test_id,
                target_file=target_file or None,
                status=status,
                failure_kind=failure_kind if status is TestStatus.FAIL else None,
            )
        except ValueError as exc:
            raise MalformedInputError(str(exc), lineno) from None


RESULT_ADAPTERS = {"csv": _csv_results_adapter}


def ingest_test_results(raw: bytes | str | IO, adapter: str = "csv") -> list[TestOutcome]:
    """Normalize a runner's result file into TestOutcome records.

    Output is sorted by test id; a duplicated test id is malformed input
    because the pre/post diff needs one outcome per test per state.
    """
    if adapter not in RESULT_ADAPTERS:
        raise UnknownAdapterError(adapter, list(RESULT_ADAPTERS))
    if isinstance(raw, bytes):
        text = raw.decode("utf-8")
    elif isinstance(raw, str):
        text = raw
    else:
        data = raw.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    outcomes = sorted(RESULT_ADAPTERS[adapter](text), key=lambda o: o.test_id)
    for a, b in zip(outcomes, outcomes[1:]):
        if a.test_id == b.test_id:
            raise MalformedInputError(f"duplicate test id {a.test_id!r}")
    return outcomes


def filter_baseline(original_run: Sequence[TestOutcome]) -> set[str]:
    """Ids of tests that pass on the original code; only these are diffable."""
    return {o.test_id for o in original_run if o.status is TestStatus.PASS}


@dataclass(frozen=True)
class Regression:
    test_id: str
    status: TestStatus
    failure_kind: str | None
    missing_in_repaired_run: bool = False


def diff_test_outcomes(
    baseline_ids: set[str], repaired_run: Sequence[TestOutcome]
) -> list[Regression]:
    """Baseline tests that no longer pass on the repaired code.

    A baseline id absent from the repaired run is counted as a regression
    and flagged: a deleted or uncompilable class makes its tests unrunnable,
    which in practice surfaces as a missing class definition.
    """
    by_id = {o.test_id: o for o in repaired_run}
    regressions: list[Regression] = []
    for test_id in sorted(baseline_ids):
        outcome = by_id.get(test_id)
        if outcome is None:
            regressions.append(
                Regression(
                    test_id=test_id,
                    status=TestStatus.FAIL,
                    failure_kind="NoClassDefFoundError (missing in repaired run)",
                    missing_in_repaired_run=True,
                )
            )
        elif outcome.status is not TestStatus.PASS:
            regressions.append(
                Regression(
                    test_id=test_id,
                    status=outcome.status,
                    failure_kind=outcome.failure_kind,
                )
            )
    return regressions


@dataclass(frozen=True)
class SemanticSummary:
    executed: int
    failed: int
    failure_histogram: Mapping[FailureClass, int]
    excluded_simulation_artifacts: int
    compile_error_histogram: Mapping[CompileErrorClass, int]
    uncompilable_files: int

    @property
    def pass_rate(self) -> float:
        return (self.executed - self.failed) / self.executed if self.executed else 1.0


def summarize_semantic(
    baseline_ids: set[str],
    regressions: Sequence[Regression],
    compile_diagnostics: Mapping[str, str] | None = None,
) -> SemanticSummary:
    """Aggregate regression counts, failure classes, and compile errors.

    Simulation artifacts stay in the failed count but are excluded from the
    analyzed failure histogram. ``compile_diagnostics`` maps each
    post-repair uncompilable file to its captured diagnostic.
    """
    histogram: Counter[FailureClass] = Counter()
    excluded = 0
    for reg in regressions:
        outcome = TestOutcome(
            test_id=reg.test_id,
            target_file=None,
            status=TestStatus.FAIL,
            failure_kind=reg.failure_kind or "unknown failure",
        )
        cls = classify_failure(outcome)
        if cls is FailureClass.SIMULATION_ARTIFACT:
            excluded += 1
        else:
            histogram[cls] += 1
    compile_hist: Counter[CompileErrorClass] = Counter()
    diagnostics = compile_diagnostics or {}
    for diag in diagnostics.values():
        compile_hist[classify_compile_error(diag).cls] += 1
    return SemanticSummary(
        executed=len(baseline_ids),
        failed=len(regressions),
        failure_histogram=dict(histogram),
        excluded_simulation_artifacts=excluded,
        compile_error_histogram=dict(compile_hist),
        uncompilable_files=len(diagnostics),
    )
