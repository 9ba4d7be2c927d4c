"""Detection of repair-introduced violations despite line-position shifts.

Repair tools reformat code, so a post-repair finding whose key has no exact
pre-repair match is not necessarily new. Each post-repair violation is
classified in three stages:

1. extract the flagged code fragment from the repaired file and search for
   it verbatim (contiguous lines) in the original file -- found means the
   code predates the repair;
2. otherwise look the violation's exact key up in the pre-repair report;
3. otherwise the violation is new, i.e. introduced by the tool.

Fragment comparison is byte-exact by default; a loose mode that ignores
indentation and trailing whitespace is available because reformatting alone
otherwise produces spurious "new" verdicts.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .errors import MissingSourceError, SpanOutOfBoundsError
from .violations import Severity, Violation, ViolationReport, ViolationType


class NormalizationPolicy(Enum):
    #: lines must be byte-identical
    EXACT = "exact"
    #: trailing whitespace trimmed, leading whitespace collapsed away
    LOOSE = "loose"


def _norm_line(line: str, policy: NormalizationPolicy) -> str:
    if policy is NormalizationPolicy.EXACT:
        return line
    return line.strip()


@dataclass(frozen=True)
class SourcePair:
    """Original and repaired text of one file, as line lists."""

    file_id: str
    original_lines: tuple[str, ...]
    repaired_lines: tuple[str, ...]

    @classmethod
    def from_texts(cls, file_id: str, original: str, repaired: str) -> "SourcePair":
        return cls(
            file_id=file_id,
            original_lines=tuple(original.splitlines()),
            repaired_lines=tuple(repaired.splitlines()),
        )

    @property
    def repaired_deleted(self) -> bool:
        return len(self.repaired_lines) == 0


@dataclass(frozen=True)
class Fragment:
    """The code lines a violation's span covers in the repaired file."""

    file_id: str
    lines: tuple[str, ...]
    span: tuple[int, int]

    def __post_init__(self) -> None:
        start, end = self.span
        if len(self.lines) != end - start + 1:
            raise ValueError(f"fragment has {len(self.lines)} lines for span {start}-{end}")


class VerdictKind(Enum):
    NOT_NEW_FRAGMENT_FOUND = "not_new_fragment_found"
    NOT_NEW_KEY_MATCH = "not_new_key_match"
    NEW = "new"


@dataclass(frozen=True)
class NewViolationVerdict:
    violation: Violation
    verdict: VerdictKind
    #: 1-based line in the original file where the evidence sits; absent for NEW
    evidence: int | None = None

    def __post_init__(self) -> None:
        if (self.verdict is VerdictKind.NEW) != (self.evidence is None):
            raise ValueError("evidence must be present exactly when the verdict is not NEW")


def extract_fragment(pair: SourcePair, span: tuple[int, int]) -> Fragment:
    """Slice the repaired file's lines for a violation span (1-based, inclusive)."""
    start, end = span
    n = len(pair.repaired_lines)
    if start < 1 or end > n:
        raise SpanOutOfBoundsError(pair.file_id, span, n)
    return Fragment(file_id=pair.file_id, lines=pair.repaired_lines[start - 1 : end], span=span)


def fragment_in_original(
    fragment: Fragment,
    pair: SourcePair,
    normalization: NormalizationPolicy = NormalizationPolicy.EXACT,
) -> int | None:
    """First 1-based line where the fragment appears contiguously in the original.

    Multi-line fragments must match as an unbroken block. Returns ``None``
    when the fragment does not occur.
    """
    needle = [_norm_line(l, normalization) for l in fragment.lines]
    hay = [_norm_line(l, normalization) for l in pair.original_lines]
    k = len(needle)
    if k == 0:
        return None
    for i in range(len(hay) - k + 1):
        if hay[i : i + k] == needle:
            return i + 1
    return None


def detect_new_violations(
    pre: ViolationReport,
    post: ViolationReport,
    sources: Mapping[str, SourcePair],
    normalization: NormalizationPolicy = NormalizationPolicy.EXACT,
) -> list[NewViolationVerdict]:
    """Classify every post-repair violation as new or pre-existing.

    The fragment check runs first; the key lookup only decides violations
    whose code was altered in place (same span, different text). Verdicts
    come back in the post report's canonical entry order.
    """
    pre_keys = {v.key for v in pre.entries}
    verdicts: list[NewViolationVerdict] = []
    for v in post.entries:
        pair = sources.get(v.file_id)
        if pair is None:
            raise MissingSourceError(v.file_id)
        fragment = extract_fragment(pair, v.span)
        found_at = fragment_in_original(fragment, pair, normalization)
        if found_at is not None:
            verdicts.append(
                NewViolationVerdict(v, VerdictKind.NOT_NEW_FRAGMENT_FOUND, evidence=found_at)
            )
        elif v.key in pre_keys:
            verdicts.append(
                NewViolationVerdict(v, VerdictKind.NOT_NEW_KEY_MATCH, evidence=v.start_line)
            )
        else:
            verdicts.append(NewViolationVerdict(v, VerdictKind.NEW))
    return verdicts


@dataclass(frozen=True)
class NewViolationBreakdown:
    """Type-by-severity counts and per-rule frequencies of the NEW verdicts."""

    total_new: int
    matrix: Mapping[tuple[ViolationType, Severity], int]
    rule_frequency: tuple[tuple[str, int], ...]

    def type_totals(self) -> dict[ViolationType, int]:
        totals: dict[ViolationType, int] = {t: 0 for t in ViolationType}
        for (t, _s), n in self.matrix.items():
            totals[t] += n
        return totals


def categorize_new(verdicts: Iterable[NewViolationVerdict]) -> NewViolationBreakdown:
    """Aggregate NEW verdicts into the 3x3 type/severity matrix and rule list."""
    matrix: dict[tuple[ViolationType, Severity], int] = {
        (t, s): 0 for t in ViolationType for s in Severity
    }
    by_rule: Counter[str] = Counter()
    total = 0
    for verdict in verdicts:
        if verdict.verdict is not VerdictKind.NEW:
            continue
        v = verdict.violation
        matrix[(v.vtype, v.severity)] += 1
        by_rule[v.rule] += 1
        total += 1
    frequency = tuple(sorted(by_rule.items(), key=lambda kv: (-kv[1], kv[0])))
    return NewViolationBreakdown(total_new=total, matrix=matrix, rule_frequency=frequency)
