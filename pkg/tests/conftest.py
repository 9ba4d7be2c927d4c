import random

import pytest

from apreval.violations import (
    Severity,
    StateLabel,
    Violation,
    ViolationReport,
    ViolationType,
    normalize_report,
)


def mkviol(
    file_id="A.java",
    rule="S1118",
    start=1,
    end=None,
    vtype=ViolationType.CODE_SMELL,
    severity=Severity.MEDIUM,
    message="",
):
    return Violation(
        file_id=file_id,
        rule=rule,
        vtype=vtype,
        severity=severity,
        start_line=start,
        end_line=end if end is not None else start,
        message=message,
    )


def mkreport(entries, state=StateLabel.PRE_REPAIR, normalized=True):
    report = ViolationReport(state=state, entries=tuple(entries))
    return normalize_report(report) if normalized else report


def random_violation(rng: random.Random, files=20, rules=8, lines=30):
    return mkviol(
        file_id=f"f{rng.randrange(files)}.java",
        rule=f"S{rng.randrange(1, rules + 1)}",
        start=rng.randrange(1, lines + 1),
        vtype=rng.choice(list(ViolationType)),
        severity=rng.choice(list(Severity)),
        message=rng.choice(["", "msg-a", "msg-b"]),
    )


@pytest.fixture
def rng():
    return random.Random(20240817)
