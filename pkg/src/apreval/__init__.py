"""Tool-agnostic evaluation harness for automated program repair.

Four analysis axes over a repaired corpus: fix rate of targeted
static-analysis violations, repair-introduced new violations, functional
behavior preservation via test-outcome diffing, and structural-quality
impact via paired code-metric statistics.
"""

from .errors import HarnessError
from .fixrate import compute_fix_rates, match_violations, summarize_fix_rate
from .metrics import aggregate_file_metrics, pair_pre_post, structural_report
from .newviol import (
    NormalizationPolicy,
    SourcePair,
    VerdictKind,
    categorize_new,
    detect_new_violations,
    extract_fragment,
    fragment_in_original,
)
from .sampling import (
    cochran_sample_size,
    exact_binomial_test,
    export_labeling_sheet,
    ingest_labels,
    stratified_sample,
)
from .semantic import (
    classify_compile_error,
    classify_failure,
    diff_test_outcomes,
    filter_baseline,
    ingest_test_results,
    summarize_semantic,
)
from .stats import (
    Direction,
    PairedSeries,
    StatResult,
    dagostino_pearson,
    signed_rank_direction,
    wilcoxon_signed_rank,
)
from .violations import (
    SORALD_30,
    RuleProfile,
    Severity,
    StateLabel,
    Violation,
    ViolationKey,
    ViolationReport,
    ViolationType,
    key_of,
    normalize_report,
    parse_report,
    serialize_report,
    validate_report,
)

__version__ = "0.1.0"
