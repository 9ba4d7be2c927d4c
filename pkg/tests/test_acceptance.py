"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one `[acceptance] criterion N: PASS/FAIL` line so the
gate can be read off a plain pytest -s run.
"""

import math
import random
import time
from fractions import Fraction

import numpy as np
from scipy import stats as scipy_stats

from apreval import minicorpus
from apreval.cli import main as cli_main
from apreval.fixrate import compute_fix_rates, match_violations, render_percent
from apreval.metrics import METRIC_NAMES, aggregate_file_metrics
from apreval.newviol import NormalizationPolicy, detect_new_violations
from apreval.sampling import cochran_sample_size, exact_binomial_test
from apreval.semantic import (
    FailureClass,
    classify_compile_error,
    summarize_semantic,
)
from apreval.stats import PairedSeries, dagostino_pearson, wilcoxon_signed_rank
from apreval.violations import SORALD_30, StateLabel

from conftest import mkreport, random_violation
from test_fixrate import oracle_match, golden_reports
from test_metrics import row as metrics_row
from test_newviol import build_corpus, naive_three_stage
from test_semantic import TABLE_DIAGNOSTICS, golden_regressions


def report(criterion: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] criterion {criterion}: {status} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


class TestAcceptance:
    def test_01_cochran_sample_size(self):
        value = cochran_sample_size(2120, 0.95, 0.05, 0.5)
        start = time.perf_counter()
        for _ in range(100):
            cochran_sample_size(2120, 0.95, 0.05, 0.5)
        per_call = (time.perf_counter() - start) / 100
        report(
            1,
            value == 326 and per_call < 1e-3,
            f"cochran(2120, 0.95, 0.05, 0.5) = {value} (want 326), {per_call * 1e6:.1f} us/call",
        )

    def test_02_exact_binomial(self):
        result = exact_binomial_test(250, 326, 0.70, alternative="greater")
        oracle = float(
            sum(
                math.comb(326, i) * Fraction(7, 10) ** i * Fraction(3, 10) ** (326 - i)
                for i in range(250, 327)
            )
        )
        ok = abs(result.p_value - 0.0043) < 0.0005 and abs(result.p_value - oracle) < 1e-12
        worst = 0.0
        for n in range(1, 21):
            for k in range(n + 1):
                for p_num, p_den in ((1, 2), (7, 10)):
                    exact = float(
                        sum(
                            math.comb(n, i)
                            * Fraction(p_num, p_den) ** i
                            * Fraction(p_den - p_num, p_den) ** (n - i)
                            for i in range(k, n + 1)
                        )
                    )
                    mine = exact_binomial_test(k, n, p_num / p_den).p_value
                    worst = max(worst, abs(mine - exact))
        ok = ok and worst < 1e-12
        report(
            2,
            ok,
            f"p(250/326 vs 0.70) = {result.p_value:.6f} (want 0.0043 +/- 0.0005), "
            f"worst n<=20 enumeration gap {worst:.2e}",
        )

    def test_03_fix_rate_arithmetic(self):
        pre, post = golden_reports()
        table = compute_fix_rates(match_violations(pre, post), SORALD_30)
        by_rule = {r.rule: r for r in table.rows}
        overall_pct = 100 * table.fixed_total / table.pre_total
        checks = [
            table.pre_total == 3529,
            table.fixed_total == 3423,
            abs(overall_pct - 97.0) < 0.05,
        ]
        for rule in ("S1481", "S1132", "S1444", "S2184", "S2142"):
            checks.append(render_percent(by_rule[rule].fixed_count, by_rule[rule].pre_count) == "100%")
        checks.append(render_percent(by_rule["S2164"].fixed_count, by_rule["S2164"].pre_count) == "36.3%")
        checks.append(render_percent(by_rule["S1948"].fixed_count, by_rule["S1948"].pre_count) == "45.3%")
        report(
            3,
            all(checks),
            f"overall {table.fixed_total}/{table.pre_total} = {overall_pct:.2f}% "
            f"(want 97.0 +/- 0.05pp), 21 rule rows rendered",
        )

    def test_04_matching_oracle(self):
        rng = random.Random(20240404)
        pool = [random_violation(rng, files=25, rules=9, lines=40) for _ in range(3000)]
        start = time.perf_counter()
        mismatches = 0
        for pair_no in range(1000):
            limit = 500 if pair_no % 4 == 0 else 120
            pre = mkreport(rng.choices(pool, k=rng.randint(0, limit)), StateLabel.PRE_REPAIR)
            post = mkreport(rng.choices(pool, k=rng.randint(0, limit)), StateLabel.POST_REPAIR)
            outcome = match_violations(pre, post)
            fixed, surviving = oracle_match(pre, post)
            if outcome.fixed != fixed or outcome.surviving != surviving:
                mismatches += 1
        elapsed = time.perf_counter() - start
        report(
            4,
            mismatches == 0 and elapsed < 10.0,
            f"1000 randomized pairs (<=500 entries, duplicates included): "
            f"{mismatches} oracle mismatches in {elapsed:.2f}s (budget 10s)",
        )

    def test_05_new_violation_detector(self):
        pre, post, sources, _truth = build_corpus(seed=20240405, per_scenario=30)
        verdicts = detect_new_violations(pre, post, sources, NormalizationPolicy.EXACT)
        naive = naive_three_stage(pre, post, sources, NormalizationPolicy.EXACT)
        disagreements = sum(1 for vd, nv in zip(verdicts, naive) if vd.verdict is not nv)
        report(
            5,
            len(verdicts) >= 200 and disagreements == 0,
            f"{len(verdicts)} scripted-edit cases (insertions, deletions, shifts, "
            f"relocations, injections): {disagreements} disagreements with the naive rule",
        )

    def test_06_semantic_summary(self):
        baseline = {f"b{i:05d}" for i in range(8212)}
        summary = summarize_semantic(baseline, golden_regressions(), {})
        histogram_ok = (
            summary.failure_histogram[FailureClass.ILLEGAL_ACCESS] == 1694
            and summary.failure_histogram[FailureClass.NO_CLASS_DEF] == 189
            and summary.failure_histogram[FailureClass.ASSERTION] == 78
            and sum(summary.failure_histogram.values()) == 1961
            and summary.excluded_simulation_artifacts == 1
        )
        pattern_misses = [
            diag
            for diag, expected in TABLE_DIAGNOSTICS.items()
            if classify_compile_error(diag).cls is not expected
        ]
        ok = (
            abs(100 * summary.pass_rate - 76.1) < 0.05
            and histogram_ok
            and not pattern_misses
        )
        report(
            6,
            ok,
            f"pass rate {100 * summary.pass_rate:.2f}% (want 76.1 +/- 0.05pp), "
            f"histogram 1694/189/78 over 1961 analyzed, "
            f"{len(TABLE_DIAGNOSTICS)} diagnostic patterns matched with zero misses",
        )

    def test_07_wilcoxon(self):
        exact = wilcoxon_signed_rank(PairedSeries("m", (1.0, 2.0, 3.0, 4.0, 5.0)))
        zero = wilcoxon_signed_rank(PairedSeries("m", (0.0, 0.0, 0.0)))
        nprng = np.random.default_rng(20240407)
        worst = 0.0
        checked = 0
        while checked < 20:
            deltas = nprng.integers(-40, 41, size=50)
            deltas = deltas[deltas != 0]
            if len(deltas) <= 25:
                continue
            mine = wilcoxon_signed_rank(PairedSeries("m", tuple(float(d) for d in deltas)))
            ref = scipy_stats.wilcoxon(deltas, zero_method="wilcox", correction=True, mode="approx")
            worst = max(worst, abs(mine.p_value - ref.pvalue))
            checked += 1
        ok = (
            abs(exact.p_value - 0.0625) < 1e-12
            and zero.statistic is None
            and zero.p_value is None
            and worst < 1e-3
        )
        report(
            7,
            ok,
            f"exact p([1..5]) = {exact.p_value} (want 0.0625), all-zero deltas undefined, "
            f"worst approx-vs-reference gap over 20 n=50 fixtures {worst:.2e} (budget 1e-3)",
        )

    def test_08_dagostino_pearson(self):
        nprng = np.random.default_rng(20240408)
        worst = 0.0
        for _ in range(10):
            sample = nprng.normal(size=200)
            mine = dagostino_pearson(sample)
            ref_stat, ref_p = scipy_stats.normaltest(sample)
            worst = max(worst, abs(mine.statistic - ref_stat), abs(mine.p_value - ref_p))
        skewed = dagostino_pearson(np.exp(nprng.normal(size=500)))
        ok = worst < 1e-6 and skewed.p_value < 0.05
        report(
            8,
            ok,
            f"worst K2/p gap vs reference over 10 n=200 samples {worst:.2e} (budget 1e-6), "
            f"skewed fixture p = {skewed.p_value:.3e} < 0.05",
        )

    def test_09_metric_aggregation(self):
        two_class = aggregate_file_metrics(
            [metrics_row("A.java", "A", dit=1, wmc=4), metrics_row("A.java", "B", dit=3, wmc=6)]
        )[0]
        two_class_ok = two_class.values["dit"] == 3 and two_class.values["wmc"] == 10

        rng = random.Random(20240409)
        rows = []
        for f in range(5):
            for c in range(rng.randint(1, 4)):
                rows.append(
                    metrics_row(
                        f"F{f}.java", f"C{f}_{c}",
                        **{m: rng.randint(0, 50) for m in METRIC_NAMES},
                    )
                )
        oracle = {}
        for r in rows:
            cell = oracle.setdefault(r.file_id, {m: 0 for m in METRIC_NAMES})
            for m in METRIC_NAMES:
                cell[m] = max(cell[m], r.values[m]) if m == "dit" else cell[m] + r.values[m]
        mine = {r.file_id: dict(r.values) for r in aggregate_file_metrics(rows)}
        report(
            9,
            two_class_ok and mine == oracle,
            f"two-class sum/max example exact, 5-file spreadsheet oracle exact "
            f"({len(rows)} class rows)",
        )

    def test_10_end_to_end_determinism(self, tmp_path, capsys):
        config = minicorpus.materialize(tmp_path, seed=17)
        workspace = tmp_path / "workspace"

        start = time.perf_counter()
        assert cli_main(["run", "--config", str(config)]) == 0
        first_elapsed = time.perf_counter() - start
        first_summary = (workspace / "report" / "summary.json").read_bytes()
        capsys.readouterr()

        assert cli_main(["run", "--config", str(config)]) == 0
        second_stdout = capsys.readouterr().out
        second_summary = (workspace / "report" / "summary.json").read_bytes()

        cached_lines = [l for l in second_stdout.splitlines() if l.endswith("cached")]
        ok = (
            first_elapsed < 30.0
            and first_summary == second_summary
            and len(cached_lines) == 10
        )
        with capsys.disabled():
            report(
                10,
                ok,
                f"12-file corpus run in {first_elapsed:.1f}s (budget 30s), summary.json "
                f"byte-identical across consecutive runs, {len(cached_lines)}/10 stages cached on rerun",
            )
