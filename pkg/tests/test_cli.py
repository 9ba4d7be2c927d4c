import json

import pytest

from apreval import minicorpus
from apreval.cli import main
from apreval.sampling import SHEET_HEADER

from test_fixrate import golden_reports
from apreval.violations import serialize_report


@pytest.fixture(scope="module")
def mini(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_mini")
    config = minicorpus.materialize(root, seed=17)
    code = main(["run", "--config", str(config)])
    assert code == 0
    return root


class TestRun:
    def test_run_and_cached_rerun(self, mini, capsys):
        config = mini / "config.json"
        assert main(["run", "--config", str(config)]) == 0
        out = capsys.readouterr().out
        assert "cached" in out

    def test_bad_config_is_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "c.json"
        bad.write_text('{"corpus_dir": "x"}', encoding="utf-8")
        assert main(["run", "--config", str(bad)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 1

    def test_adapter_failure_exit_code(self, tmp_path):
        config_path = minicorpus.materialize(tmp_path, seed=17)
        doc = json.loads(config_path.read_text(encoding="utf-8"))
        doc["adapters"]["analyzer"]["command"] = (
            "{python} -c \"import sys;sys.exit(7)\" {input} {output}"
        )
        doc["adapters"]["analyzer"].pop("expected_artifacts", None)
        config_path.write_text(json.dumps(doc), encoding="utf-8")
        assert main(["run", "--config", str(config_path)]) == 3

    def test_stage_subset_with_missing_upstream(self, tmp_path):
        config_path = minicorpus.materialize(tmp_path, seed=17)
        assert main(["run", "--config", str(config_path), "--stages", "fixrate"]) == 2


class TestFixrateCommand:
    def test_golden_fixture_through_cli(self, tmp_path, capsys):
        pre, post = golden_reports()
        pre_csv = tmp_path / "pre.csv"
        post_csv = tmp_path / "post.csv"
        pre_csv.write_text(serialize_report(pre), encoding="utf-8")
        post_csv.write_text(serialize_report(post), encoding="utf-8")
        out = tmp_path / "out"
        code = main([
            "fixrate", "--pre", str(pre_csv), "--post", str(post_csv),
            "--profile", "sorald-30", "--out", str(out),
        ])
        assert code == 0
        assert "97.0%" in capsys.readouterr().out
        assert (out / "fixrate.csv").is_file()
        assert (out / "fixrate.json").is_file()
        assert (out / "fixed_violations.csv").is_file()
        payload = json.loads((out / "fixrate.json").read_text())
        assert payload["overall"]["fixed_total"] == 3423


class TestNewviolCommand:
    def test_against_mini_corpus_workspace(self, mini, capsys):
        ws = mini / "workspace"
        out = mini / "nv_out"
        code = main([
            "newviol",
            "--pre", str(ws / "analyze_pre" / "pre_violations.csv"),
            "--post", str(ws / "analyze_post" / "post_violations.csv"),
            "--original", str(ws / "repair" / "input"),
            "--repaired", str(ws / "repair" / "output"),
            "--out", str(out),
        ])
        assert code == 0
        assert "5 classified new" in capsys.readouterr().out
        assert (out / "new_violations.csv").is_file()
        assert (out / "new_matrix.csv").is_file()
        assert (out / "new_frequency.csv").is_file()


class TestSampleAndPrecision:
    def test_sample_sheet_then_precision(self, mini, tmp_path, capsys):
        ws = mini / "workspace"
        sheet = tmp_path / "sheet.csv"
        code = main([
            "sample",
            "--new-violations", str(ws / "newviol" / "new_violations.csv"),
            "--original", str(ws / "repair" / "input"),
            "--repaired", str(ws / "repair" / "output"),
            "--seed", "17",
            "--out", str(sheet),
        ])
        assert code == 0
        lines = sheet.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(SHEET_HEADER)
        assert len(lines) == 6  # header + the 5 sampled items

        # label every row TP except one FP, then test against 70%
        labeled = [lines[0]]
        for i, line in enumerate(lines[1:]):
            verdict = "FP" if i == 0 else "TP"
            assert line.endswith(",,,")
            labeled.append(line[:-3] + f",{verdict},{verdict},")
        labels = tmp_path / "labeled.csv"
        labels.write_text("\n".join(labeled) + "\n", encoding="utf-8")
        code = main(["precision", "--labels", str(labels), "--threshold", "0.70"])
        assert code == 0
        out = capsys.readouterr().out
        assert "true positives: 4/5" in out

    def test_seed_reproducibility(self, mini, tmp_path):
        ws = mini / "workspace"
        args = [
            "sample",
            "--new-violations", str(ws / "newviol" / "new_violations.csv"),
            "--original", str(ws / "repair" / "input"),
            "--repaired", str(ws / "repair" / "output"),
            "--seed", "41",
        ]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestSemanticCommand:
    def test_on_mini_corpus_results(self, mini, tmp_path, capsys):
        ws = mini / "workspace"
        out = tmp_path / "sem_out"
        code = main([
            "semantic",
            "--baseline", str(ws / "semantic" / "baseline_raw" / "results.csv"),
            "--repaired", str(ws / "semantic" / "repaired_raw" / "results.csv"),
            "--compile-log", str(ws / "semantic" / "compile_raw"),
            "--out", str(out),
        ])
        assert code == 0
        printed = capsys.readouterr().out
        assert "executed 35" in printed
        assert (out / "regressions.csv").is_file()
        assert (out / "failure_histogram.csv").is_file()
        assert (out / "compile_errors.csv").is_file()


class TestMetricsCommand:
    def test_on_mini_corpus_extracts(self, mini, tmp_path, capsys):
        ws = mini / "workspace"
        out = tmp_path / "met_out"
        code = main([
            "metrics",
            "--pre", str(ws / "metrics" / "pre_raw" / "class_metrics.csv"),
            "--post", str(ws / "metrics" / "post_raw" / "class_metrics.csv"),
            "--out", str(out),
        ])
        assert code == 0
        assert "file pairs" in capsys.readouterr().out
        assert (out / "structural_stats.csv").is_file()
        assert (out / "metric_medians.csv").is_file()
        assert (out / "signed_ranks.csv").is_file()


class TestReportCommand:
    def test_emits_summary(self, mini, capsys):
        ws = mini / "workspace"
        code = main(["report", "--workspace", str(ws)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["fixrate"]["overall"]["pre_total"] == 22
        assert (ws / "report" / "summary.json").is_file()

    def test_empty_workspace_fails_cleanly(self, tmp_path, capsys):
        code = main(["report", "--workspace", str(tmp_path)])
        assert code == 2
        assert "fixrate" in capsys.readouterr().err
