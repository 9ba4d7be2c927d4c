import json
import shutil
import sys
from pathlib import Path

import pytest

from apreval import minicorpus
from apreval.errors import (
    AdapterTimeoutError,
    ConfigError,
    MissingArtifactError,
    MissingStageOutputError,
    NonZeroExitError,
    WorkspaceLockedError,
)
from apreval.pipeline import (
    SamplingParams,
    ToolAdapter,
    emit_reports,
    load_config,
    prepare_corpus_violating,
    run_pipeline,
    run_tool_adapter,
)
from apreval.violations import SORALD_30, StateLabel

from conftest import mkreport, mkviol

PY = sys.executable


def write_config(path: Path, **overrides):
    doc = {
        "corpus_dir": "corpus",
        "workspace_dir": "workspace",
        "adapters": {
            "analyzer": {"command": "{python} -m apreval.stubs analyzer {input} {output}",
                         "expected_artifacts": ["violations.csv"]},
            "repairer": {"command": "{python} -m apreval.stubs repairer {input} {output}"},
            "test_runner": {"command": "{python} -m apreval.stubs testrunner {input} {output}",
                            "expected_artifacts": ["results.csv"]},
            "metric_extractor": {"command": "{python} -m apreval.stubs metrics {input} {output}",
                                 "expected_artifacts": ["class_metrics.csv"]},
            "compiler": {"command": "{python} -m apreval.stubs compiler {input} {output}",
                         "expected_artifacts": ["compile_results.json"]},
        },
    }
    doc.update(overrides)
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestLoadConfig:
    def test_minimal_config_gets_defaults(self, tmp_path):
        (tmp_path / "corpus").mkdir()
        config = load_config(write_config(tmp_path / "c.json"))
        assert config.sampling == SamplingParams(0.95, 0.05, 0.5)
        assert config.seed == 0
        assert config.profile == "sorald-30"
        assert config.corpus_dir == tmp_path / "corpus"

    def test_missing_role_rejected(self, tmp_path):
        doc = {
            "corpus_dir": "corpus",
            "workspace_dir": "ws",
            "adapters": {"repairer": {"command": "x {input}"}},
        }
        path = tmp_path / "c.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "adapters.analyzer" in str(err.value)

    def test_skip_role_accepted(self, tmp_path):
        path = write_config(
            tmp_path / "c.json",
            adapters={
                "analyzer": {"command": "a {input} {output}"},
                "repairer": {"command": "r {input} {output}"},
                "test_runner": "skip",
                "metric_extractor": "skip",
                "compiler": "skip",
            },
        )
        config = load_config(path)
        assert config.adapters["test_runner"] is None
        assert config.adapters["analyzer"] is not None

    def test_zero_timeout_rejected(self, tmp_path):
        path = write_config(
            tmp_path / "c.json",
            adapters={
                "analyzer": {"command": "a {input}", "timeout": 0},
                "repairer": "skip", "test_runner": "skip",
                "metric_extractor": "skip", "compiler": "skip",
            },
        )
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "timeout" in str(err.value)

    def test_unknown_keys_rejected(self, tmp_path):
        path = write_config(tmp_path / "c.json", extra_knob=1)
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "extra_knob" in str(err.value)

    def test_template_without_input_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            ToolAdapter(name="analyzer", command_template="tool --fast")

    def test_unknown_placeholder_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            ToolAdapter(name="analyzer", command_template="tool {input} {outut}")


class TestRunToolAdapter:
    def test_copy_stub_produces_manifest(self, tmp_path):
        src = tmp_path / "in"
        src.mkdir()
        (src / "a.txt").write_text("alpha", encoding="utf-8")
        (src / "b.txt").write_text("beta", encoding="utf-8")
        adapter = ToolAdapter(
            name="copier",
            command_template=f"{PY} -c \"import shutil,sys;"
            + "shutil.copytree(sys.argv[1], sys.argv[2], dirs_exist_ok=True)\" {input} {output}",
            expected_artifacts=("a.txt",),
        )
        manifest = run_tool_adapter(adapter, src, tmp_path / "out")
        assert manifest == ["a.txt", "b.txt"]

    def test_timeout_enforced(self, tmp_path):
        (tmp_path / "in").mkdir()
        adapter = ToolAdapter(
            name="sleeper",
            command_template=f"{PY} -c \"import time;time.sleep(5)\" {{input}}",
            timeout=0.3,
        )
        with pytest.raises(AdapterTimeoutError):
            run_tool_adapter(adapter, tmp_path / "in", tmp_path / "out")

    def test_nonzero_exit_carries_stderr(self, tmp_path):
        (tmp_path / "in").mkdir()
        adapter = ToolAdapter(
            name="crasher",
            command_template=f"{PY} -c \"import sys;sys.stderr.write('boom');sys.exit(2)\" {{input}}",
        )
        with pytest.raises(NonZeroExitError) as err:
            run_tool_adapter(adapter, tmp_path / "in", tmp_path / "out")
        assert err.value.returncode == 2
        assert "boom" in err.value.stderr

    def test_missing_artifact(self, tmp_path):
        (tmp_path / "in").mkdir()
        adapter = ToolAdapter(
            name="lazy",
            command_template=f"{PY} -c pass {{input}}",
            expected_artifacts=("report.csv",),
        )
        with pytest.raises(MissingArtifactError):
            run_tool_adapter(adapter, tmp_path / "in", tmp_path / "out")

    def test_logs_captured(self, tmp_path):
        (tmp_path / "in").mkdir()
        adapter = ToolAdapter(
            name="talker",
            command_template=f"{PY} -c \"print('hello from tool')\" {{input}}",
        )
        run_tool_adapter(adapter, tmp_path / "in", tmp_path / "out")
        assert "hello from tool" in (tmp_path / "out" / "adapter_stdout.log").read_text()


class TestPrepareViolating:
    def test_no_profile_violations_gives_empty(self):
        report = mkreport([mkviol(rule="S9999")], StateLabel.PRE_REPAIR)
        assert prepare_corpus_violating(["A.java"], report, SORALD_30) == []

    def test_three_of_seven_retained(self):
        files = [f"F{i}.java" for i in range(7)]
        entries = [mkviol(file_id=f"F{i}.java", rule="S1118") for i in (1, 3, 5)]
        entries.append(mkviol(file_id="F0.java", rule="S9999"))  # out of profile
        report = mkreport(entries, StateLabel.PRE_REPAIR)
        assert prepare_corpus_violating(files, report, SORALD_30) == [
            "F1.java", "F3.java", "F5.java",
        ]

    def test_uncompilable_files_not_selected(self):
        report = mkreport([mkviol(file_id="Bad.java", rule="S1118")], StateLabel.PRE_REPAIR)
        assert prepare_corpus_violating(["Good.java"], report, SORALD_30) == []


@pytest.fixture(scope="module")
def mini_run(tmp_path_factory):
    """One full pipeline run over the bundled corpus, shared by read-only tests."""
    root = tmp_path_factory.mktemp("mini")
    config = minicorpus.materialize(root, seed=17)
    cfg = load_config(config)
    summary = run_pipeline(cfg)
    return root, cfg, summary


class TestMiniCorpusRun:
    def test_all_stages_ran(self, mini_run):
        _, _, summary = mini_run
        assert all(status == "ran" for status in summary.values())
        assert list(summary) == [
            "prepare", "analyze_pre", "repair", "analyze_post", "fixrate",
            "newviol", "sample", "semantic", "metrics", "report",
        ]

    def test_workspace_layout(self, mini_run):
        root, cfg, _ = mini_run
        ws = cfg.workspace_dir
        for name in ("fixrate/fixrate.csv", "newviol/new_violations.csv",
                     "sample/sheet.csv", "semantic/semantic.json",
                     "metrics/structural_stats.csv", "report/summary.json"):
            assert (ws / name).is_file(), name

    def test_rerun_is_fully_cached(self, mini_run):
        root, cfg, _ = mini_run
        summary = run_pipeline(cfg)
        assert all(status == "cached" for status in summary.values())

    def test_fresh_workspace_is_byte_identical(self, mini_run, tmp_path):
        root, cfg, _ = mini_run
        config2 = minicorpus.materialize(tmp_path, seed=17)
        cfg2 = load_config(config2)
        run_pipeline(cfg2)
        a = (cfg.workspace_dir / "report" / "summary.json").read_bytes()
        b = (cfg2.workspace_dir / "report" / "summary.json").read_bytes()
        assert a == b

    def test_editing_repaired_file_reruns_only_downstream(self, mini_run):
        root, cfg, _ = mini_run
        target = cfg.workspace_dir / "repair" / "output" / "EventBus.java"
        original = target.read_text(encoding="utf-8")
        try:
            target.write_text(original + "// touched\n", encoding="utf-8")
            summary = run_pipeline(cfg)
            assert summary["prepare"] == "cached"
            assert summary["analyze_pre"] == "cached"
            assert summary["repair"] == "cached"  # its own inputs are unchanged
            assert summary["analyze_post"] == "ran"
            assert summary["semantic"] == "ran"
        finally:
            target.write_text(original, encoding="utf-8")
            run_pipeline(cfg)  # restore downstream outputs

    def test_force_reruns_everything(self, mini_run):
        root, cfg, _ = mini_run
        summary = run_pipeline(cfg, force=True)
        assert all(status == "ran" for status in summary.values())

    def test_summary_sections_present(self, mini_run):
        _, cfg, _ = mini_run
        summary = json.loads((cfg.workspace_dir / "report" / "summary.json").read_text())
        assert set(summary) == {"fixrate", "newviol", "sample", "semantic", "metrics"}
        assert summary["fixrate"]["overall"]["pre_total"] == 22
        assert summary["newviol"]["total_new"] == 5
        assert summary["semantic"]["executed"] == 35
        assert summary["semantic"]["uncompilable_files"] == 1

    def test_seed_threads_into_sample_stage(self, mini_run, tmp_path):
        _, cfg, _ = mini_run
        config2 = minicorpus.materialize(tmp_path, seed=99)
        cfg2 = load_config(config2)
        run_pipeline(cfg2)
        alloc1 = json.loads((cfg.workspace_dir / "sample" / "allocation.json").read_text())
        alloc2 = json.loads((cfg2.workspace_dir / "sample" / "allocation.json").read_text())
        assert alloc1["seed"] == 17
        assert alloc2["seed"] == 99

    def test_stage_filter_runs_subset(self, mini_run):
        _, cfg, _ = mini_run
        summary = run_pipeline(cfg, stages=["fixrate", "report"])
        assert set(summary) == {"fixrate", "report"}

    def test_jobs_parallelism_gives_same_outputs(self, mini_run, tmp_path):
        _, cfg, _ = mini_run
        config2 = minicorpus.materialize(tmp_path, seed=17)
        cfg2 = load_config(config2)
        run_pipeline(cfg2, jobs=4)
        a = (cfg.workspace_dir / "report" / "summary.json").read_bytes()
        b = (cfg2.workspace_dir / "report" / "summary.json").read_bytes()
        assert a == b


class TestPerRuleRepair:
    def test_rule_placeholder_runs_sequential_passes(self, tmp_path):
        config_path = minicorpus.materialize(tmp_path, seed=17)
        doc = json.loads(config_path.read_text(encoding="utf-8"))
        doc["adapters"]["repairer"]["command"] = (
            "{python} -m apreval.stubs repairer {input} {output} --rule {rule}"
        )
        config_path.write_text(json.dumps(doc), encoding="utf-8")
        cfg = load_config(config_path)
        summary = run_pipeline(cfg)
        assert summary["repair"] == "ran"
        ws = cfg.workspace_dir
        passes = sorted(p.name for p in (ws / "repair").glob("pass_*"))
        assert len(passes) == 30
        assert passes[0] == "pass_00_S1118"
        assert passes[-1] == "pass_29_S2164"
        # the sequential per-rule path reaches the same repaired sources
        single_root = tmp_path / "single"
        single_cfg = load_config(minicorpus.materialize(single_root, seed=17))
        run_pipeline(single_cfg, stages=["prepare", "analyze_pre", "repair"])
        for f in sorted((ws / "repair" / "output").glob("*.java")):
            other = single_cfg.workspace_dir / "repair" / "output" / f.name
            assert f.read_text(encoding="utf-8") == other.read_text(encoding="utf-8"), f.name


class TestFailureIsolation:
    def test_failing_adapter_preserves_prior_outputs(self, tmp_path):
        config_path = minicorpus.materialize(tmp_path, seed=17)
        cfg = load_config(config_path)
        run_pipeline(cfg, stages=["prepare", "analyze_pre"])
        pre_bytes = (cfg.workspace_dir / "analyze_pre" / "pre_violations.csv").read_bytes()

        doc = json.loads(config_path.read_text(encoding="utf-8"))
        doc["adapters"]["repairer"]["command"] = f"{PY} -c \"import sys;sys.exit(3)\" {{input}}"
        config_path.write_text(json.dumps(doc), encoding="utf-8")
        broken = load_config(config_path)
        with pytest.raises(NonZeroExitError):
            run_pipeline(broken, stages=["repair"])
        assert (cfg.workspace_dir / "analyze_pre" / "pre_violations.csv").read_bytes() == pre_bytes
        state = json.loads((cfg.workspace_dir / "state.json").read_text())
        assert state["stages"]["repair"]["status"] == "failed"
        assert state["stages"]["analyze_pre"]["status"] == "ok"

    def test_missing_upstream_output_named(self, tmp_path):
        cfg = load_config(minicorpus.materialize(tmp_path, seed=17))
        with pytest.raises(MissingStageOutputError):
            run_pipeline(cfg, stages=["fixrate"])

    def test_workspace_lock(self, tmp_path):
        cfg = load_config(minicorpus.materialize(tmp_path, seed=17))
        cfg.workspace_dir.mkdir(parents=True, exist_ok=True)
        (cfg.workspace_dir / ".lock").write_text("12345", encoding="utf-8")
        with pytest.raises(WorkspaceLockedError):
            run_pipeline(cfg, stages=["prepare"])


class TestEmitReports:
    def test_missing_metrics_marked_skipped(self, tmp_path):
        cfg = load_config(minicorpus.materialize(tmp_path, seed=17))
        run_pipeline(cfg)
        shutil.rmtree(cfg.workspace_dir / "metrics")
        summary = emit_reports(cfg.workspace_dir)
        assert summary["metrics"] == {"status": "skipped"}
        assert "overall" in summary["fixrate"]

    def test_missing_fixrate_is_an_error(self, tmp_path):
        with pytest.raises(MissingStageOutputError):
            emit_reports(tmp_path)
