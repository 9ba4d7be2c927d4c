"""End-to-end orchestration: corpus prep, tool adapters, cached stages.

A run walks a fixed stage order (prepare, analyze pre/post around the
repair, then the four analysis axes, then report emission). Each stage
persists its outputs under ``workspace/<stage>/`` and records a content
digest of its declared inputs; a stage reruns only when that digest
changes or ``--force`` is given, so slow external tools are never invoked
redundantly. External tools are described by command templates and run as
subprocesses with timeout enforcement, artifact checks, and log capture.
Scripted stub tools ship with the package so the whole pipeline runs
without any external toolchain.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import shlex
import shutil
import string
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from . import fixrate as fixrate_mod
from . import metrics as metrics_mod
from . import newviol as newviol_mod
from . import sampling as sampling_mod
from . import semantic as semantic_mod
from .errors import (
    AdapterFailureError,
    AdapterTimeoutError,
    ConfigError,
    MissingArtifactError,
    MissingStageOutputError,
    NonZeroExitError,
    StageFailureError,
    WorkspaceLockedError,
)
from .newviol import NormalizationPolicy, SourcePair
from .violations import (
    RuleProfile,
    StateLabel,
    Violation,
    ViolationReport,
    get_profile,
    normalize_report,
    parse_report,
    serialize_report,
)

ROLES = ("analyzer", "repairer", "test_runner", "metric_extractor", "compiler")

STAGE_ORDER = (
    "prepare", "analyze_pre", "repair", "analyze_post", "fixrate",
    "newviol", "sample", "semantic", "metrics", "report",
)

_ALLOWED_PLACEHOLDERS = {"input", "output", "workdir", "python", "rule"}


@dataclass(frozen=True)
class ToolAdapter:
    """External tool described by a command template.

    Templates may use {input}, {output}, {workdir}, {python} and, for
    repairers running one pass per rule, {rule}.
    """

    name: str
    command_template: str
    timeout: float = 600.0
    expected_artifacts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if "{input}" not in self.command_template:
            raise ConfigError(f"adapters.{self.name}.command", "template must contain {input}")
        if self.timeout <= 0:
            raise ConfigError(f"adapters.{self.name}.timeout", "timeout must be > 0")
        for _, fname, _, _ in string.Formatter().parse(self.command_template):
            if fname is not None and fname not in _ALLOWED_PLACEHOLDERS:
                raise ConfigError(
                    f"adapters.{self.name}.command",
                    f"unknown placeholder {{{fname}}}; allowed: {sorted(_ALLOWED_PLACEHOLDERS)}",
                )


@dataclass(frozen=True)
class SamplingParams:
    confidence: float = 0.95
    margin: float = 0.05
    proportion: float = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    corpus_dir: Path
    workspace_dir: Path
    adapters: Mapping[str, ToolAdapter | None]  # None means the role is skipped
    profile: str = "sorald-30"
    sampling: SamplingParams = field(default_factory=SamplingParams)
    seed: int = 0
    jobs: int = 1
    normalization: NormalizationPolicy = NormalizationPolicy.EXACT
    report_adapter: str = "csv"
    report_adapter_options: Mapping = field(default_factory=dict)


_TOP_KEYS = {
    "corpus_dir", "workspace_dir", "adapters", "profile", "sampling", "seed",
    "jobs", "normalization", "report_adapter", "report_adapter_options",
}
_ADAPTER_KEYS = {"command", "timeout", "expected_artifacts"}
_SAMPLING_KEYS = {"confidence", "margin", "proportion"}


def load_config(path: str | Path) -> PipelineConfig:
    """Load and fully validate a JSON pipeline config; unknown keys reject."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(str(path), "config file does not exist")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "config root must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    for required in ("corpus_dir", "workspace_dir", "adapters"):
        if required not in doc:
            raise ConfigError(required, "required key is missing")

    raw_adapters = doc["adapters"]
    if not isinstance(raw_adapters, dict):
        raise ConfigError("adapters", "must be an object mapping roles to adapters")
    unknown = set(raw_adapters) - set(ROLES)
    if unknown:
        raise ConfigError(f"adapters.{sorted(unknown)[0]}", "unknown adapter role")
    adapters: dict[str, ToolAdapter | None] = {}
    for role in ROLES:
        if role not in raw_adapters:
            raise ConfigError(f"adapters.{role}", "role must be bound or explicitly set to \"skip\"")
        raw = raw_adapters[role]
        if raw == "skip":
            adapters[role] = None
            continue
        if not isinstance(raw, dict):
            raise ConfigError(f"adapters.{role}", "must be an adapter object or \"skip\"")
        unknown = set(raw) - _ADAPTER_KEYS
        if unknown:
            raise ConfigError(f"adapters.{role}.{sorted(unknown)[0]}", "unknown adapter key")
        if "command" not in raw:
            raise ConfigError(f"adapters.{role}.command", "required key is missing")
        adapters[role] = ToolAdapter(
            name=role,
            command_template=str(raw["command"]),
            timeout=float(raw.get("timeout", 600.0)),
            expected_artifacts=tuple(raw.get("expected_artifacts", ())),
        )

    raw_sampling = doc.get("sampling", {})
    if not isinstance(raw_sampling, dict):
        raise ConfigError("sampling", "must be an object")
    unknown = set(raw_sampling) - _SAMPLING_KEYS
    if unknown:
        raise ConfigError(f"sampling.{sorted(unknown)[0]}", "unknown sampling key")
    sampling = SamplingParams(
        confidence=float(raw_sampling.get("confidence", 0.95)),
        margin=float(raw_sampling.get("margin", 0.05)),
        proportion=float(raw_sampling.get("proportion", 0.5)),
    )

    try:
        normalization = NormalizationPolicy(doc.get("normalization", "exact"))
    except ValueError:
        raise ConfigError("normalization", f"must be one of {[p.value for p in NormalizationPolicy]}") from None

    base = path.parent
    corpus_dir = (base / doc["corpus_dir"]).resolve()
    workspace_dir = (base / doc["workspace_dir"]).resolve()
    return PipelineConfig(
        corpus_dir=corpus_dir,
        workspace_dir=workspace_dir,
        adapters=adapters,
        profile=str(doc.get("profile", "sorald-30")),
        sampling=sampling,
        seed=int(doc.get("seed", 0)),
        jobs=int(doc.get("jobs", 1)),
        normalization=normalization,
        report_adapter=str(doc.get("report_adapter", "csv")),
        report_adapter_options=dict(doc.get("report_adapter_options", {})),
    )


# --- adapter execution --------------------------------------------------------


def run_tool_adapter(
    adapter: ToolAdapter,
    input_dir: Path,
    output_dir: Path,
    rule: str | None = None,
) -> list[str]:
    """Spawn the adapter command and verify its declared artifacts.

    stdout/stderr are captured to log files beside the artifacts. Returns
    the sorted relative paths of everything the tool produced.
    """
    if not input_dir.is_dir():
        raise StageFailureError(adapter.name, f"input directory does not exist: {input_dir}")
    output_dir.mkdir(parents=True, exist_ok=True)
    subst = {
        "input": str(input_dir),
        "output": str(output_dir),
        "workdir": str(output_dir),
        "python": sys.executable,
    }
    if rule is not None:
        subst["rule"] = rule
    command = adapter.command_template.format(**subst)
    try:
        proc = subprocess.run(
            shlex.split(command),
            capture_output=True,
            timeout=adapter.timeout,
            cwd=output_dir,
        )
    except subprocess.TimeoutExpired:
        raise AdapterTimeoutError(adapter.name, adapter.timeout) from None
    (output_dir / "adapter_stdout.log").write_bytes(proc.stdout)
    (output_dir / "adapter_stderr.log").write_bytes(proc.stderr)
    if proc.returncode != 0:
        raise NonZeroExitError(adapter.name, proc.returncode, proc.stderr.decode("utf-8", "replace"))
    for artifact in adapter.expected_artifacts:
        if not (output_dir / artifact).exists():
            raise MissingArtifactError(adapter.name, artifact)
    return sorted(
        p.relative_to(output_dir).as_posix()
        for p in output_dir.rglob("*")
        if p.is_file() and p.name not in ("adapter_stdout.log", "adapter_stderr.log")
    )


def prepare_corpus_compile(
    corpus_dir: Path, compiler: ToolAdapter, out_dir: Path
) -> tuple[list[str], dict[str, str]]:
    """Attempt each corpus file once; split into compilable and rejected.

    The compiler adapter writes ``compile_results.json`` (one record per
    file with ok/diagnostic); rejected files keep their diagnostics for the
    later compile-error classification.
    """
    run_tool_adapter(compiler, corpus_dir, out_dir)
    results_path = out_dir / "compile_results.json"
    if not results_path.is_file():
        raise MissingArtifactError(compiler.name, "compile_results.json")
    results = json.loads(results_path.read_text(encoding="utf-8"))
    compilable = sorted(r["file"] for r in results if r["ok"])
    rejected = {r["file"]: r["diagnostic"] for r in results if not r["ok"]}
    return compilable, rejected


def prepare_corpus_violating(
    compilable: Iterable[str], report: ViolationReport, profile: RuleProfile
) -> list[str]:
    """Files carrying at least one in-profile violation; the repair input."""
    rules = set(profile.rules)
    violating = {v.file_id for v in report.entries if v.rule in rules}
    return sorted(set(compilable) & violating)


# --- digests and state --------------------------------------------------------


def _hash_bytes(h, data: bytes) -> None:
    h.update(len(data).to_bytes(8, "big"))
    h.update(data)


def digest_paths(paths: Sequence[Path], extra: str = "") -> str:
    """Content hash over files/trees plus a config fingerprint string."""
    h = hashlib.sha256()
    for path in paths:
        if path.is_file():
            _hash_bytes(h, path.name.encode())
            _hash_bytes(h, path.read_bytes())
        elif path.is_dir():
            for f in sorted(path.rglob("*")):
                if f.is_file():
                    _hash_bytes(h, f.relative_to(path).as_posix().encode())
                    _hash_bytes(h, f.read_bytes())
        else:
            raise FileNotFoundError(str(path))
    _hash_bytes(h, extra.encode())
    return h.hexdigest()


def _adapter_fingerprint(adapter: ToolAdapter | None) -> str:
    if adapter is None:
        return "skip"
    return json.dumps(
        {
            "command": adapter.command_template,
            "timeout": adapter.timeout,
            "artifacts": list(adapter.expected_artifacts),
        },
        sort_keys=True,
    )


class _WorkspaceLock:
    def __init__(self, workspace: Path):
        self.path = workspace / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise WorkspaceLockedError(str(self.path)) from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


def _read_csv_report(path: Path, state: StateLabel) -> ViolationReport:
    return parse_report(path.read_bytes(), "csv", state)


def _load_sources(original_dir: Path, repaired_dir: Path) -> dict[str, SourcePair]:
    """Build SourcePairs for every file present in the original tree."""
    pairs: dict[str, SourcePair] = {}
    for path in sorted(original_dir.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(original_dir).as_posix()
        repaired_path = repaired_dir / rel
        repaired_text = repaired_path.read_text(encoding="utf-8") if repaired_path.is_file() else ""
        pairs[rel] = SourcePair.from_texts(rel, path.read_text(encoding="utf-8"), repaired_text)
    return pairs


# --- the run itself -----------------------------------------------------------


class PipelineRun:
    """One pipeline execution over a workspace."""

    def __init__(self, config: PipelineConfig, force: bool = False, jobs: int | None = None):
        self.config = config
        self.force = force
        self.jobs = jobs if jobs is not None else config.jobs
        self.workspace = config.workspace_dir
        self.profile = get_profile(config.profile)
        self.state_path = self.workspace / "state.json"
        self.state: dict = {}
        self.summary: dict[str, str] = {}

    # -- state bookkeeping

    def _load_state(self) -> None:
        if self.state_path.is_file():
            self.state = json.loads(self.state_path.read_text(encoding="utf-8"))
        else:
            self.state = {"stages": {}}

    def _save_state(self) -> None:
        self.state_path.write_text(
            json.dumps(self.state, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def _stage_dir(self, name: str) -> Path:
        return self.workspace / name

    def _require(self, stage: str, path: Path) -> Path:
        if not path.exists():
            raise MissingStageOutputError(stage, str(path))
        return path

    def _run_stage(self, name: str, inputs: Sequence[Path], extra: str, body: Callable[[Path], None]) -> None:
        try:
            digest = digest_paths(inputs, extra)
        except FileNotFoundError as exc:
            raise MissingStageOutputError(name, str(exc)) from None
        record = self.state["stages"].get(name)
        stage_dir = self._stage_dir(name)
        if (
            not self.force
            and record is not None
            and record.get("status") == "ok"
            and record.get("input_digest") == digest
            and stage_dir.is_dir()
        ):
            self.summary[name] = "cached"
            return
        if stage_dir.exists():
            shutil.rmtree(stage_dir)
        stage_dir.mkdir(parents=True)
        started = time.time()
        try:
            body(stage_dir)
        except Exception as exc:
            self.state["stages"][name] = {
                "status": "failed",
                "input_digest": digest,
                "error": str(exc),
                "started": started,
                "finished": time.time(),
            }
            self._save_state()
            # adapter failures keep their own type so the CLI can map them
            # to a distinct exit code
            if isinstance(exc, (StageFailureError, AdapterFailureError)):
                raise
            raise StageFailureError(name, str(exc)) from exc
        self.state["stages"][name] = {
            "status": "ok",
            "input_digest": digest,
            "output_digest": digest_paths([stage_dir]),
            "started": started,
            "finished": time.time(),
        }
        self._save_state()
        self.summary[name] = "ran"

    def _adapter(self, role: str) -> ToolAdapter | None:
        return self.config.adapters.get(role)

    def _skip(self, name: str, reason: str) -> None:
        self.summary[name] = f"skipped ({reason})"

    def _map_parallel(self, tasks: Sequence[Callable[[], object]]) -> list[object]:
        """Run independent adapter invocations, honoring the jobs setting."""
        if self.jobs <= 1 or len(tasks) <= 1:
            return [t() for t in tasks]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            futures = [pool.submit(t) for t in tasks]
            return [f.result() for f in futures]

    # -- stages

    def _stage_prepare(self) -> None:
        compiler = self._adapter("compiler")
        corpus = self.config.corpus_dir
        if not corpus.is_dir():
            raise StageFailureError("prepare", f"corpus directory does not exist: {corpus}")

        def body(stage_dir: Path) -> None:
            if compiler is not None:
                compilable, rejected = prepare_corpus_compile(corpus, compiler, stage_dir / "raw")
            else:
                compilable = sorted(
                    p.relative_to(corpus).as_posix() for p in corpus.rglob("*") if p.is_file()
                )
                rejected = {}
            sources = stage_dir / "sources"
            sources.mkdir()
            for rel in compilable:
                dest = sources / rel
                dest.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(corpus / rel, dest)
            (stage_dir / "rejected.json").write_text(
                json.dumps(rejected, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            (stage_dir / "compilable.txt").write_text(
                "".join(f"{rel}\n" for rel in compilable), encoding="utf-8"
            )

        self._run_stage("prepare", [corpus], _adapter_fingerprint(compiler), body)

    def _analyze(self, name: str, sources: Path, state: StateLabel, out_name: str) -> None:
        analyzer = self._adapter("analyzer")
        if analyzer is None:
            self._skip(name, "analyzer role not bound")
            return

        def body(stage_dir: Path) -> None:
            artifacts = run_tool_adapter(analyzer, sources, stage_dir / "raw")
            if analyzer.expected_artifacts:
                report_file = stage_dir / "raw" / analyzer.expected_artifacts[0]
            elif artifacts:
                report_file = stage_dir / "raw" / artifacts[0]
            else:
                raise MissingArtifactError(analyzer.name, "<analysis report>")
            report = parse_report(
                report_file.read_bytes(),
                self.config.report_adapter,
                state,
                options=self.config.report_adapter_options,
            )
            (stage_dir / out_name).write_text(serialize_report(report), encoding="utf-8")

        extra = _adapter_fingerprint(analyzer) + "|" + self.config.report_adapter
        self._run_stage(name, [sources], extra, body)

    def _stage_analyze_pre(self) -> None:
        sources = self._require("analyze_pre", self._stage_dir("prepare") / "sources")
        self._analyze("analyze_pre", sources, StateLabel.PRE_REPAIR, "pre_violations.csv")

    def _stage_repair(self) -> None:
        repairer = self._adapter("repairer")
        if repairer is None:
            self._skip("repair", "repairer role not bound")
            return
        sources = self._require("repair", self._stage_dir("prepare") / "sources")
        pre_csv = self._require("repair", self._stage_dir("analyze_pre") / "pre_violations.csv")
        compilable_txt = self._require("repair", self._stage_dir("prepare") / "compilable.txt")

        def body(stage_dir: Path) -> None:
            pre = _read_csv_report(pre_csv, StateLabel.PRE_REPAIR)
            compilable = compilable_txt.read_text(encoding="utf-8").splitlines()
            violating = prepare_corpus_violating(compilable, pre, self.profile)
            (stage_dir / "violating_files.txt").write_text(
                "".join(f"{rel}\n" for rel in violating), encoding="utf-8"
            )
            input_dir = stage_dir / "input"
            input_dir.mkdir()
            for rel in violating:
                dest = input_dir / rel
                dest.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(sources / rel, dest)
            output_dir = stage_dir / "output"
            if "{rule}" in repairer.command_template:
                # one sequential pass per profile rule, in application order
                current = input_dir
                for i, rule in enumerate(self.profile.application_order):
                    pass_dir = stage_dir / f"pass_{i:02d}_{rule}"
                    run_tool_adapter(repairer, current, pass_dir, rule=rule)
                    current = pass_dir
                shutil.copytree(current, output_dir, ignore=shutil.ignore_patterns("adapter_*.log"))
            else:
                run_tool_adapter(repairer, input_dir, output_dir)

        extra = _adapter_fingerprint(repairer) + "|" + self.profile.name
        self._run_stage("repair", [sources, pre_csv, compilable_txt], extra, body)

    def _stage_analyze_post(self) -> None:
        repaired = self._require("analyze_post", self._stage_dir("repair") / "output")
        self._analyze("analyze_post", repaired, StateLabel.POST_REPAIR, "post_violations.csv")

    def _load_matched_reports(self, stage: str) -> tuple[ViolationReport, ViolationReport]:
        """Pre report restricted to the repaired files, plus the post report."""
        pre_csv = self._require(stage, self._stage_dir("analyze_pre") / "pre_violations.csv")
        post_csv = self._require(stage, self._stage_dir("analyze_post") / "post_violations.csv")
        violating_txt = self._require(stage, self._stage_dir("repair") / "violating_files.txt")
        violating = set(violating_txt.read_text(encoding="utf-8").splitlines())
        pre_full = _read_csv_report(pre_csv, StateLabel.PRE_REPAIR)
        pre = normalize_report(
            ViolationReport(
                state=StateLabel.PRE_REPAIR,
                entries=tuple(v for v in pre_full.entries if v.file_id in violating),
            )
        )
        post = _read_csv_report(post_csv, StateLabel.POST_REPAIR)
        return pre, post

    def _matching_inputs(self, stage: str) -> list[Path]:
        return [
            self._require(stage, self._stage_dir("analyze_pre") / "pre_violations.csv"),
            self._require(stage, self._stage_dir("analyze_post") / "post_violations.csv"),
            self._require(stage, self._stage_dir("repair") / "violating_files.txt"),
        ]

    def _stage_fixrate(self) -> None:
        inputs = self._matching_inputs("fixrate")

        def body(stage_dir: Path) -> None:
            pre, post = self._load_matched_reports("fixrate")
            outcome = fixrate_mod.match_violations(pre, post)
            table = fixrate_mod.compute_fix_rates(outcome, self.profile)
            summary = fixrate_mod.summarize_fix_rate(table)
            (stage_dir / "fixrate.csv").write_text(summary.csv_text, encoding="utf-8")
            (stage_dir / "fixrate.json").write_text(summary.json_text, encoding="utf-8")
            fixed_report = ViolationReport(state=StateLabel.PRE_REPAIR, entries=outcome.fixed)
            (stage_dir / "fixed_violations.csv").write_text(
                serialize_report(fixed_report), encoding="utf-8"
            )

        self._run_stage("fixrate", inputs, self.profile.name, body)

    def _stage_newviol(self) -> None:
        inputs = self._matching_inputs("newviol")
        inputs.append(self._require("newviol", self._stage_dir("repair") / "input"))
        inputs.append(self._require("newviol", self._stage_dir("repair") / "output"))

        def body(stage_dir: Path) -> None:
            pre, post = self._load_matched_reports("newviol")
            sources = _load_sources(
                self._stage_dir("repair") / "input", self._stage_dir("repair") / "output"
            )
            verdicts = newviol_mod.detect_new_violations(pre, post, sources, self.config.normalization)
            with (stage_dir / "new_violations.csv").open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(
                    ["file", "rule", "type", "severity", "start_line", "end_line",
                     "message", "verdict", "evidence_line"]
                )
                for vd in verdicts:
                    v = vd.violation
                    writer.writerow(
                        [v.file_id, v.rule, v.vtype.value, v.severity.value, v.start_line,
                         v.end_line, v.message, vd.verdict.value,
                         "" if vd.evidence is None else vd.evidence]
                    )
            breakdown = newviol_mod.categorize_new(verdicts)
            with (stage_dir / "new_matrix.csv").open("w", encoding="utf-8", newline="") as fh:
                fh.write("type,severity,count\n")
                for (vtype, severity), count in sorted(
                    breakdown.matrix.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
                ):
                    fh.write(f"{vtype.value},{severity.value},{count}\n")
            with (stage_dir / "new_frequency.csv").open("w", encoding="utf-8", newline="") as fh:
                fh.write("rule,count\n")
                for rule, count in breakdown.rule_frequency:
                    fh.write(f"{rule},{count}\n")
            deleted = sorted(p.file_id for p in sources.values() if p.repaired_deleted)
            (stage_dir / "notes.txt").write_text(
                "".join(f"FileDeleted: {rel}\n" for rel in deleted), encoding="utf-8"
            )

        extra = self.profile.name + "|" + self.config.normalization.value
        self._run_stage("newviol", inputs, extra, body)

    def _stage_sample(self) -> None:
        new_csv = self._require("sample", self._stage_dir("newviol") / "new_violations.csv")
        repair_in = self._require("sample", self._stage_dir("repair") / "input")
        repair_out = self._require("sample", self._stage_dir("repair") / "output")
        params = self.config.sampling

        def body(stage_dir: Path) -> None:
            from .violations import Severity, ViolationType

            population: dict[str, list[Violation]] = {}
            with new_csv.open("r", encoding="utf-8", newline="") as fh:
                for row in csv.DictReader(fh):
                    if row["verdict"] != newviol_mod.VerdictKind.NEW.value:
                        continue
                    v = Violation(
                        file_id=row["file"],
                        rule=row["rule"],
                        vtype=ViolationType(row["type"]),
                        severity=Severity(row["severity"]),
                        start_line=int(row["start_line"]),
                        end_line=int(row["end_line"]),
                        message=row["message"],
                    )
                    population.setdefault(v.rule, []).append(v)
            total = sum(len(vs) for vs in population.values())
            if total == 0:
                (stage_dir / "sheet.csv").write_text(
                    ",".join(sampling_mod.SHEET_HEADER) + "\n", encoding="utf-8"
                )
                (stage_dir / "allocation.json").write_text(
                    json.dumps({"population": 0, "target_n": 0, "allocation": {}},
                               indent=2, sort_keys=True) + "\n",
                    encoding="utf-8",
                )
                return
            target = sampling_mod.cochran_sample_size(
                total, params.confidence, params.margin, params.proportion
            )
            target = max(target, len(population))  # min-one per stratum floor
            sample = sampling_mod.stratified_sample(population, target, self.config.seed)
            sources = _load_sources(repair_in, repair_out)
            # fragments come from the repaired code, so index sources that way
            sheet = sampling_mod.export_labeling_sheet(sample, sources)
            (stage_dir / "sheet.csv").write_text(sheet, encoding="utf-8")
            (stage_dir / "allocation.json").write_text(
                json.dumps(
                    {
                        "population": total,
                        "target_n": sample.size,
                        "allocation": dict(sorted(sample.allocation.items())),
                        "seed": self.config.seed,
                    },
                    indent=2,
                    sort_keys=True,
                )
                + "\n",
                encoding="utf-8",
            )

        extra = json.dumps(
            {"confidence": params.confidence, "margin": params.margin,
             "proportion": params.proportion, "seed": self.config.seed},
            sort_keys=True,
        )
        self._run_stage("sample", [new_csv, repair_in, repair_out], extra, body)

    def _stage_semantic(self) -> None:
        runner = self._adapter("test_runner")
        if runner is None:
            self._skip("semantic", "test_runner role not bound")
            return
        compiler = self._adapter("compiler")
        repair_in = self._require("semantic", self._stage_dir("repair") / "input")
        repair_out = self._require("semantic", self._stage_dir("repair") / "output")

        def body(stage_dir: Path) -> None:
            tasks = [
                lambda: run_tool_adapter(runner, repair_in, stage_dir / "baseline_raw"),
                lambda: run_tool_adapter(runner, repair_out, stage_dir / "repaired_raw"),
            ]
            if compiler is not None:
                tasks.append(lambda: run_tool_adapter(compiler, repair_out, stage_dir / "compile_raw"))
            self._map_parallel(tasks)

            original_run = semantic_mod.ingest_test_results(
                (stage_dir / "baseline_raw" / "results.csv").read_bytes()
            )
            repaired_run = semantic_mod.ingest_test_results(
                (stage_dir / "repaired_raw" / "results.csv").read_bytes()
            )
            baseline = semantic_mod.filter_baseline(original_run)
            regressions = semantic_mod.diff_test_outcomes(baseline, repaired_run)
            diagnostics: dict[str, str] = {}
            if compiler is not None:
                results = json.loads(
                    (stage_dir / "compile_raw" / "compile_results.json").read_text(encoding="utf-8")
                )
                diagnostics = {r["file"]: r["diagnostic"] for r in results if not r["ok"]}
            summary = semantic_mod.summarize_semantic(baseline, regressions, diagnostics)

            with (stage_dir / "regressions.csv").open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["test_id", "status", "failure_kind", "missing_in_repaired_run"])
                for reg in regressions:
                    writer.writerow(
                        [reg.test_id, reg.status.value, reg.failure_kind or "",
                         str(reg.missing_in_repaired_run).lower()]
                    )
            with (stage_dir / "failure_histogram.csv").open("w", encoding="utf-8", newline="") as fh:
                fh.write("failure_class,count\n")
                for cls in semantic_mod.FailureClass:
                    fh.write(f"{cls.value},{summary.failure_histogram.get(cls, 0)}\n")
            with (stage_dir / "compile_errors.csv").open("w", encoding="utf-8", newline="") as fh:
                fh.write("compile_error_class,count\n")
                for cls in semantic_mod.CompileErrorClass:
                    fh.write(f"{cls.value},{summary.compile_error_histogram.get(cls, 0)}\n")
            payload = {
                "executed": summary.executed,
                "failed": summary.failed,
                "pass_rate": summary.pass_rate,
                "excluded_simulation_artifacts": summary.excluded_simulation_artifacts,
                "failure_histogram": {
                    cls.value: n for cls, n in sorted(
                        summary.failure_histogram.items(), key=lambda kv: kv[0].value
                    )
                },
                "compile_error_histogram": {
                    cls.value: n for cls, n in sorted(
                        summary.compile_error_histogram.items(), key=lambda kv: kv[0].value
                    )
                },
                "uncompilable_files": summary.uncompilable_files,
            }
            (stage_dir / "semantic.json").write_text(
                json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )

        extra = _adapter_fingerprint(runner) + "|" + _adapter_fingerprint(compiler)
        self._run_stage("semantic", [repair_in, repair_out], extra, body)

    def _stage_metrics(self) -> None:
        extractor = self._adapter("metric_extractor")
        if extractor is None:
            self._skip("metrics", "metric_extractor role not bound")
            return
        repair_in = self._require("metrics", self._stage_dir("repair") / "input")
        repair_out = self._require("metrics", self._stage_dir("repair") / "output")

        def body(stage_dir: Path) -> None:
            self._map_parallel(
                [
                    lambda: run_tool_adapter(extractor, repair_in, stage_dir / "pre_raw"),
                    lambda: run_tool_adapter(extractor, repair_out, stage_dir / "post_raw"),
                ]
            )
            pre_rows = metrics_mod.read_class_metrics_csv(
                (stage_dir / "pre_raw" / "class_metrics.csv").read_bytes()
            )
            post_rows = metrics_mod.read_class_metrics_csv(
                (stage_dir / "post_raw" / "class_metrics.csv").read_bytes()
            )
            pairs, exclusions = metrics_mod.pair_pre_post(
                metrics_mod.aggregate_file_metrics(pre_rows),
                metrics_mod.aggregate_file_metrics(post_rows),
            )
            report = metrics_mod.structural_report(pairs)
            (stage_dir / "structural_stats.csv").write_text(
                metrics_mod.structural_stats_csv(report), encoding="utf-8"
            )
            (stage_dir / "metric_medians.csv").write_text(
                metrics_mod.metric_medians_csv(report), encoding="utf-8"
            )
            (stage_dir / "signed_ranks.csv").write_text(
                metrics_mod.signed_ranks_csv(report), encoding="utf-8"
            )
            (stage_dir / "normality.csv").write_text(
                metrics_mod.normality_csv(report), encoding="utf-8"
            )
            with (stage_dir / "exclusions.csv").open("w", encoding="utf-8", newline="") as fh:
                fh.write("file,reason\n")
                for file_id, reason in exclusions:
                    fh.write(f"{file_id},{reason}\n")
            payload = {
                "n_pairs": len(pairs),
                "excluded": len(exclusions),
                "significant": list(report.significant()),
                "per_metric": [
                    {
                        "metric": s.metric,
                        "n_effective": s.wilcoxon.n_effective,
                        "statistic": s.wilcoxon.statistic,
                        "p_value": s.wilcoxon.p_value,
                        "direction": s.wilcoxon.direction.value,
                        "median_delta": s.direction.median_delta,
                        "mean_signed_rank": s.direction.mean_signed_rank,
                        "pre_median": s.pre_median,
                        "post_median": s.post_median,
                    }
                    for s in report.per_metric
                ],
            }
            (stage_dir / "metrics.json").write_text(
                json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )

        self._run_stage("metrics", [repair_in, repair_out], _adapter_fingerprint(extractor), body)

    def _stage_report(self) -> None:
        inputs = [self._require("report", self._stage_dir("fixrate") / "fixrate.json")]
        for optional in (
            self._stage_dir("newviol"), self._stage_dir("sample"),
            self._stage_dir("semantic"), self._stage_dir("metrics"),
        ):
            if optional.is_dir():
                inputs.append(optional)

        def body(stage_dir: Path) -> None:
            emit_reports(self.workspace)

        self._run_stage("report", inputs, "", body)

    def run(self, stages: Sequence[str] | None = None) -> dict[str, str]:
        """Execute the requested stages (all by default) in canonical order."""
        requested = set(stages) if stages else set(STAGE_ORDER)
        unknown = requested - set(STAGE_ORDER)
        if unknown:
            raise ConfigError("stages", f"unknown stage(s): {sorted(unknown)}")
        self.workspace.mkdir(parents=True, exist_ok=True)
        with _WorkspaceLock(self.workspace):
            self._load_state()
            runners = {
                "prepare": self._stage_prepare,
                "analyze_pre": self._stage_analyze_pre,
                "repair": self._stage_repair,
                "analyze_post": self._stage_analyze_post,
                "fixrate": self._stage_fixrate,
                "newviol": self._stage_newviol,
                "sample": self._stage_sample,
                "semantic": self._stage_semantic,
                "metrics": self._stage_metrics,
                "report": self._stage_report,
            }
            for name in STAGE_ORDER:
                if name in requested:
                    runners[name]()
        return dict(self.summary)


def run_pipeline(
    config: PipelineConfig,
    stages: Sequence[str] | None = None,
    force: bool = False,
    jobs: int | None = None,
) -> dict[str, str]:
    """Convenience wrapper: construct a run and execute it."""
    return PipelineRun(config, force=force, jobs=jobs).run(stages)


# --- unified report -----------------------------------------------------------

_REPORT_CSVS = (
    ("fixrate", "fixrate.csv"),
    ("fixrate", "fixed_violations.csv"),
    ("newviol", "new_violations.csv"),
    ("newviol", "new_matrix.csv"),
    ("newviol", "new_frequency.csv"),
    ("sample", "sheet.csv"),
    ("semantic", "regressions.csv"),
    ("semantic", "failure_histogram.csv"),
    ("semantic", "compile_errors.csv"),
    ("metrics", "structural_stats.csv"),
    ("metrics", "metric_medians.csv"),
    ("metrics", "signed_ranks.csv"),
    ("metrics", "normality.csv"),
)


def emit_reports(workspace: Path) -> dict:
    """Merge all axis outputs into ``report/summary.json`` plus CSV copies.

    The fix-rate axis is required (it is the baseline every other analysis
    builds on); the other axes are marked skipped when their stage outputs
    are absent. Output depends only on the stage outputs, so identical
    workspaces produce byte-identical reports.
    """
    workspace = Path(workspace)
    report_dir = workspace / "report"
    report_dir.mkdir(parents=True, exist_ok=True)

    fixrate_json = workspace / "fixrate" / "fixrate.json"
    if not fixrate_json.is_file():
        raise MissingStageOutputError("fixrate", str(fixrate_json))
    summary: dict = {"fixrate": json.loads(fixrate_json.read_text(encoding="utf-8"))}

    new_csv = workspace / "newviol" / "new_violations.csv"
    if new_csv.is_file():
        with new_csv.open("r", encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        new_rows = [r for r in rows if r["verdict"] == "new"]
        matrix: dict[str, int] = {}
        for r in new_rows:
            key = f"{r['type']}/{r['severity']}"
            matrix[key] = matrix.get(key, 0) + 1
        freq: dict[str, int] = {}
        for r in new_rows:
            freq[r["rule"]] = freq.get(r["rule"], 0) + 1
        summary["newviol"] = {
            "post_violations": len(rows),
            "total_new": len(new_rows),
            "matrix": dict(sorted(matrix.items())),
            "top_rules": sorted(freq.items(), key=lambda kv: (-kv[1], kv[0])),
        }
    else:
        summary["newviol"] = {"status": "skipped"}

    allocation_json = workspace / "sample" / "allocation.json"
    if allocation_json.is_file():
        summary["sample"] = json.loads(allocation_json.read_text(encoding="utf-8"))
    else:
        summary["sample"] = {"status": "skipped"}

    semantic_json = workspace / "semantic" / "semantic.json"
    if semantic_json.is_file():
        summary["semantic"] = json.loads(semantic_json.read_text(encoding="utf-8"))
    else:
        summary["semantic"] = {"status": "skipped"}

    metrics_json = workspace / "metrics" / "metrics.json"
    if metrics_json.is_file():
        summary["metrics"] = json.loads(metrics_json.read_text(encoding="utf-8"))
    else:
        summary["metrics"] = {"status": "skipped"}

    (report_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for stage, name in _REPORT_CSVS:
        src = workspace / stage / name
        if src.is_file():
            shutil.copyfile(src, report_dir / name)
    return summary
