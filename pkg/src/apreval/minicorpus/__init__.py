"""Bundled 12-file corpus and stub-adapter config for self-contained runs.

The corpus ships as package data; ``materialize`` copies it next to a
workspace and writes a pipeline config wired to the scripted stub tools,
so the complete pipeline can run (and be tested) with no external
toolchain.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

STUB_TIMEOUT = 120.0


def corpus_file_names() -> list[str]:
    root = resources.files("apreval.minicorpus")
    return sorted(entry.name for entry in root.iterdir() if entry.name.endswith(".java"))


def materialize(dest_dir: str | Path, seed: int = 17) -> Path:
    """Copy the corpus into ``dest_dir/corpus`` and write ``config.json``.

    Returns the config path. The workspace is placed at
    ``dest_dir/workspace``.
    """
    dest = Path(dest_dir)
    corpus = dest / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    root = resources.files("apreval.minicorpus")
    for name in corpus_file_names():
        (corpus / name).write_text(
            root.joinpath(name).read_text(encoding="utf-8"), encoding="utf-8"
        )
    config = {
        "corpus_dir": "corpus",
        "workspace_dir": "workspace",
        "profile": "sorald-30",
        "seed": seed,
        "normalization": "exact",
        "adapters": {
            "analyzer": {
                "command": "{python} -m apreval.stubs analyzer {input} {output}",
                "timeout": STUB_TIMEOUT,
                "expected_artifacts": ["violations.csv"],
            },
            "repairer": {
                "command": "{python} -m apreval.stubs repairer {input} {output}",
                "timeout": STUB_TIMEOUT,
            },
            "test_runner": {
                "command": "{python} -m apreval.stubs testrunner {input} {output}",
                "timeout": STUB_TIMEOUT,
                "expected_artifacts": ["results.csv"],
            },
            "metric_extractor": {
                "command": "{python} -m apreval.stubs metrics {input} {output}",
                "timeout": STUB_TIMEOUT,
                "expected_artifacts": ["class_metrics.csv"],
            },
            "compiler": {
                "command": "{python} -m apreval.stubs compiler {input} {output}",
                "timeout": STUB_TIMEOUT,
                "expected_artifacts": ["compile_results.json"],
            },
        },
    }
    config_path = dest / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return config_path
