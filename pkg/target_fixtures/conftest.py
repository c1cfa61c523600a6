"""Shared helpers for the standalone golden-translation test suite.

The oracle expectation files live in the main package's corpus resource
tree (corpus/<entry>/oracle.json); that layout is a published interface,
and FTRANS_CORPUS_DIR overrides the default location for out-of-tree runs.
"""

import json
import os
from pathlib import Path

import pytest

_DEFAULT_CORPUS = Path(__file__).resolve().parent.parent / "src" / "ftrans" / "corpus"


def corpus_dir() -> Path:
    return Path(os.environ.get("FTRANS_CORPUS_DIR", _DEFAULT_CORPUS))


def oracle_cases(entry: str, unit: str):
    """(args, expected, tol) rows from an entry's oracle.json."""
    path = corpus_dir() / entry / "oracle.json"
    if not path.is_file():
        pytest.skip(f"oracle file not available: {path}")
    doc = json.loads(path.read_text())
    spec = doc["units"][unit]
    return [
        (
            tuple(case["args"]),
            float("nan") if case["expected"] == "nan" else float(case["expected"]),
            float(case["tol"]),
        )
        for case in spec["cases"]
    ]
