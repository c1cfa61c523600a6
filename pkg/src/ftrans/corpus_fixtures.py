"""Versioned Fortran corpus with golden translations and oracle data.

Three entries live under the corpus resource tree: the day-length function
with its funit tests, a nine-function root-solver module whose `hybrid`
driver depends on the other eight, and a self-contained leaf-photosynthesis
solve. Every file is pinned by checksum, and every oracle expectation in
`oracle.json` is reproducible by leaf_numerics within its stated tolerance.

The funit `.pf` files are stored artifacts: generating them is part of the
pipeline, executing them would need a Fortran toolchain and is out of scope.
The daylength pair is transcribed from the published translation-run sample;
its `test_edge_cases` expects values the source cannot produce and is kept
verbatim as an example of a generated-but-wrong test. The other two entries
are authored for this corpus.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .errors import ChecksumMismatch
from .leaf_numerics import (
    PhotoParams,
    daylength,
    diffusion_supply,
    rubisco_limited,
    rubp_limited,
    secant_update,
    solve_ci,
)
from .leaf_numerics.dual import value_of

CORPUS_DIR = Path(__file__).resolve().parent / "corpus"
CHECKSUM_FILE = "checksums.json"


@dataclass(frozen=True)
class OracleCase:
    args: tuple[float, ...]
    expected: float  # NaN encoded as the string "nan" in oracle.json
    tol: float


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    root: Path
    fortran_source: Path
    fortran_tests: Path
    golden_source: Path
    golden_tests: Path
    golden_units: dict[str, tuple[Path, Path]]  # unit -> (module, tests)
    oracle: dict[str, tuple[str, tuple[OracleCase, ...]]]  # unit -> (oracle fn, cases)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def verify_checksums(corpus_dir: Path = CORPUS_DIR) -> None:
    manifest = json.loads((corpus_dir / CHECKSUM_FILE).read_text())
    for rel, digest in manifest.items():
        path = corpus_dir / rel
        if not path.is_file() or _sha256(path) != digest:
            raise ChecksumMismatch(str(path))


def _parse_oracle(path: Path) -> dict[str, tuple[str, tuple[OracleCase, ...]]]:
    doc = json.loads(path.read_text())
    out: dict[str, tuple[str, tuple[OracleCase, ...]]] = {}
    for unit, spec in doc["units"].items():
        cases = tuple(
            OracleCase(
                args=tuple(float(a) for a in case["args"]),
                expected=float("nan") if case["expected"] == "nan" else float(case["expected"]),
                tol=float(case["tol"]),
            )
            for case in spec["cases"]
        )
        out[unit] = (spec["oracle"], cases)
    return out


def load_corpus(corpus_dir: Path = CORPUS_DIR, verify: bool = True) -> list[CorpusEntry]:
    """Enumerate corpus entries, verifying file checksums first."""
    if verify:
        verify_checksums(corpus_dir)
    entries: list[CorpusEntry] = []
    for entry_dir in sorted(p for p in corpus_dir.iterdir() if p.is_dir()):
        golden_dir = entry_dir / "golden"
        golden_units: dict[str, tuple[Path, Path]] = {}
        for mod in sorted(golden_dir.glob("*.py")):
            if mod.name.startswith("test_"):
                continue
            tests = golden_dir / f"test_{mod.name}"
            golden_units[mod.stem] = (mod, tests)
        oracle = _parse_oracle(entry_dir / "oracle.json")
        headline = _headline_unit(entry_dir, golden_units)
        tests_pf = entry_dir / f"{headline}.pf"
        if not tests_pf.is_file():
            tests_pf = entry_dir / "tests.pf"
        entries.append(
            CorpusEntry(
                name=entry_dir.name,
                root=entry_dir,
                fortran_source=entry_dir / "src.f90",
                fortran_tests=tests_pf,
                golden_source=golden_units[headline][0],
                golden_tests=golden_units[headline][1],
                golden_units=golden_units,
                oracle=oracle,
            )
        )
    return entries


def _headline_unit(entry_dir: Path, golden_units: dict[str, tuple[Path, Path]]) -> str:
    """Last unit defined in src.f90 that has a golden; the entry's flagship."""
    from .fortran_units import scan_file  # local import to avoid a cycle

    text = (entry_dir / "src.f90").read_text()
    units = scan_file("src.f90", text)
    names = [u.name for u in units if u.name in golden_units]
    return names[-1]


def entry_by_name(name: str, corpus_dir: Path = CORPUS_DIR) -> CorpusEntry:
    for entry in load_corpus(corpus_dir):
        if entry.name == name:
            return entry
    raise KeyError(f"no corpus entry named {name!r}")


def golden_for_unit(unit_name: str,
                    corpus_dir: Path = CORPUS_DIR) -> tuple[str, str] | None:
    """(module text, test text) for a unit with a golden translation."""
    for entry in load_corpus(corpus_dir, verify=False):
        hit = entry.golden_units.get(unit_name)
        if hit:
            return hit[0].read_text(), hit[1].read_text()
    return None


def fortran_tests_for_unit(unit_name: str,
                           corpus_dir: Path = CORPUS_DIR) -> str | None:
    """Stored funit tests for a unit: <unit>.pf first, shared tests.pf second."""
    for entry in load_corpus(corpus_dir, verify=False):
        if unit_name not in entry.golden_units:
            continue
        for candidate in (entry.root / f"{unit_name}.pf", entry.root / "tests.pf"):
            if candidate.is_file():
                return candidate.read_text()
    return None


def oracle_registry(params: PhotoParams | None = None) -> dict[str, Callable[..., float]]:
    """Callable per oracle name, all backed by leaf_numerics.

    The adapters expose the corpus units' signatures (scalars in, scalar
    out) on top of the reference model at default parameters.
    """
    p = params or PhotoParams.defaults()
    slope = 1.6 * (1.0 + p.g1 / math.sqrt(p.vpd))
    return {
        "daylength": lambda lat, decl: daylength(lat, decl),
        "rubisco_limited": lambda ci: value_of(rubisco_limited(ci, p)),
        "light_limited": lambda ci: value_of(rubp_limited(ci, p)),
        "dark_respiration": lambda: value_of(p.rd25),
        "net_assimilation": lambda ac, aj, rd: min(ac, aj) - rd,
        "medlyn_slope_term": lambda: slope,
        "leaf_conductance": lambda an, s: p.g0 + s * max(an, 0.0) / p.ca,
        "diffusion_supply": lambda gs, ci: value_of(diffusion_supply(gs, ci, p)),
        "secant_update": lambda x0, f0, x1, f1: value_of(secant_update(x0, f0, x1, f1)),
        "hybrid": lambda ci0: value_of(solve_ci(p, ci0).ci),
        "leaf_ci": lambda ci0: value_of(solve_ci(p, ci0).ci),
    }
