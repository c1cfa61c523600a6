"""Chunk free-form Fortran source into testable units and trace references.

A unit is a function, subroutine, derived type, or the declaration block of
a module. The scanner is a lexical block tracker, not a grammar: it joins
`&` continuations, strips `!` comments outside strings, and matches every
block opener against its `end`. Interface blocks and preprocessor lines are
kept verbatim inside the enclosing unit and never split out.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import FixedFormSource, NonUtf8Source, UnbalancedBlock

KIND_FUNCTION = "function"
KIND_SUBROUTINE = "subroutine"
KIND_DERIVED_TYPE = "derived_type"
KIND_MODULE_VARS = "module_variable_block"

DEFAULT_GLOBS = ("*.f90", "*.F90", "*.f95")
FIXED_FORM_SUFFIXES = {".f", ".for", ".f77", ".fpp", ".F", ".FOR", ".F77"}

_ATTRS = ("elemental", "pure", "recursive")

# Prefix clauses that may precede `function`/`subroutine` in a header.
_PREFIX = (
    r"(?:(?:elemental|pure|impure|recursive|non_recursive)\s+"
    r"|(?:real|integer|logical|complex|character)\s*(?:\([^()]*\))?\s+"
    r"|double\s+precision\s+"
    r"|(?:type|class)\s*\([^()]*\)\s+"
    r")*"
)
_FUNCTION_RE = re.compile(rf"^{_PREFIX}function\s+([a-z][a-z0-9_]*)", re.I)
_SUBROUTINE_RE = re.compile(rf"^{_PREFIX}subroutine\s+([a-z][a-z0-9_]*)", re.I)
_TYPE_DEF_RE = re.compile(
    r"^type\s*(?:,[^:]*)?::\s*([a-z][a-z0-9_]*)"
    r"|^type\s+(?!is\b)([a-z][a-z0-9_]*)\s*$",
    re.I,
)
_MODULE_RE = re.compile(
    r"^module\s+(?!procedure\b|function\b|subroutine\b)([a-z][a-z0-9_]*)\s*$", re.I
)
_PROGRAM_RE = re.compile(r"^program\s+([a-z][a-z0-9_]*)\s*$", re.I)
_INTERFACE_RE = re.compile(r"^(?:abstract\s+)?interface\b", re.I)
_CONTAINS_RE = re.compile(r"^contains$", re.I)
_END_RE = re.compile(
    r"^end\s*(function|subroutine|module|program|interface|type|do|if|select|"
    r"where|forall|associate|block|critical)?\b\s*(?:::)?\s*([a-z][a-z0-9_]*)?\s*$",
    re.I,
)
_CONSTRUCT_NAME = r"(?:[a-z][a-z0-9_]*\s*:\s*)?"
_DO_RE = re.compile(rf"^{_CONSTRUCT_NAME}do(?:\s|$)(?!\s*\d)", re.I)
_SELECT_RE = re.compile(rf"^{_CONSTRUCT_NAME}select\s*(?:case|type)\b", re.I)
_IF_OPEN_RE = re.compile(rf"^{_CONSTRUCT_NAME}if\s*\(", re.I)
_THEN_AT_END_RE = re.compile(r"\bthen$", re.I)
_WHERE_RE = re.compile(rf"^{_CONSTRUCT_NAME}(where|forall)\s*\(", re.I)
_ASSOCIATE_RE = re.compile(rf"^{_CONSTRUCT_NAME}associate\s*\(", re.I)
_BLOCK_RE = re.compile(rf"^{_CONSTRUCT_NAME}(block|critical)$", re.I)

_DECL_START_RE = re.compile(
    r"^(?:integer|real|logical|complex|character|double\s+precision"
    r"|type\s*\(|class\s*\(|dimension|intent|parameter|optional|allocatable"
    r"|pointer|target|external|intrinsic|save|data|common|equivalence|implicit"
    r"|import|public|private|protected|sequence|namelist|procedure|enumerator"
    r"|format)\b",
    re.I,
)
_TYPE_SPEC_RE = re.compile(r"\b(?:type|class)\s*\(\s*([a-z][a-z0-9_]*)\s*\)", re.I)
_IDENT_RE = re.compile(r"\b[a-z][a-z0-9_]*\b", re.I)
_STRING_RE = re.compile(r"'(?:[^']|'')*'|\"(?:[^\"]|\"\")*\"")


@dataclass(frozen=True)
class SourceUnit:
    """One testable chunk of Fortran source."""

    id: str
    name: str
    kind: str
    file: str
    line_span: tuple[int, int]
    text: str
    doc: str = ""
    attributes: frozenset[str] = frozenset()
    references: tuple[str, ...] = ()


@dataclass(frozen=True)
class TokenEstimate:
    unit_id: str
    approx_tokens: int


@dataclass
class _Stmt:
    text: str  # continuation-joined, comment-stripped, whitespace-trimmed
    start: int
    end: int


@dataclass
class _Frame:
    kind: str
    name: str
    start: int
    contains_line: int | None = None
    decl_seen: bool = False
    attributes: frozenset[str] = frozenset()


def strip_comment(line: str) -> str:
    """Drop a trailing `!` comment, honoring single and double quotes."""
    in_single = in_double = False
    for i, ch in enumerate(line):
        if ch == "'" and not in_double:
            in_single = not in_single
        elif ch == '"' and not in_single:
            in_double = not in_double
        elif ch == "!" and not in_single and not in_double:
            return line[:i]
    return line


def _split_semicolons(stmt: str) -> list[str]:
    parts: list[str] = []
    buf: list[str] = []
    in_single = in_double = False
    for ch in stmt:
        if ch == "'" and not in_double:
            in_single = not in_single
        elif ch == '"' and not in_single:
            in_double = not in_double
        if ch == ";" and not in_single and not in_double:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


def iter_statements(lines: Sequence[str], first_lineno: int = 1) -> Iterator[_Stmt]:
    """Yield logical statements with their physical line spans.

    Joins `&` continuations (tolerating blank and comment lines in between)
    and splits on `;` outside string literals.
    """
    pending: list[str] = []
    pending_start = 0
    for offset, raw in enumerate(lines):
        lineno = first_lineno + offset
        code = strip_comment(raw).strip()
        if not pending:
            if not code:
                continue
            pending_start = lineno
        else:
            if not code:
                continue
            if code.startswith("&"):
                code = code[1:].lstrip()
        if code.endswith("&"):
            pending.append(code[:-1].rstrip())
            continue
        pending.append(code)
        joined = " ".join(p for p in pending if p)
        for sub in _split_semicolons(joined):
            sub = sub.strip()
            if sub:
                yield _Stmt(sub, pending_start, lineno)
        pending = []
    if pending:
        joined = " ".join(p for p in pending if p)
        if joined.strip():
            yield _Stmt(joined.strip(), pending_start, first_lineno + len(lines) - 1)


def _blank_strings(text: str) -> str:
    return _STRING_RE.sub(lambda m: " " * len(m.group(0)), text)


def _header_attributes(stmt: str) -> frozenset[str]:
    head = stmt.lower().split("function")[0].split("subroutine")[0]
    return frozenset(a for a in _ATTRS if re.search(rf"\b{a}\b", head))


def _leading_doc(lines: Sequence[str], start_line: int) -> str:
    doc: list[str] = []
    i = start_line - 2  # 0-based index of the line above the header
    while i >= 0:
        stripped = lines[i].strip()
        if stripped.startswith("!"):
            doc.append(lines[i])
            i -= 1
        else:
            break
    return "".join(reversed(doc))


def scan_file(path: str, text: str) -> list[SourceUnit]:
    """Split one free-form source file into units, in source order.

    References are left empty; call :func:`resolve_references` once all
    files are scanned so cross-file names are known.
    """
    suffix = Path(path).suffix
    if suffix in FIXED_FORM_SUFFIXES:
        raise FixedFormSource(path)

    lines = text.splitlines(keepends=True)
    units: list[SourceUnit] = []
    stack: list[_Frame] = []
    interface_depth = 0

    def record(frame: _Frame, end_line: int) -> None:
        span_end = frame.contains_line or end_line
        unit_text = "".join(lines[frame.start - 1 : span_end])
        units.append(
            SourceUnit(
                id=f"{path}::{frame.name}",
                name=frame.name,
                kind=frame.kind,
                file=path,
                line_span=(frame.start, span_end),
                text=unit_text,
                doc=_leading_doc(lines, frame.start),
                attributes=frame.attributes,
            )
        )

    for stmt in iter_statements(lines):
        s = stmt.text
        if s.startswith("#"):  # preprocessor directive: keep verbatim
            continue
        end_m = _END_RE.match(s)
        if end_m:
            if not stack:
                raise UnbalancedBlock(path, stmt.start, f"'{s}' without an open block")
            kw = (end_m.group(1) or "").lower()
            name = (end_m.group(2) or "").lower()
            frame = stack.pop()
            if kw and kw != frame.kind:
                raise UnbalancedBlock(
                    path, stmt.start, f"'end {kw}' closes a {frame.kind} block"
                )
            if name and frame.name and name != frame.name:
                raise UnbalancedBlock(
                    path, stmt.start, f"'end ... {name}' closes {frame.name!r}"
                )
            if frame.kind == "interface":
                interface_depth -= 1
            elif frame.kind in (KIND_FUNCTION, KIND_SUBROUTINE):
                if interface_depth == 0:
                    record(frame, stmt.end)
            elif frame.kind == "type":
                if interface_depth == 0:
                    record(
                        replace(frame, kind=KIND_DERIVED_TYPE, contains_line=None),
                        stmt.end,
                    )
            elif frame.kind == "module":
                if frame.decl_seen:
                    record(replace(frame, kind=KIND_MODULE_VARS), stmt.end)
            continue

        if _CONTAINS_RE.match(s):
            if stack and stack[-1].kind in ("module", KIND_FUNCTION, KIND_SUBROUTINE, "program"):
                if stack[-1].contains_line is None:
                    stack[-1].contains_line = stmt.end
            continue
        if _INTERFACE_RE.match(s):
            stack.append(_Frame("interface", "", stmt.start))
            interface_depth += 1
            continue
        m = _MODULE_RE.match(s)
        if m:
            stack.append(_Frame("module", m.group(1).lower(), stmt.start))
            continue
        m = _PROGRAM_RE.match(s)
        if m:
            stack.append(_Frame("program", m.group(1).lower(), stmt.start))
            continue
        m = _FUNCTION_RE.match(s)
        if m:
            stack.append(
                _Frame(KIND_FUNCTION, m.group(1).lower(), stmt.start,
                       attributes=_header_attributes(s))
            )
            continue
        m = _SUBROUTINE_RE.match(s)
        if m:
            stack.append(
                _Frame(KIND_SUBROUTINE, m.group(1).lower(), stmt.start,
                       attributes=_header_attributes(s))
            )
            continue
        m = _TYPE_DEF_RE.match(s)
        if m:
            stack.append(_Frame("type", (m.group(1) or m.group(2)).lower(), stmt.start))
            continue
        if _IF_OPEN_RE.match(s) and _THEN_AT_END_RE.search(_blank_strings(s)):
            stack.append(_Frame("if", "", stmt.start))
            continue
        if _DO_RE.match(s):
            stack.append(_Frame("do", "", stmt.start))
            continue
        if _SELECT_RE.match(s):
            stack.append(_Frame("select", "", stmt.start))
            continue
        wm = _WHERE_RE.match(s)
        if wm and _paren_balanced_to_end(s, wm.end() - 1):
            stack.append(_Frame(wm.group(1).lower(), "", stmt.start))
            continue
        bm = _BLOCK_RE.match(s)
        if bm:
            stack.append(_Frame(bm.group(1).lower(), "", stmt.start))
            continue
        if _DECL_START_RE.match(s):
            if stack and stack[-1].kind == "module" and stack[-1].contains_line is None:
                if _looks_like_variable_decl(s):
                    stack[-1].decl_seen = True
            continue

    if stack:
        top = stack[-1]
        raise UnbalancedBlock(
            path, top.start, f"{top.kind} {top.name!r} is never closed before EOF"
        )
    units.sort(key=lambda u: u.line_span[0])
    return units


def _paren_balanced_to_end(stmt: str, open_pos: int) -> bool:
    """True when the paren opened at open_pos closes exactly at end of stmt.

    Distinguishes a block `where (mask)` from the one-line `where (mask) x = y`.
    """
    depth = 0
    blanked = _blank_strings(stmt)
    for i in range(open_pos, len(blanked)):
        ch = blanked[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return blanked[i + 1 :].strip() == ""
    return False


def _looks_like_variable_decl(stmt: str) -> bool:
    low = stmt.lower()
    if low.startswith(("implicit", "public", "private", "save", "import",
                       "sequence", "protected")):
        return False
    return True


def trace_references(unit: SourceUnit, known_names: Iterable[str]) -> tuple[str, ...]:
    """Names from known_names the unit mentions, in first-occurrence order.

    Skips comments, string literals, and the unit's own header statement.
    Identifiers that appear only in declaration statements do not count,
    except type names inside `type(...)`/`class(...)` specifiers, which are
    real dependencies of the translated unit.
    """
    known = {n.lower() for n in known_names}
    known.discard(unit.name)
    if not known:
        return ()
    found: list[str] = []
    seen: set[str] = set()
    stmts = list(iter_statements(unit.text.splitlines(keepends=True)))
    for stmt in stmts[1:]:  # stmts[0] is the unit's own declaration line
        body = _blank_strings(stmt.text)
        if _DECL_START_RE.match(body):
            for m in _TYPE_SPEC_RE.finditer(body):
                t = m.group(1).lower()
                if t in known and t not in seen:
                    seen.add(t)
                    found.append(t)
            continue
        for m in _IDENT_RE.finditer(body):
            t = m.group(0).lower()
            if t in known and t not in seen:
                seen.add(t)
                found.append(t)
    return tuple(found)


def resolve_references(units: Sequence[SourceUnit]) -> list[SourceUnit]:
    """Fill each unit's references against the set of all scanned unit names."""
    names = {u.name for u in units}
    return [replace(u, references=trace_references(u, names)) for u in units]


def scan_root(root: str | Path, globs: Sequence[str] = DEFAULT_GLOBS) -> list[SourceUnit]:
    """Scan every matching file under root and resolve cross-file references.

    Unit file paths are stored relative to root. Files are visited in
    sorted path order so the result is deterministic.
    """
    root = Path(root)
    paths: list[Path] = []
    for pattern in globs:
        paths.extend(root.rglob(pattern))
    units: list[SourceUnit] = []
    for p in sorted(set(paths)):
        try:
            text = p.read_bytes().decode("utf-8")
        except UnicodeDecodeError:
            raise NonUtf8Source(str(p)) from None
        units.extend(scan_file(str(p.relative_to(root)), text))
    return resolve_references(units)


def estimate_tokens(unit: SourceUnit) -> TokenEstimate:
    """Provider-agnostic size heuristic: one token per four characters."""
    return TokenEstimate(unit.id, math.ceil(len(unit.text) / 4))


def units_manifest(units: Sequence[SourceUnit], inline_text: bool = False) -> list[dict]:
    """JSON-ready manifest rows, one per unit."""
    rows = []
    for u in units:
        row = {
            "id": u.id,
            "name": u.name,
            "kind": u.kind,
            "file": u.file,
            "start_line": u.line_span[0],
            "end_line": u.line_span[1],
            "attributes": sorted(u.attributes),
            "references": list(u.references),
            "approx_tokens": estimate_tokens(u).approx_tokens,
        }
        if inline_text:
            row["text"] = u.text
        rows.append(row)
    return rows
