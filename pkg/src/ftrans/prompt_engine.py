"""The five chat-prompt tasks and response parsing.

Templates are data, not code: each task's system and user text live in
resource files under templates/ and are pinned by checksum. Rendering is
literal placeholder substitution; nothing else in the text is touched.

The translate-source user template interpolates a brace named
`python_code` even though the payload is Fortran; that is the template's
own wording, so the task maps its declared `fortran_code` slot onto that
placeholder rather than editing the file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingSection, MissingSlot, NoCodeBlockFound, UnexpectedSlot

TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"

TASK_GEN_FORTRAN_TESTS = "gen_fortran_tests"
TASK_TRANSLATE_SOURCE = "translate_source"
TASK_TRANSLATE_TESTS = "translate_tests"
TASK_GEN_TARGET_TESTS = "gen_target_tests"
TASK_REPAIR = "repair"

ALL_TASKS = (
    TASK_GEN_FORTRAN_TESTS,
    TASK_TRANSLATE_SOURCE,
    TASK_TRANSLATE_TESTS,
    TASK_GEN_TARGET_TESTS,
    TASK_REPAIR,
)

# Slot name as callers provide it -> placeholder name inside the template.
_SLOT_MAPS: dict[str, dict[str, str]] = {
    TASK_GEN_FORTRAN_TESTS: {"fortran_code": "fortran_code"},
    TASK_TRANSLATE_SOURCE: {"fortran_code": "python_code"},
    TASK_TRANSLATE_TESTS: {"unit_tests": "unit_tests"},
    TASK_GEN_TARGET_TESTS: {"python_function": "python_function"},
    TASK_REPAIR: {
        "python_function": "python_function",
        "python_unit_tests": "python_unit_tests",
        "python_test_results": "python_test_results",
    },
}

# Tasks whose single fenced payload is code vs a test suite.
_SOURCE_TASKS = {TASK_TRANSLATE_SOURCE}
_TEST_TASKS = {TASK_GEN_FORTRAN_TESTS, TASK_TRANSLATE_TESTS, TASK_GEN_TARGET_TESTS}

_FENCE_RE = re.compile(r"```(.*?)```", re.S)
_LANG_TAGS = {"python", "py", "fortran", "f90", "text", "json", "bash", "sh", "diff"}


@dataclass(frozen=True)
class ParsedResponse:
    raw: str
    source_code: str | None = None
    unit_tests: str | None = None


def required_slots(task: str) -> frozenset[str]:
    return frozenset(_SLOT_MAPS[task])


def template_paths(task: str) -> tuple[Path, Path]:
    return TEMPLATE_DIR / f"{task}.system.txt", TEMPLATE_DIR / f"{task}.user.txt"


def _load(path: Path) -> str:
    text = path.read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


def render(task: str, slots: dict[str, str]) -> tuple[str, str]:
    """(system_text, user_text) with all placeholders substituted verbatim."""
    slot_map = _SLOT_MAPS.get(task)
    if slot_map is None:
        raise KeyError(f"unknown prompt task {task!r}")
    for name in slots:
        if name not in slot_map:
            raise UnexpectedSlot(task, name)
    for name in slot_map:
        if not slots.get(name):
            raise MissingSlot(task, name)
    system_path, user_path = template_paths(task)
    user_text = _load(user_path)
    for name, placeholder in slot_map.items():
        user_text = user_text.replace("{" + placeholder + "}", slots[name])
    return _load(system_path), user_text


def _blocks(text: str) -> list[str]:
    """Fenced payloads with any leading language tag line removed."""
    out = []
    for m in _FENCE_RE.finditer(text):
        body = m.group(1)
        first, sep, rest = body.partition("\n")
        if sep and first.strip().lower() in _LANG_TAGS:
            body = rest
        elif sep and first.strip() == "":
            body = rest
        out.append(body.strip("\n"))
    return out


def parse_response(task: str, text: str) -> ParsedResponse:
    """Extract code artifacts from a model response.

    Single-artifact tasks take the longest fenced block (models often emit
    a short usage snippet next to the real payload). The repair task
    requires both the SOURCE CODE and UNIT TESTS labeled blocks.
    """
    if task == TASK_REPAIR:
        return ParsedResponse(
            raw=text,
            source_code=_labeled_block(text, "SOURCE CODE"),
            unit_tests=_labeled_block(text, "UNIT TESTS"),
        )
    blocks = _blocks(text)
    if not blocks:
        raise NoCodeBlockFound(task)
    payload = max(blocks, key=len)
    if task in _SOURCE_TASKS:
        return ParsedResponse(raw=text, source_code=payload)
    if task in _TEST_TASKS:
        return ParsedResponse(raw=text, unit_tests=payload)
    raise KeyError(f"unknown prompt task {task!r}")


def _labeled_block(text: str, label: str) -> str:
    m = re.search(rf"{re.escape(label)}\s*:", text, re.I)
    if not m:
        raise MissingSection(label)
    blocks = _blocks(text[m.end():])
    if not blocks:
        raise MissingSection(label)
    return blocks[0]


def repair_response(source_code: str, unit_tests: str) -> str:
    """Format a response the way the repair contract asks for."""
    return (
        f"SOURCE CODE:\n```python\n{source_code}\n```\n"
        f"UNIT TESTS:\n```python\n{unit_tests}\n```"
    )
