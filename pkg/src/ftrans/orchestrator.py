"""Drive the translate/test/repair loop per unit, in dependency order.

A session is a persisted state machine: every unit moves through
pending -> translating -> passed/failed (or blocked/waived), and the
session file is rewritten atomically after each transition, so killing
the process at any point loses at most the transition in flight and a
resume picks up exactly where the file says.

Per unit the pipeline is: discover or generate Fortran unit tests (stored
as an artifact, never executed), translate those tests, translate the
source, run the result in an isolated workdir, then feed failures back
through the repair prompt until green or the attempt budget is spent.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .dep_graph import build_graph, order_for_translation
from .errors import (
    CorruptSession,
    EmptyCodebase,
    GatewayError,
    HarnessError,
    OrderingViolation,
    PromptError,
    SchemaMismatch,
    SessionLocked,
)
from .fortran_units import SourceUnit, estimate_tokens, scan_root
from .llm_gateway import ChatMessage, ProviderConfig, check_pipeline_contract, make_provider
from .prompt_engine import (
    TASK_GEN_FORTRAN_TESTS,
    TASK_REPAIR,
    TASK_TRANSLATE_SOURCE,
    TASK_TRANSLATE_TESTS,
    parse_response,
    render,
)
from .test_harness import (
    HarnessConfig,
    TestReport,
    VERDICT_ALL_PASSED,
    failure_context_body,
    make_workdir,
    run_unit_tests,
)

SCHEMA_VERSION = 1

STATUS_PENDING = "pending"
STATUS_BLOCKED = "blocked"
STATUS_TRANSLATING = "translating"
STATUS_PASSED = "passed"
STATUS_FAILED = "failed"
STATUS_WAIVED = "waived"

REASON_TOKEN_BUDGET = "token_budget"
REASON_DEPENDENCY_FAILED = "dependency_failed"

DEFAULT_MAX_ITERS = 5
DEFAULT_TOKEN_BUDGET = 8000

_FORTRAN_TEST_NAMES = ("{name}.pf", "test_{name}.pf", "tests.pf")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class SessionConfig:
    max_iters: int = DEFAULT_MAX_ITERS
    token_budget: int = DEFAULT_TOKEN_BUDGET
    glob_patterns: tuple[str, ...] = ("*.f90", "*.F90", "*.f95")

    def to_dict(self) -> dict:
        return {
            "max_iters": self.max_iters,
            "token_budget": self.token_budget,
            "glob_patterns": list(self.glob_patterns),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionConfig":
        return cls(
            max_iters=doc["max_iters"],
            token_budget=doc["token_budget"],
            glob_patterns=tuple(doc["glob_patterns"]),
        )


@dataclass
class UnitRecord:
    """Frozen snapshot of a scanned unit, enough to translate without rescanning."""

    id: str
    name: str
    kind: str
    file: str
    start_line: int
    end_line: int
    text: str
    references: tuple[str, ...]
    approx_tokens: int

    @classmethod
    def from_unit(cls, unit: SourceUnit) -> "UnitRecord":
        return cls(
            id=unit.id,
            name=unit.name,
            kind=unit.kind,
            file=unit.file,
            start_line=unit.line_span[0],
            end_line=unit.line_span[1],
            text=unit.text,
            references=unit.references,
            approx_tokens=estimate_tokens(unit).approx_tokens,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id, "name": self.name, "kind": self.kind,
            "file": self.file, "start_line": self.start_line,
            "end_line": self.end_line, "text": self.text,
            "references": list(self.references),
            "approx_tokens": self.approx_tokens,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UnitRecord":
        doc = dict(doc)
        doc["references"] = tuple(doc["references"])
        return cls(**doc)


@dataclass
class Attempt:
    index: int
    exchanges: list[str] = field(default_factory=list)  # request digests
    candidate_source: str | None = None
    candidate_tests: str | None = None
    report: TestReport | None = None
    error: str | None = None
    duration: float = 0.0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "exchanges": list(self.exchanges),
            "candidate_source": self.candidate_source,
            "candidate_tests": self.candidate_tests,
            "report": self.report.to_dict() if self.report else None,
            "error": self.error,
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Attempt":
        doc = dict(doc)
        doc["report"] = TestReport.from_dict(doc["report"]) if doc["report"] else None
        return cls(**doc)


@dataclass
class UnitState:
    status: str = STATUS_PENDING
    reason: str | None = None
    attempts: list[Attempt] = field(default_factory=list)
    fortran_tests: str | None = None
    final_source: str | None = None
    final_tests: str | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason,
            "attempts": [a.to_dict() for a in self.attempts],
            "fortran_tests": self.fortran_tests,
            "final_source": self.final_source,
            "final_tests": self.final_tests,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UnitState":
        doc = dict(doc)
        doc["attempts"] = [Attempt.from_dict(a) for a in doc["attempts"]]
        return cls(**doc)


@dataclass
class TranslationSession:
    session_id: str
    codebase_root: str
    units: dict[str, UnitRecord]
    order: list[list[str]]  # ordered unit-id groups, dependencies first
    unit_states: dict[str, UnitState]
    config: SessionConfig
    created_at: str
    updated_at: str
    event_log: list[dict] = field(default_factory=list)

    def name_to_id(self) -> dict[str, str]:
        return {u.name: uid for uid, u in self.units.items()}

    def dependencies_of(self, unit_id: str) -> list[str]:
        by_name = self.name_to_id()
        unit = self.units[unit_id]
        return [by_name[r] for r in unit.references
                if r in by_name and by_name[r] != unit_id]

    def transitive_dependencies(self, unit_id: str) -> list[str]:
        seen: list[str] = []
        stack = self.dependencies_of(unit_id)
        while stack:
            dep = stack.pop()
            if dep not in seen:
                seen.append(dep)
                stack.extend(self.dependencies_of(dep))
        return seen

    def is_eligible(self, unit_id: str) -> bool:
        state = self.unit_states[unit_id]
        if state.status not in (STATUS_PENDING, STATUS_TRANSLATING, STATUS_FAILED):
            return False
        group = next(g for g in self.order if unit_id in g)
        peers = [u for u in group if u != unit_id]
        deps = set(self.dependencies_of(unit_id)) - set(peers)
        return all(
            self.unit_states[d].status in (STATUS_PASSED, STATUS_WAIVED)
            for d in deps
        )

    def next_eligible(self) -> str | None:
        for group in self.order:
            for uid in group:
                if self.unit_states[uid].status == STATUS_PENDING and self.is_eligible(uid):
                    return uid
        return None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "codebase_root": self.codebase_root,
            "units": {k: v.to_dict() for k, v in self.units.items()},
            "order": [list(g) for g in self.order],
            "unit_states": {k: v.to_dict() for k, v in self.unit_states.items()},
            "config": self.config.to_dict(),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "event_log": list(self.event_log),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TranslationSession":
        return cls(
            session_id=doc["session_id"],
            codebase_root=doc["codebase_root"],
            units={k: UnitRecord.from_dict(v) for k, v in doc["units"].items()},
            order=[list(g) for g in doc["order"]],
            unit_states={k: UnitState.from_dict(v) for k, v in doc["unit_states"].items()},
            config=SessionConfig.from_dict(doc["config"]),
            created_at=doc["created_at"],
            updated_at=doc["updated_at"],
            event_log=list(doc["event_log"]),
        )


# --- planning ---------------------------------------------------------------

def plan_session(root: str | Path, config: SessionConfig | None = None) -> TranslationSession:
    """Scan, build the graph, order the units, and start everything pending."""
    config = config or SessionConfig()
    units = scan_root(root, config.glob_patterns)
    if not units:
        raise EmptyCodebase(str(root))
    graph = build_graph(units)
    order = order_for_translation(graph)
    records = {u.id: UnitRecord.from_unit(u) for u in units}
    states: dict[str, UnitState] = {}
    for uid, record in records.items():
        if record.approx_tokens > config.token_budget:
            states[uid] = UnitState(status=STATUS_BLOCKED, reason=REASON_TOKEN_BUDGET)
        else:
            states[uid] = UnitState()
    now = _now()
    return TranslationSession(
        session_id=uuid.uuid4().hex,
        codebase_root=str(Path(root).resolve()),
        units=records,
        order=[list(g) for g in order.groups],
        unit_states=states,
        config=config,
        created_at=now,
        updated_at=now,
    )


# --- persistence -------------------------------------------------------------

def _body_checksum(body: dict) -> str:
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_session(session: TranslationSession, path: str | Path) -> None:
    """Write-ahead to a temp file, then atomically rename over the target."""
    path = Path(path)
    body = session.to_dict()
    envelope = {
        "schema_version": SCHEMA_VERSION,
        "checksum": _body_checksum(body),
        "session": body,
    }
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(envelope, indent=1), encoding="utf-8")
    os.replace(tmp, path)


def resume(path: str | Path) -> TranslationSession:
    """Load a session file, checking schema version and checksum."""
    path = Path(path)
    try:
        envelope = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptSession(f"{path}: {exc}") from exc
    version = envelope.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(version, SCHEMA_VERSION)
    body = envelope.get("session")
    if body is None or _body_checksum(body) != envelope.get("checksum"):
        raise CorruptSession(f"{path}: checksum does not match content")
    return TranslationSession.from_dict(body)


class SessionLock:
    """PID lock file next to the session; two writers must never coexist."""

    def __init__(self, session_path: str | Path):
        self.lock_path = Path(str(session_path) + ".lock")

    def acquire(self) -> "SessionLock":
        while True:
            try:
                fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                pid = self._holder()
                if pid is not None and _pid_alive(pid):
                    raise SessionLocked(str(self.lock_path), pid)
                self.lock_path.unlink(missing_ok=True)  # stale lock
                continue
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            return self

    def _holder(self) -> int | None:
        try:
            return int(self.lock_path.read_text())
        except (OSError, ValueError):
            return None

    def release(self) -> None:
        if self._holder() == os.getpid():
            self.lock_path.unlink(missing_ok=True)

    def __enter__(self) -> "SessionLock":
        return self.acquire()

    def __exit__(self, *exc) -> None:
        self.release()


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


# --- the per-unit loop --------------------------------------------------------

class SessionRunner:
    """Single-writer executor for one session.

    persist_hook, when given, is invoked after every save with the event
    name; tests use it to crash the process at arbitrary persistence
    points and check that resume loses nothing.
    """

    def __init__(self, session: TranslationSession, provider,
                 session_path: str | Path,
                 harness: HarnessConfig | None = None,
                 workdir_base: str | Path | None = None,
                 persist_hook=None):
        self.session = session
        self.provider = provider
        self.session_path = Path(session_path)
        self.harness = harness or HarnessConfig()
        self.workdir_base = Path(workdir_base) if workdir_base \
            else self.session_path.parent / "workdirs"
        self.persist_hook = persist_hook
        self.provider_calls: dict[str, int] = {}
        # Serializes state transitions and session writes; provider calls
        # and test runs happen outside it so workers can overlap.
        self._state_lock = threading.RLock()

    # -- plumbing -----------------------------------------------------------

    def _persist(self, event: str, unit_id: str | None = None) -> None:
        with self._state_lock:
            self.session.updated_at = _now()
            self.session.event_log.append(
                {"at": self.session.updated_at, "event": event, "unit": unit_id}
            )
            save_session(self.session, self.session_path)
        if self.persist_hook is not None:
            self.persist_hook(event)

    def _call(self, unit_id: str, task: str, slots: dict[str, str]) -> tuple[str, str]:
        """Render, send, parse; returns (digest, response_text)."""
        system_text, user_text = render(task, slots)
        messages = [ChatMessage("system", system_text), ChatMessage("user", user_text)]
        check_pipeline_contract(messages)
        exchange = self.provider.complete(messages)
        self.provider_calls[unit_id] = self.provider_calls.get(unit_id, 0) + 1
        return exchange.request_digest, exchange.response_text

    def _discover_fortran_tests(self, record: UnitRecord) -> str | None:
        """Per-unit .pf files win; a shared tests.pf must mention the unit."""
        import re

        root = Path(self.session.codebase_root)
        unit_dir = (root / record.file).parent
        for pattern in _FORTRAN_TEST_NAMES:
            candidate = unit_dir / pattern.format(name=record.name)
            if not candidate.is_file():
                continue
            text = candidate.read_text(encoding="utf-8")
            if candidate.name == "tests.pf" \
                    and not re.search(rf"\b{record.name}\b", text, re.I):
                continue
            return text
        return None

    def _dependency_sources(self, unit_ids: list[str]) -> dict[str, str]:
        deps: dict[str, str] = {}
        for uid in unit_ids:
            for dep_id in self.session.transitive_dependencies(uid):
                if dep_id in unit_ids:
                    continue
                dep_state = self.session.unit_states[dep_id]
                if dep_state.final_source:
                    deps[self.session.units[dep_id].name] = dep_state.final_source
        return deps

    # -- unit translation -----------------------------------------------------

    def translate_unit(self, unit_id: str) -> UnitState:
        return self._translate_chunk([unit_id])

    def translate_group(self, group: list[str]) -> UnitState:
        return self._translate_chunk(list(group))

    def _translate_chunk(self, unit_ids: list[str]) -> UnitState:
        lead_id = unit_ids[0]
        state = self.session.unit_states[lead_id]
        if state.status in (STATUS_PASSED, STATUS_WAIVED):
            return state  # idempotent no-op
        if state.status == STATUS_BLOCKED:
            return state
        if not all(self.session.is_eligible(uid) for uid in unit_ids):
            raise OrderingViolation(
                f"unit(s) {unit_ids} have unpassed dependencies"
            )
        records = [self.session.units[uid] for uid in unit_ids]
        chunk_name = records[0].name if len(records) == 1 \
            else "scc_" + "_".join(sorted(r.name for r in records))
        chunk_text = "\n".join(r.text for r in records)
        max_iters = self.session.config.max_iters

        # Crash recovery: if the journal already holds a green attempt, the
        # only thing lost was the status flip; complete it without rework.
        last = state.attempts[-1] if state.attempts else None
        if last and last.report and last.report.verdict == VERDICT_ALL_PASSED \
                and last.candidate_source:
            with self._state_lock:
                for uid in unit_ids:
                    s = self.session.unit_states[uid]
                    s.status = STATUS_PASSED
                    s.final_source = last.candidate_source
                    s.final_tests = last.candidate_tests
            self._persist(f"passed:{chunk_name}", lead_id)
            return state

        self._set_status(unit_ids, STATUS_TRANSLATING, None)
        self._persist(f"translating:{chunk_name}", lead_id)

        # Step 1: Fortran unit tests — discovered next to the source or
        # generated once; stored as an artifact, never executed here.
        fortran_tests = state.fortran_tests
        if fortran_tests is None:
            discovered = [self._discover_fortran_tests(r) for r in records]
            found = [d for d in discovered if d]
            if found:
                fortran_tests = "\n".join(found)
            else:
                try:
                    digest, text = self._call(
                        lead_id, TASK_GEN_FORTRAN_TESTS, {"fortran_code": chunk_text}
                    )
                    fortran_tests = parse_response(TASK_GEN_FORTRAN_TESTS, text).unit_tests
                except (GatewayError, PromptError) as exc:
                    fortran_tests = f"! generation failed: {exc}\n"
            with self._state_lock:
                for uid in unit_ids:
                    self.session.unit_states[uid].fortran_tests = fortran_tests
            self._persist(f"fortran_tests:{chunk_name}", lead_id)

        candidate_source: str | None = None
        candidate_tests: str | None = None
        last_report: TestReport | None = None
        deps = self._dependency_sources(unit_ids)

        while len(state.attempts) < max_iters:
            attempt = Attempt(index=len(state.attempts) + 1)
            started = time.perf_counter()
            workdir = None
            try:
                if candidate_source is None or candidate_tests is None \
                        or last_report is None:
                    digest, text = self._call(
                        lead_id, TASK_TRANSLATE_TESTS, {"unit_tests": fortran_tests}
                    )
                    attempt.exchanges.append(digest)
                    candidate_tests = parse_response(TASK_TRANSLATE_TESTS, text).unit_tests
                    digest, text = self._call(
                        lead_id, TASK_TRANSLATE_SOURCE, {"fortran_code": chunk_text}
                    )
                    attempt.exchanges.append(digest)
                    candidate_source = parse_response(TASK_TRANSLATE_SOURCE, text).source_code
                else:
                    context = failure_context_body(
                        last_report, self.harness.context_budget, workdir=self.workdir_base
                    )
                    digest, text = self._call(
                        lead_id, TASK_REPAIR, {
                            "python_function": candidate_source,
                            "python_unit_tests": candidate_tests,
                            "python_test_results": context,
                        },
                    )
                    attempt.exchanges.append(digest)
                    parsed = parse_response(TASK_REPAIR, text)
                    candidate_source = parsed.source_code
                    candidate_tests = parsed.unit_tests
                attempt.candidate_source = candidate_source
                attempt.candidate_tests = candidate_tests
                workdir = make_workdir(
                    self.workdir_base, chunk_name, candidate_source,
                    candidate_tests, dependencies=deps,
                )
                report = run_unit_tests(self.harness, workdir)
                attempt.report = report
                last_report = report
            except (GatewayError, PromptError, HarnessError) as exc:
                attempt.error = str(exc)
                candidate_source = candidate_tests = None
                last_report = None
            attempt.duration = time.perf_counter() - started
            with self._state_lock:
                for uid in unit_ids:
                    self.session.unit_states[uid].attempts.append(attempt)
            self._persist(f"attempt:{chunk_name}:{attempt.index}", lead_id)

            if attempt.report and attempt.report.verdict == VERDICT_ALL_PASSED:
                with self._state_lock:
                    for uid in unit_ids:
                        s = self.session.unit_states[uid]
                        s.status = STATUS_PASSED
                        s.final_source = candidate_source
                        s.final_tests = candidate_tests
                self._persist(f"passed:{chunk_name}", lead_id)
                return state

        self._set_status(unit_ids, STATUS_FAILED, None)
        self._block_dependents(unit_ids)
        self._persist(f"failed:{chunk_name}", lead_id)
        return state

    def _set_status(self, unit_ids: list[str], status: str, reason: str | None) -> None:
        with self._state_lock:
            for uid in unit_ids:
                self.session.unit_states[uid].status = status
                self.session.unit_states[uid].reason = reason

    def _block_dependents(self, failed_ids: list[str]) -> None:
        with self._state_lock:
            failed = set(failed_ids)
            for uid in self.session.units:
                state = self.session.unit_states[uid]
                if state.status != STATUS_PENDING:
                    continue
                if failed & set(self.session.dependencies_of(uid)):
                    state.status = STATUS_BLOCKED
                    state.reason = REASON_DEPENDENCY_FAILED

    def waive(self, unit_id: str) -> UnitState:
        """Operator override: accept the last candidate and unblock dependents."""
        state = self.session.unit_states[unit_id]
        state.status = STATUS_WAIVED
        for attempt in reversed(state.attempts):
            if attempt.candidate_source:
                state.final_source = attempt.candidate_source
                state.final_tests = attempt.candidate_tests
                break
        name = self.session.units[unit_id].name
        self._persist(f"waived:{name}", unit_id)
        return state

    def run_all(self) -> TranslationSession:
        """Translate every group in order; failures block their dependents."""
        for group in self.session.order:
            lead_state = self.session.unit_states[group[0]]
            if lead_state.status in (STATUS_PASSED, STATUS_WAIVED, STATUS_FAILED,
                                     STATUS_BLOCKED):
                continue
            if not all(self.session.is_eligible(uid) for uid in group):
                self._set_status(list(group), STATUS_BLOCKED, REASON_DEPENDENCY_FAILED)
                self._persist(f"blocked:{self.session.units[group[0]].name}", group[0])
                continue
            self._translate_chunk(list(group))
        return self.session


# --- outputs ------------------------------------------------------------------

def emit_outputs(session: TranslationSession, out_dir: str | Path) -> dict:
    """Write final sources/tests per completed unit plus a manifest."""
    out = Path(out_dir)
    (out / "tests").mkdir(parents=True, exist_ok=True)
    (out / "fortran_tests").mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "session_id": session.session_id,
        "codebase_root": session.codebase_root,
        "units": {},
    }
    for uid, record in session.units.items():
        state = session.unit_states[uid]
        entry: dict = {
            "status": state.status,
            "attempts": len(state.attempts),
            "durations": [a.duration for a in state.attempts],
            "files": [],
        }
        if state.reason:
            entry["reason"] = state.reason
        if state.status in (STATUS_PASSED, STATUS_WAIVED) and state.final_source:
            src_path = out / f"{record.name}.py"
            src_path.write_text(state.final_source, encoding="utf-8")
            entry["files"].append(str(src_path.relative_to(out)))
            if state.final_tests:
                test_path = out / "tests" / f"test_{record.name}.py"
                test_path.write_text(state.final_tests, encoding="utf-8")
                entry["files"].append(str(test_path.relative_to(out)))
        if state.fortran_tests:
            pf_path = out / "fortran_tests" / f"{record.name}.pf"
            pf_path.write_text(state.fortran_tests, encoding="utf-8")
            entry["files"].append(str(pf_path.relative_to(out)))
        if state.status == STATUS_FAILED and state.attempts:
            last = state.attempts[-1]
            entry["last_error"] = last.error or (
                last.report.verdict if last.report else "unknown"
            )
        manifest["units"][record.name] = entry
    manifest["passed"] = sum(
        1 for s in session.unit_states.values() if s.status == STATUS_PASSED
    )
    manifest["failed"] = sum(
        1 for s in session.unit_states.values() if s.status == STATUS_FAILED
    )
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return manifest


def make_runner(session: TranslationSession, provider_config: ProviderConfig,
                session_path: str | Path,
                harness: HarnessConfig | None = None,
                workdir_base: str | Path | None = None) -> SessionRunner:
    return SessionRunner(
        session, make_provider(provider_config), session_path,
        harness=harness, workdir_base=workdir_base,
    )


def run_parallel(runner: SessionRunner, workers: int) -> TranslationSession:
    """Translate independent ready groups concurrently.

    Dispatch recomputes the ready set after every completion; state
    transitions stay serialized through the runner's lock, so the session
    file only ever sees consistent snapshots.
    """
    from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait

    session = runner.session
    in_flight: dict = {}
    terminal = (STATUS_PASSED, STATUS_WAIVED, STATUS_FAILED, STATUS_BLOCKED)

    def group_status(group: list[str]) -> str:
        return session.unit_states[group[0]].status

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        while True:
            progressed = False
            for gi, group in enumerate(session.order):
                if gi in in_flight or group_status(group) in terminal:
                    continue
                with runner._state_lock:
                    eligible = all(session.is_eligible(uid) for uid in group)
                    deps_settled = all(
                        session.unit_states[d].status in terminal
                        for uid in group
                        for d in session.dependencies_of(uid)
                        if d not in group
                    )
                if eligible:
                    in_flight[gi] = pool.submit(runner._translate_chunk, list(group))
                    progressed = True
                elif deps_settled:
                    runner._set_status(list(group), STATUS_BLOCKED,
                                       REASON_DEPENDENCY_FAILED)
                    runner._persist(f"blocked:{session.units[group[0]].name}", group[0])
                    progressed = True
            if in_flight:
                done, _ = wait(in_flight.values(), return_when=FIRST_COMPLETED)
                for gi in [k for k, f in in_flight.items() if f in done]:
                    in_flight.pop(gi).result()
                continue
            if not progressed:
                break
    return session
