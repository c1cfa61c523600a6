"""Exception types shared across the pipeline."""

from __future__ import annotations


class FtransError(Exception):
    """Base class for all package errors."""


# --- Fortran scanning ---------------------------------------------------

class FortranScanError(FtransError):
    pass


class UnbalancedBlock(FortranScanError):
    def __init__(self, path: str, line: int, detail: str):
        super().__init__(f"{path}:{line}: unbalanced block: {detail}")
        self.path = path
        self.line = line
        self.detail = detail


class NonUtf8Source(FortranScanError):
    def __init__(self, path: str):
        super().__init__(f"{path}: source is not valid UTF-8")
        self.path = path


class FixedFormSource(FortranScanError):
    def __init__(self, path: str):
        super().__init__(
            f"{path}: fixed-form (F77 column convention) source is not supported; "
            "convert to free form first"
        )
        self.path = path


# --- Dependency graph ---------------------------------------------------

class GraphError(FtransError):
    pass


class DuplicateUnitName(GraphError):
    def __init__(self, name: str, first: str, second: str):
        super().__init__(
            f"unit name {name!r} defined twice: {first} and {second}"
        )
        self.name = name
        self.first = first
        self.second = second


# --- Prompt engine ------------------------------------------------------

class PromptError(FtransError):
    pass


class MissingSlot(PromptError):
    def __init__(self, task: str, slot: str):
        super().__init__(f"task {task!r}: slot {slot!r} is missing or empty")
        self.task = task
        self.slot = slot


class UnexpectedSlot(PromptError):
    def __init__(self, task: str, slot: str):
        super().__init__(f"task {task!r}: slot {slot!r} is not declared")
        self.task = task
        self.slot = slot


class NoCodeBlockFound(PromptError):
    def __init__(self, task: str):
        super().__init__(f"task {task!r}: response contains no fenced code block")
        self.task = task


class MissingSection(PromptError):
    def __init__(self, section: str):
        super().__init__(f"repair response is missing the {section!r} section")
        self.section = section


# --- Chat gateway -------------------------------------------------------

class GatewayError(FtransError):
    pass


class AuthMissing(GatewayError):
    def __init__(self, env_var: str):
        super().__init__(f"environment variable {env_var} is not set")
        self.env_var = env_var


class ProviderError(GatewayError):
    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"provider returned status {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class TimeoutExceeded(GatewayError):
    pass


class ReplayMiss(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"no stored transcript for request digest {digest}")
        self.digest = digest


# --- Test harness -------------------------------------------------------

class HarnessError(FtransError):
    pass


class RunnerNotFound(HarnessError):
    def __init__(self, command: str):
        super().__init__(f"test runner executable not found: {command}")
        self.command = command


class WorkdirSetupFailed(HarnessError):
    pass


# --- Orchestrator -------------------------------------------------------

class SessionError(FtransError):
    pass


class EmptyCodebase(SessionError):
    def __init__(self, root: str):
        super().__init__(f"no Fortran units found under {root}")
        self.root = root


class SchemaMismatch(SessionError):
    def __init__(self, found: object, expected: int):
        super().__init__(f"session schema version {found!r} != expected {expected}")
        self.found = found
        self.expected = expected


class CorruptSession(SessionError):
    pass


class SessionLocked(SessionError):
    def __init__(self, lock_path: str, pid: int):
        super().__init__(f"session is locked by pid {pid} ({lock_path})")
        self.lock_path = lock_path
        self.pid = pid


class OrderingViolation(SessionError):
    pass


# --- Numerics -----------------------------------------------------------

class NumericsError(FtransError):
    pass


class NonPositiveCi(NumericsError):
    def __init__(self, ci: float):
        super().__init__(f"internal CO2 partial pressure must be positive, got {ci}")
        self.ci = ci


class NoConvergence(NumericsError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"solver did not converge after {iterations} iterations "
            f"(|residual| = {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


class EmptyObservations(NumericsError):
    pass


# --- Corpus -------------------------------------------------------------

class CorpusError(FtransError):
    pass


class ChecksumMismatch(CorpusError):
    def __init__(self, path: str):
        super().__init__(f"corpus file failed its checksum: {path}")
        self.path = path
