"""Provider-agnostic chat-completion client.

Three provider kinds share one interface: `http_chat` posts to an
OpenAI-style endpoint with retry and backoff, `replay` serves stored
transcripts keyed by request digest, and `rule_based` runs a deterministic
built-in translator over the corpus subset. The two offline kinds make the
whole pipeline runnable and testable with no network at all.

Digests cover the canonicalized message payload and temperature only, so a
transcript recorded from one provider kind replays under another.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    AuthMissing,
    GatewayError,
    ProviderError,
    ReplayMiss,
    TimeoutExceeded,
)

KIND_HTTP = "http_chat"
KIND_REPLAY = "replay"
KIND_RULE_BASED = "rule_based"

ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}
_BACKOFF_BASE = 0.5
_BACKOFF_CAP = 8.0


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in (ROLE_SYSTEM, ROLE_USER, ROLE_ASSISTANT):
            raise ValueError(f"unknown chat role {self.role!r}")
        if not self.content:
            raise ValueError("chat message content must be nonempty")


@dataclass
class ProviderConfig:
    kind: str = KIND_RULE_BASED
    base_url: str | None = None
    model_name: str | None = None
    temperature: float = 0.0
    max_attempts: int = 3
    timeout: float = 60.0
    api_key_env: str = "FTRANS_API_KEY"
    transcript_dir: str | None = None
    requests_per_minute: int = 0  # 0 disables rate limiting
    # rule_based only: emit a deliberately broken first translation so the
    # repair path can be exercised (and recorded) hermetically.
    inject_first_failure: bool = False

    def __post_init__(self):
        if self.kind not in (KIND_HTTP, KIND_REPLAY, KIND_RULE_BASED):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == KIND_HTTP and not (self.base_url and self.model_name):
            raise ValueError("http_chat requires base_url and model_name")
        if self.kind == KIND_REPLAY and not self.transcript_dir:
            raise ValueError("replay requires transcript_dir")


@dataclass(frozen=True)
class ChatExchange:
    request: dict
    response_text: str
    latency: float
    provider_kind: str
    request_digest: str


def canonical_request(messages: list[ChatMessage], temperature: float = 0.0) -> dict:
    """The digest-relevant part of a request, line endings normalized."""
    return {
        "messages": [
            {"role": m.role, "content": m.content.replace("\r\n", "\n")}
            for m in messages
        ],
        "temperature": temperature,
    }


def request_digest(messages: list[ChatMessage], temperature: float = 0.0) -> str:
    payload = json.dumps(
        canonical_request(messages, temperature),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def check_pipeline_contract(messages: list[ChatMessage]) -> None:
    """The loop always sends exactly one system and one user message."""
    if len(messages) != 2 or messages[0].role != ROLE_SYSTEM or messages[1].role != ROLE_USER:
        raise GatewayError(
            "pipeline contract: messages must be [system, user], got "
            + str([m.role for m in messages])
        )


class _RateLimiter:
    """Serializes calls to at most requests_per_minute, burst-free."""

    def __init__(self, requests_per_minute: int):
        self._interval = 60.0 / requests_per_minute if requests_per_minute > 0 else 0.0
        self._lock = threading.Lock()
        self._next_at = 0.0

    def acquire(self) -> None:
        if self._interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_at - now
            self._next_at = max(now, self._next_at) + self._interval
        if wait > 0:
            time.sleep(wait)


class HttpChatProvider:
    def __init__(self, config: ProviderConfig):
        self.config = config
        self._limiter = _RateLimiter(config.requests_per_minute)

    def complete(self, messages: list[ChatMessage]) -> ChatExchange:
        import requests

        cfg = self.config
        api_key = os.environ.get(cfg.api_key_env)
        if not api_key:
            raise AuthMissing(cfg.api_key_env)
        body = {
            "model": cfg.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": cfg.temperature,
        }
        url = cfg.base_url.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {api_key}"}
        start = time.perf_counter()
        last_exc: Exception | None = None
        for attempt in range(cfg.max_attempts):
            if attempt:
                time.sleep(min(_BACKOFF_BASE * 2 ** (attempt - 1), _BACKOFF_CAP))
            self._limiter.acquire()
            try:
                resp = requests.post(url, json=body, headers=headers, timeout=cfg.timeout)
            except requests.Timeout as exc:
                last_exc = TimeoutExceeded(str(exc))
                continue
            except requests.ConnectionError as exc:
                last_exc = ProviderError(0, str(exc)[:200])
                continue
            if resp.status_code in _RETRYABLE_STATUS:
                last_exc = ProviderError(resp.status_code, resp.text[:200])
                continue
            if resp.status_code != 200:
                raise ProviderError(resp.status_code, resp.text[:200])
            text = resp.json()["choices"][0]["message"]["content"]
            return ChatExchange(
                request=body,
                response_text=text,
                latency=time.perf_counter() - start,
                provider_kind=KIND_HTTP,
                request_digest=request_digest(messages, cfg.temperature),
            )
        raise last_exc if last_exc else GatewayError("no attempts were made")


class ReplayProvider:
    def __init__(self, config: ProviderConfig):
        self.config = config

    def complete(self, messages: list[ChatMessage]) -> ChatExchange:
        digest = request_digest(messages, self.config.temperature)
        path = Path(self.config.transcript_dir) / f"{digest}.json"
        if not path.is_file():
            raise ReplayMiss(digest)
        doc = json.loads(path.read_text(encoding="utf-8"))
        return ChatExchange(
            request=canonical_request(messages, self.config.temperature),
            response_text=doc["response_text"],
            latency=0.0,
            provider_kind=KIND_REPLAY,
            request_digest=digest,
        )


class RuleBasedProvider:
    def __init__(self, config: ProviderConfig):
        self.config = config

    def complete(self, messages: list[ChatMessage]) -> ChatExchange:
        from . import rule_translate

        start = time.perf_counter()
        text = rule_translate.respond(
            messages[1].content,
            inject_first_failure=self.config.inject_first_failure,
        )
        return ChatExchange(
            request=canonical_request(messages, self.config.temperature),
            response_text=text,
            latency=time.perf_counter() - start,
            provider_kind=KIND_RULE_BASED,
            request_digest=request_digest(messages, self.config.temperature),
        )


class RecordingProvider:
    """Wraps another provider and stores every exchange as a transcript."""

    def __init__(self, inner, transcript_dir: str | Path):
        self.inner = inner
        self.transcript_dir = Path(transcript_dir)

    def complete(self, messages: list[ChatMessage]) -> ChatExchange:
        exchange = self.inner.complete(messages)
        record_transcript(exchange, self.transcript_dir)
        return exchange


def make_provider(config: ProviderConfig):
    if config.kind == KIND_HTTP:
        return HttpChatProvider(config)
    if config.kind == KIND_REPLAY:
        return ReplayProvider(config)
    return RuleBasedProvider(config)


def complete(config: ProviderConfig, messages: list[ChatMessage]) -> ChatExchange:
    """One-shot completion honoring the [system, user] pipeline contract."""
    check_pipeline_contract(messages)
    return make_provider(config).complete(messages)


def record_transcript(exchange: ChatExchange, directory: str | Path) -> Path:
    """Write one transcript JSON named by digest; idempotent and atomic."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{exchange.request_digest}.json"
    if path.exists():
        return path
    doc = {
        "request_digest": exchange.request_digest,
        "provider_kind": exchange.provider_kind,
        "latency": exchange.latency,
        "request": exchange.request,
        "response_text": exchange.response_text,
    }
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)
    return path
