"""Chat-completion gateway.

Two backends sit behind the same interface: an OpenAI-style HTTP endpoint
and a scripted mock that replays fixed responses.  Each prompt is sent as a
single user message.  The gateway appends one JSON record per call to an
artifact log when a directory is configured.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import httpx

log = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 2000


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class ScriptExhaustedError(GatewayError):
    pass


class EmptyResponseError(GatewayError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS
    model_id: str = ""
    template_id: str = ""
    key: Optional[str] = None

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class Usage:
    prompt_chars: int
    response_chars: int
    latency_ms: float
    attempts: int = 1


@dataclass(frozen=True)
class Completion:
    text: str
    usage: Usage


class ScriptedBackend:
    """Replays responses in script order.

    ``keyed`` maps a request key (the challenge id during batch runs) to its
    own response queue; requests whose key has no queue draw from
    ``responses``.  Once a queue is empty the ``fallback`` response is used
    if one was given, otherwise the call fails.
    """

    kind = "scripted_mock"

    def __init__(self, responses: Sequence[str] = (), keyed: Optional[dict] = None,
                 fallback: Optional[str] = None):
        self._queue = deque(responses)
        self._keyed = {k: deque(v) for k, v in (keyed or {}).items()}
        self.fallback = fallback
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []

    @classmethod
    def from_file(cls, path) -> "ScriptedBackend":
        """Load a JSONL script of ``{"response": ..., "key": ...}`` records.

        A ``{"fallback": ...}`` record sets the fallback response.
        """
        responses, keyed, fallback = [], {}, None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                rec = json.loads(line)
                if "fallback" in rec:
                    fallback = rec["fallback"]
                elif "response" not in rec:
                    raise ValueError(f"{path}:{lineno}: script record needs 'response' or 'fallback'")
                elif rec.get("key") is not None:
                    keyed.setdefault(str(rec["key"]), []).append(rec["response"])
                else:
                    responses.append(rec["response"])
        return cls(responses, keyed, fallback)

    def complete(self, req: ChatRequest) -> tuple[str, int]:
        with self._lock:
            self.requests.append(req)
            queue = self._keyed.get(req.key) if req.key is not None else None
            if queue is None:
                queue = self._queue
            if queue:
                return queue.popleft(), 1
            if self.fallback is not None:
                return self.fallback, 1
            where = f" for key {req.key!r}" if req.key in self._keyed else ""
            raise ScriptExhaustedError(f"mock script exhausted{where} after "
                                       f"{len(self.requests) - 1} calls")


@dataclass
class HttpBackend:
    base_url: str
    token_env: Optional[str] = None
    retries: int = 3
    backoff: float = 1.0
    timeout: float = 120.0
    max_in_flight: int = 4
    _sem: threading.Semaphore = field(init=False, repr=False)

    kind = "http_chat_endpoint"

    def __post_init__(self):
        self._sem = threading.Semaphore(self.max_in_flight)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.token_env:
            token = os.environ.get(self.token_env)
            if not token:
                raise AuthError(f"environment variable {self.token_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, req: ChatRequest) -> tuple[str, int]:
        url = self.base_url.rstrip("/") + "/chat/completions"
        body = {
            "model": req.model_id,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = self._headers()
        last: Optional[Exception] = None
        with self._sem:
            for attempt in range(1, self.retries + 2):
                try:
                    resp = httpx.post(url, json=body, headers=headers, timeout=self.timeout)
                except httpx.HTTPError as exc:
                    last = TransportError(f"{type(exc).__name__}: {exc}")
                else:
                    if resp.status_code in (401, 403):
                        raise AuthError(f"endpoint rejected credentials ({resp.status_code})")
                    if resp.status_code == 429 or resp.status_code >= 500:
                        last = TransportError(f"HTTP {resp.status_code}")
                    elif resp.status_code >= 400:
                        raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                    else:
                        try:
                            return resp.json()["choices"][0]["message"]["content"] or "", attempt
                        except (ValueError, KeyError, IndexError, TypeError) as exc:
                            raise TransportError(f"malformed completion payload: {exc}") from None
                if attempt <= self.retries:
                    log.info("retrying %s after %s (attempt %d)", url, last, attempt)
                    time.sleep(self.backoff * 2 ** (attempt - 1))
        raise last


def complete(backend, req: ChatRequest) -> Completion:
    t0 = time.perf_counter()
    text, attempts = backend.complete(req)
    latency = (time.perf_counter() - t0) * 1000
    if not text or not text.strip():
        raise EmptyResponseError("backend returned an empty response")
    return Completion(text, Usage(len(req.prompt), len(text), latency, attempts))


class Gateway:
    """Backend plus model settings and the on-disk call log."""

    def __init__(self, backend, model_id: str = "", artifacts_dir=None):
        self.backend = backend
        self.model_id = model_id
        self.artifacts_path = None
        if artifacts_dir is not None:
            Path(artifacts_dir).mkdir(parents=True, exist_ok=True)
            self.artifacts_path = Path(artifacts_dir) / "llm_calls.jsonl"
        self._lock = threading.Lock()
        self.calls = 0

    def complete(self, prompt: str, *, temperature: float = 0.0,
                 max_tokens: int = DEFAULT_MAX_TOKENS, template_id: str = "",
                 key: Optional[str] = None) -> Completion:
        req = ChatRequest(prompt, temperature, max_tokens, self.model_id, template_id, key)
        with self._lock:
            self.calls += 1
        response, error, latency = None, None, 0.0
        try:
            result = complete(self.backend, req)
            response, latency = result.text, result.usage.latency_ms
            return result
        except GatewayError as exc:
            error = f"{type(exc).__name__}: {exc}"
            raise
        finally:
            self._record(req, response, error, latency)

    def _record(self, req: ChatRequest, response, error, latency) -> None:
        if self.artifacts_path is None:
            return
        rec = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "template_id": req.template_id,
               "key": req.key, "prompt": req.prompt, "response": response,
               "latency_ms": round(latency, 3)}
        if error:
            rec["error"] = error
        with self._lock, open(self.artifacts_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def bind(self, key: Optional[str]) -> "BoundGateway":
        return BoundGateway(self, key)


@dataclass
class BoundGateway:
    """A gateway view that tags every request with a fixed key."""
    gateway: Gateway
    key: Optional[str]
    calls: int = 0

    def complete(self, prompt: str, **kwargs) -> Completion:
        kwargs.setdefault("key", self.key)
        self.calls += 1
        return self.gateway.complete(prompt, **kwargs)
