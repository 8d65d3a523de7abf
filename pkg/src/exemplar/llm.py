"""Completion backends: a live HTTP completions endpoint and a deterministic
replay backend, plus the shared request digest, response cache, retry and
rate-limit plumbing.

Live sampling at low temperature is still sampling, so every reproducible
path in this project (tests, bundled fixtures) runs on the replay backend.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import requests

from .prompts import GenerationParams, Prompt

API_KEY_ENV = "EXEMPLAR_API_KEY"
API_BASE_ENV = "EXEMPLAR_API_BASE"


class BackendError(RuntimeError):
    """Completion could not be obtained (network, auth, protocol)."""


class ReplayMissError(BackendError):
    """The replay script has no entry for this request."""


class EmptyCompletionError(BackendError):
    """The backend returned an empty completion.

    Distinct from BackendError proper so the session loop can record it as a
    consumed, failed attempt instead of aborting.
    """

    def __init__(self, message: str, response: "CompletionResponse"):
        super().__init__(message)
        self.response = response


@dataclass(frozen=True)
class CompletionRequest:
    prompt: Prompt
    params: GenerationParams


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    backend_id: str
    cached: bool = False
    latency: float = 0.0


def canonical_request(request: CompletionRequest) -> str:
    """Canonical serialization of (prompt text, params): fixed field order,
    compact separators, ASCII escapes.  The digest below hashes this."""
    payload = {"prompt": request.prompt.text, "params": request.params.to_dict()}
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=True)


def request_digest(request: CompletionRequest) -> str:
    """Stable sha256 hex digest of the canonical request serialization."""
    return hashlib.sha256(canonical_request(request).encode("utf-8")).hexdigest()


def _finish(
    text: str, backend_id: str, *, cached: bool = False, latency: float = 0.0
) -> CompletionResponse:
    response = CompletionResponse(
        text=text, backend_id=backend_id, cached=cached, latency=latency
    )
    if not text.strip():
        raise EmptyCompletionError(
            f"backend {backend_id!r} returned an empty completion", response
        )
    return response


# --------------------------------------------------------------------------
# Replay backend
# --------------------------------------------------------------------------

@dataclass
class ReplayScript:
    """Scripted completions: exact digest matches take precedence, then the
    next unconsumed entry of the unit's sequence."""

    exact: dict[str, str] = field(default_factory=dict)
    sequences: dict[str, list[str]] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "ReplayScript":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        exact = data.get("exact", {})
        sequences = data.get("sequences", {})
        if not isinstance(exact, dict) or not isinstance(sequences, dict):
            raise ValueError("replay script must map 'exact' and 'sequences' to objects")
        for unit, seq in sequences.items():
            if not isinstance(seq, list) or not all(isinstance(s, str) for s in seq):
                raise ValueError(f"replay sequence for {unit!r} must be a list of strings")
        return cls(exact=dict(exact), sequences={k: list(v) for k, v in sequences.items()})

    def dump(self, path: str | Path) -> None:
        payload = {"exact": self.exact, "sequences": self.sequences}
        Path(path).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )


class ReplayBackend:
    """Deterministic backend serving a ReplayScript.

    Per-unit sequence consumption is serialized under a lock; an exhausted
    sequence raises ReplayMissError naming the unit and attempt.
    """

    backend_id = "replay"

    def __init__(self, script: ReplayScript):
        self._script = script
        self._cursors: dict[str, int] = {}
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        digest = request_digest(request)
        text = self._script.exact.get(digest)
        if text is None:
            unit = request.prompt.unit_name
            with self._lock:
                sequence = self._script.sequences.get(unit)
                cursor = self._cursors.get(unit, 0)
                if sequence is None or cursor >= len(sequence):
                    raise ReplayMissError(
                        f"replay script has no completion for unit {unit!r} "
                        f"attempt {request.prompt.attempt_index}"
                    )
                self._cursors[unit] = cursor + 1
                text = sequence[cursor]
        return _finish(text, self.backend_id)

    def consumed_entries(self) -> dict[str, int]:
        """How many sequence entries each unit has consumed (for tests)."""
        with self._lock:
            return dict(self._cursors)


# --------------------------------------------------------------------------
# Cache, rate limiting, live backend
# --------------------------------------------------------------------------

class ResponseCache:
    """Append-only JSONL response cache keyed by request digest.

    Values for identical keys are identical by construction, so last-write-
    wins on load is safe; readers and writers share one lock.
    """

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self._path.exists():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                self._entries[entry["digest"]] = entry["text"]

    def get(self, digest: str) -> str | None:
        with self._lock:
            return self._entries.get(digest)

    def put(self, digest: str, text: str, model: str) -> None:
        line = json.dumps(
            {
                "digest": digest,
                "text": text,
                "model": model,
                "created_at": datetime.now(timezone.utc).isoformat(),
            },
            ensure_ascii=False,
        )
        with self._lock:
            self._entries[digest] = text
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class RateLimiter:
    """Sliding-window limiter: at most requests_per_minute acquisitions in
    any 60 s window.  Clock and sleep are injectable for simulated time."""

    def __init__(self, requests_per_minute: int, *, clock=time.monotonic, sleep=time.sleep):
        if requests_per_minute < 1:
            raise ValueError("requests_per_minute must be positive")
        self._rpm = requests_per_minute
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                while self._stamps and self._stamps[0] <= now - 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self._rpm:
                    self._stamps.append(now)
                    return
                wait = self._stamps[0] + 60.0 - now
            self._sleep(max(wait, 0.0))


def _http_transport(session: requests.Session, timeout: float):
    def post(url: str, headers: dict, body: dict) -> tuple[int, object]:
        response = session.post(url, headers=headers, json=body, timeout=timeout)
        try:
            payload = response.json()
        except ValueError:
            payload = None
        return response.status_code, payload

    return post


class LiveBackend:
    """Client for a completions-style HTTP endpoint.

    Retries transient failures with exponential backoff, honors a shared
    rate limiter, and can serve identical requests from a persistent cache.
    """

    backend_id = "live"
    _TRANSIENT = {429, 500, 502, 503, 504}

    def __init__(
        self,
        base_url: str,
        api_key: str,
        *,
        cache: ResponseCache | None = None,
        rate_limiter: RateLimiter | None = None,
        max_attempts: int = 3,
        backoff_base: float = 1.0,
        request_timeout: float = 60.0,
        transport=None,
        sleep=time.sleep,
        clock=time.monotonic,
    ):
        if not base_url:
            raise BackendError("live backend requires a base URL "
                               f"(flag, config, or {API_BASE_ENV})")
        if not api_key:
            raise BackendError(f"live backend requires an API key in {API_KEY_ENV}")
        self._url = base_url.rstrip("/") + "/completions"
        self._headers = {"Authorization": f"Bearer {api_key}"}
        self._cache = cache
        self._limiter = rate_limiter
        self._max_attempts = max(1, max_attempts)
        self._backoff_base = backoff_base
        self._sleep = sleep
        self._clock = clock
        self._transport = transport or _http_transport(requests.Session(), request_timeout)

    def _body(self, request: CompletionRequest) -> dict:
        params = request.params
        body = {
            "model": params.model,
            "prompt": request.prompt.text,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "frequency_penalty": params.frequency_penalty,
            "presence_penalty": params.presence_penalty,
        }
        if params.stop_sequences:
            body["stop"] = list(params.stop_sequences)
        return body

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        digest = request_digest(request)
        if self._cache is not None:
            hit = self._cache.get(digest)
            if hit is not None:
                return _finish(hit, self.backend_id, cached=True)

        started = self._clock()
        last_failure = "no attempts made"
        for attempt in range(self._max_attempts):
            if attempt:
                self._sleep(self._backoff_base * 2 ** (attempt - 1))
            if self._limiter is not None:
                self._limiter.acquire()
            try:
                status, payload = self._transport(self._url, self._headers, self._body(request))
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_failure = f"connection failure: {exc}"
                continue
            if status in self._TRANSIENT:
                last_failure = f"transient HTTP {status}"
                continue
            if status != 200:
                raise BackendError(f"completion endpoint returned HTTP {status}")
            try:
                text = payload["choices"][0]["text"]
            except (TypeError, KeyError, IndexError):
                raise BackendError("malformed completion response payload")
            if self._cache is not None:
                self._cache.put(digest, text, request.params.model)
            return _finish(text, self.backend_id, latency=self._clock() - started)
        raise BackendError(
            f"completion failed after {self._max_attempts} attempts ({last_failure})"
        )
