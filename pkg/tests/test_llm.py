from __future__ import annotations

import json

import pytest
import requests

from exemplar.llm import (
    BackendError,
    CompletionRequest,
    EmptyCompletionError,
    LiveBackend,
    RateLimiter,
    ReplayBackend,
    ReplayMissError,
    ReplayScript,
    ResponseCache,
    canonical_request,
    request_digest,
)
from exemplar.prompts import GenerationParams, build_generation_prompt, build_repair_prompt

from conftest import make_unit

# Frozen once from the canonical serialization (also re-derived by hand below).
GOLDEN_DIGEST = "25407f182ae73416edf226c3b990ad5c5489f36916c21098cf47e87ef1714cfd"


def _request(model: str = "code-model-1", temperature: float = 0.2) -> CompletionRequest:
    return CompletionRequest(
        prompt=build_generation_prompt(make_unit()),
        params=GenerationParams(model=model, temperature=temperature),
    )


# --------------------------------------------------------------------------
# digest
# --------------------------------------------------------------------------

def test_digest_stable():
    assert request_digest(_request()) == request_digest(_request())


def test_digest_covers_params():
    assert request_digest(_request(temperature=0.2)) != request_digest(
        _request(temperature=0.3)
    )


def test_digest_golden():
    import hashlib

    request = _request()
    # independent oracle: hand-built canonical JSON over the same fields
    by_hand = (
        '{"prompt":' + json.dumps(request.prompt.text, ensure_ascii=True) +
        ',"params":{"model":"code-model-1","temperature":0.2,"top_p":0.95,'
        '"frequency_penalty":0.0,"presence_penalty":0.0,"max_tokens":256,"stop":[]}}'
    )
    assert canonical_request(request) == by_hand
    assert request_digest(request) == hashlib.sha256(by_hand.encode()).hexdigest()
    assert request_digest(request) == GOLDEN_DIGEST


# --------------------------------------------------------------------------
# replay backend
# --------------------------------------------------------------------------

def test_replay_exact_hit():
    request = _request()
    script = ReplayScript(exact={request_digest(request): "print('scripted')"})
    response = ReplayBackend(script).complete(request)
    assert response.text == "print('scripted')"
    assert response.cached is False
    assert response.backend_id == "replay"


def test_replay_pipeline_sequence():
    failing = (
        "pipe = make_pipeline(StandardScaler(), SVC())\n"
        "pipe.fit(X_train, y_train)\n"
    )
    fixed = (
        "X_train, y_train = [[0], [1]], [0, 1]\n"
        "pipe = make_pipeline(StandardScaler(), SVC())\n"
        "pipe.fit(X_train, y_train)\n"
    )
    script = ReplayScript(sequences={"make_pipeline_demo": [failing, fixed]})
    backend = ReplayBackend(script)
    unit = make_unit(name="make_pipeline_demo")

    first = backend.complete(
        CompletionRequest(prompt=build_generation_prompt(unit), params=GenerationParams())
    )
    assert first.text == failing
    assert "X_train" in first.text

    second = backend.complete(
        CompletionRequest(
            prompt=build_repair_prompt(
                failing,
                "NameError: name 'X_train' is not defined",
                unit_name="make_pipeline_demo",
            ),
            params=GenerationParams(),
        )
    )
    assert second.text == fixed
    assert "X_train, y_train = " in second.text


def test_replay_miss_names_unit_and_attempt():
    backend = ReplayBackend(ReplayScript(sequences={"mod.f": ["print('once')"]}))
    request = _request()
    backend.complete(request)
    with pytest.raises(ReplayMissError, match=r"mod\.f.*attempt 0"):
        backend.complete(request)


def test_replay_empty_completion_error():
    backend = ReplayBackend(ReplayScript(sequences={"mod.f": [""]}))
    with pytest.raises(EmptyCompletionError):
        backend.complete(_request())


def test_replay_script_load_dump(tmp_path):
    script = ReplayScript(exact={"ab": "x"}, sequences={"m.f": ["a", "b"]})
    path = tmp_path / "script.json"
    script.dump(path)
    loaded = ReplayScript.load(path)
    assert loaded.exact == script.exact
    assert loaded.sequences == script.sequences


def test_consumed_entries_tracking():
    backend = ReplayBackend(ReplayScript(sequences={"mod.f": ["print('a')", "print('b')"]}))
    backend.complete(_request())
    assert backend.consumed_entries() == {"mod.f": 1}


# --------------------------------------------------------------------------
# live backend (fake transport)
# --------------------------------------------------------------------------

class FakeTransport:
    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = 0

    def __call__(self, url, headers, body):
        self.calls += 1
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        status, text = outcome
        return status, {"choices": [{"text": text}]}


def _live(transport, tmp_path=None, **kwargs):
    cache = ResponseCache(tmp_path / "cache.jsonl") if tmp_path else None
    return LiveBackend(
        "https://example.test/v1",
        "secret-key",
        cache=cache,
        transport=transport,
        sleep=lambda _s: None,
        **kwargs,
    )


def test_live_cache_second_request_cached(tmp_path):
    transport = FakeTransport([(200, "print('live')")])
    backend = _live(transport, tmp_path)
    first = backend.complete(_request())
    second = backend.complete(_request())
    assert first.cached is False
    assert second.cached is True
    assert second.text == first.text == "print('live')"
    assert transport.calls == 1


def test_cache_persists_across_instances(tmp_path):
    transport = FakeTransport([(200, "print('live')")])
    backend = _live(transport, tmp_path)
    backend.complete(_request())

    reopened = ResponseCache(tmp_path / "cache.jsonl")
    assert reopened.get(request_digest(_request())) == "print('live')"
    entry = json.loads((tmp_path / "cache.jsonl").read_text().splitlines()[0])
    assert set(entry) == {"digest", "text", "model", "created_at"}


def test_live_retries_transient_then_succeeds():
    transport = FakeTransport(
        [requests.ConnectionError("down"), (503, ""), (200, "print('up')")]
    )
    backend = _live(transport, max_attempts=3)
    assert backend.complete(_request()).text == "print('up')"
    assert transport.calls == 3


def test_live_fails_after_attempt_cap():
    transport = FakeTransport([(500, "")] * 3)
    backend = _live(transport, max_attempts=3)
    with pytest.raises(BackendError, match="after 3 attempts"):
        backend.complete(_request())


def test_live_hard_failure_no_retry():
    transport = FakeTransport([(401, "")])
    backend = _live(transport, max_attempts=3)
    with pytest.raises(BackendError, match="401"):
        backend.complete(_request())
    assert transport.calls == 1


def test_live_requires_credentials():
    with pytest.raises(BackendError):
        LiveBackend("", "key")
    with pytest.raises(BackendError):
        LiveBackend("https://example.test", "")


def test_live_empty_completion_recorded_then_raised(tmp_path):
    transport = FakeTransport([(200, "")])
    backend = _live(transport, tmp_path)
    with pytest.raises(EmptyCompletionError) as err:
        backend.complete(_request())
    assert err.value.response.text == ""
    # recorded as such, never fabricated
    assert ResponseCache(tmp_path / "cache.jsonl").get(request_digest(_request())) == ""


# --------------------------------------------------------------------------
# rate limiter
# --------------------------------------------------------------------------

class SimClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.now += seconds


def test_rate_limiter_blocks_over_limit():
    clock = SimClock()
    limiter = RateLimiter(3, clock=clock, sleep=clock.sleep)
    stamps = []
    for _ in range(7):
        limiter.acquire()
        stamps.append(clock.now)
    # over any 60s window at most 3 acquisitions
    for i in range(len(stamps)):
        window = [s for s in stamps if stamps[i] - 60.0 < s <= stamps[i]]
        assert len(window) <= 3
    assert stamps[3] >= 60.0  # the fourth call had to wait for the window


def test_rate_limiter_requires_positive_rpm():
    with pytest.raises(ValueError):
        RateLimiter(0)
