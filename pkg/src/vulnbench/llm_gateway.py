"""Uniform chat-completion interface over live HTTP providers and a
deterministic record/replay fixture backend.

Requests are content-addressed by a sha256 over (model, system text, user
text, temperature, max_output_tokens); the same hash keys the replay
fixture (line-delimited JSON: request_hash, model, text, latency_ms) and
the in-memory response cache. Offline mode refuses live providers before
any socket is opened. Temperature defaults to 0 everywhere; run-to-run
variation is captured by harness repeats, not sampling.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import ContextOverflow, ProviderError, ReplayMiss, VulnBenchError
from .promptkit import RenderedPrompt

log = logging.getLogger(__name__)

PROVIDER_OPENAI = "openai_like"
PROVIDER_GOOGLE = "google_like"
PROVIDER_LOCAL = "local_http"
PROVIDER_REPLAY = "replay"
PROVIDERS = (PROVIDER_OPENAI, PROVIDER_GOOGLE, PROVIDER_LOCAL, PROVIDER_REPLAY)

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class ModelProfile:
    """One model endpoint plus its invocation limits."""

    name: str
    provider: str
    context_window: int
    endpoint: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 512
    api_key_env: str = ""

    def __post_init__(self):
        if self.provider not in PROVIDERS:
            raise ValueError(f"provider must be one of {PROVIDERS}")
        if self.context_window <= 0:
            raise ValueError("context_window must be > 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class RawResponse:
    text: str
    model_name: str
    latency_ms: int
    request_hash: str
    finish_reason: str = "stop"  # stop | length | error


def request_hash(profile: ModelProfile, prompt: RenderedPrompt) -> str:
    """Stable digest of everything that determines a completion."""
    payload = json.dumps(
        {
            "model": profile.name,
            "system": prompt.system_text,
            "user": prompt.user_text,
            "temperature": profile.temperature,
            "max_output_tokens": profile.max_output_tokens,
        },
        sort_keys=True,
        ensure_ascii=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """In-memory content-addressed cache with hit/miss telemetry."""

    def __init__(self):
        self._entries: dict[str, RawResponse] = {}
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> RawResponse | None:
        found = self._entries.get(key)
        if found is None:
            self.misses += 1
        else:
            self.hits += 1
        return found

    def put(self, key: str, response: RawResponse) -> None:
        self._entries[key] = response


def build_openai_request(profile: ModelProfile, prompt: RenderedPrompt) -> dict:
    return {
        "model": profile.name,
        "messages": [
            {"role": "system", "content": prompt.system_text},
            {"role": "user", "content": prompt.user_text},
        ],
        "temperature": profile.temperature,
        "max_tokens": profile.max_output_tokens,
    }


def parse_openai_response(body: dict) -> tuple[str, str]:
    choice = body["choices"][0]
    finish = choice.get("finish_reason") or "stop"
    return choice["message"]["content"] or "", "length" if finish == "length" else "stop"


def build_google_request(profile: ModelProfile, prompt: RenderedPrompt) -> dict:
    return {
        "systemInstruction": {"parts": [{"text": prompt.system_text}]},
        "contents": [{"role": "user", "parts": [{"text": prompt.user_text}]}],
        "generationConfig": {
            "temperature": profile.temperature,
            "maxOutputTokens": profile.max_output_tokens,
        },
    }


def parse_google_response(body: dict) -> tuple[str, str]:
    candidate = body["candidates"][0]
    text = "".join(part.get("text", "") for part in candidate["content"]["parts"])
    finish = str(candidate.get("finishReason", "STOP")).lower()
    return text, "length" if "token" in finish or finish == "length" else "stop"


class Gateway:
    """Dispatches completions to replay fixtures or live HTTP endpoints.

    offline=True (the default) refuses live providers outright. In-flight
    live requests are capped per provider; fixture appends are serialized
    through one lock.
    """

    def __init__(self, offline: bool = True, replay_path: str | Path | None = None,
                 cache: ResponseCache | None = None, max_retries: int = 3,
                 backoff_base: float = 0.25, timeout: float = 60.0,
                 max_inflight: int = 2):
        self.offline = offline
        self.replay_path = Path(replay_path) if replay_path else None
        self.cache = cache
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.provider_calls = 0  # actual backend invocations (cache misses)
        self._replay: dict[str, dict] = {}
        self._io_lock = threading.Lock()
        self._gates: dict[str, threading.BoundedSemaphore] = {}
        self._max_inflight = max_inflight
        if self.replay_path and self.replay_path.exists():
            self._load_fixture(self.replay_path)

    def _load_fixture(self, path: Path) -> None:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                    self._replay[entry["request_hash"]] = entry
                except (json.JSONDecodeError, TypeError, KeyError) as exc:
                    raise VulnBenchError(
                        f"replay fixture {path} line {line_no} invalid: {exc}"
                    ) from None

    def _gate(self, provider: str) -> threading.BoundedSemaphore:
        with self._io_lock:
            if provider not in self._gates:
                self._gates[provider] = threading.BoundedSemaphore(self._max_inflight)
            return self._gates[provider]

    def fixture_size(self) -> int:
        return len(self._replay)

    def complete(self, profile: ModelProfile, prompt: RenderedPrompt) -> RawResponse:
        """Run one completion; retries transient live failures with backoff.

        ContextOverflow is raised before any network activity and is never
        retried; neither is ReplayMiss.
        """
        if prompt.token_estimate + profile.max_output_tokens > profile.context_window:
            raise ContextOverflow(
                f"prompt ({prompt.token_estimate} tokens) plus output budget "
                f"({profile.max_output_tokens}) exceeds context window "
                f"{profile.context_window} of {profile.name}")
        key = request_hash(profile, prompt)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return cached

        if profile.provider == PROVIDER_REPLAY:
            entry = self._replay.get(key)
            if entry is None:
                raise ReplayMiss(key)
            self.provider_calls += 1
            response = RawResponse(
                text=entry["text"],
                model_name=entry.get("model", profile.name),
                latency_ms=int(entry.get("latency_ms", 0)),
                request_hash=key,
                finish_reason=entry.get("finish_reason", "stop"),
            )
        else:
            if self.offline:
                raise ProviderError(
                    f"offline mode forbids live provider {profile.provider!r}")
            response = self._complete_live(profile, prompt, key)

        if self.cache is not None:
            self.cache.put(key, response)
        return response

    def _complete_live(self, profile: ModelProfile, prompt: RenderedPrompt,
                       key: str) -> RawResponse:
        if profile.provider == PROVIDER_GOOGLE:
            body = build_google_request(profile, prompt)
            parse = parse_google_response
        else:
            body = build_openai_request(profile, prompt)
            parse = parse_openai_response
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(profile.api_key_env, "") if profile.api_key_env else ""
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            started = time.monotonic()
            try:
                with self._gate(profile.provider):
                    self.provider_calls += 1
                    resp = requests.post(profile.endpoint, json=body,
                                         headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                log.warning("attempt %d against %s failed: %s",
                            attempt + 1, profile.name, exc)
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last_error = ProviderError(
                    f"{profile.name} returned {resp.status_code}",
                    status=resp.status_code, body=resp.text[:2000])
                log.warning("attempt %d against %s: HTTP %d",
                            attempt + 1, profile.name, resp.status_code)
                continue
            if resp.status_code != 200:
                raise ProviderError(
                    f"{profile.name} returned {resp.status_code}",
                    status=resp.status_code, body=resp.text[:2000])
            try:
                text, finish = parse(resp.json())
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise ProviderError(
                    f"unexpected response shape from {profile.name}: {exc}",
                    status=resp.status_code, body=resp.text[:2000]) from exc
            latency_ms = int((time.monotonic() - started) * 1000)
            return RawResponse(text=text, model_name=profile.name,
                               latency_ms=latency_ms, request_hash=key,
                               finish_reason=finish)
        raise ProviderError(
            f"{profile.name} failed after {self.max_retries + 1} attempts: {last_error}",
            status=getattr(last_error, "status", None))

    def record(self, profile: ModelProfile, prompt: RenderedPrompt,
               response: RawResponse) -> dict:
        """Append one (request_hash -> response) fixture entry; idempotent."""
        if self.replay_path is None:
            raise ValueError("gateway has no replay fixture path configured")
        key = request_hash(profile, prompt)
        entry = {
            "request_hash": key,
            "model": response.model_name,
            "text": response.text,
            "latency_ms": response.latency_ms,
            "finish_reason": response.finish_reason,
        }
        with self._io_lock:
            if key in self._replay:
                return self._replay[key]
            self._replay[key] = entry
            with open(self.replay_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return entry
