"""Embedding providers and cosine similarity.

Two providers share one interface: a deterministic offline mock (hashed
bag-of-tokens, unit-norm, platform-stable) and a live HTTP endpoint client.
Token budgets use whitespace-delimited counting in offline mode so no
tokenizer dependency is needed.

Mock scheme: lowercase alphanumeric tokenization; per token, bucket =
64-bit BLAKE2b("bucket" domain) mod dimension and sign = parity of a second
64-bit BLAKE2b("sign" domain); accumulate +-1 per token; L2-normalize.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import time
from dataclasses import dataclass

import numpy as np
import requests

from .errors import (
    DimensionMismatch,
    EmptyInput,
    ProviderError,
    TokenBudgetExceeded,
    ZeroVector,
)

DEFAULT_DIMENSION = 1536
DEFAULT_MAX_TOKENS = 8191

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class EmbedderProfile:
    """Identity and limits of an embedding space."""

    name: str = "mock"
    dimension: int = DEFAULT_DIMENSION
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be > 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be > 0")


def count_tokens(text: str) -> int:
    """Whitespace-delimited token count used for all offline budgets."""
    return len(text.split())


def _hash64(data: bytes, domain: bytes) -> int:
    digest = hashlib.blake2b(data, digest_size=8, person=domain).digest()
    return int.from_bytes(digest, "little")


def _mock_tokens(text: str) -> list[str]:
    tokens = _TOKEN_RE.findall(text.lower())
    if tokens:
        return tokens
    # No alphanumeric content (e.g. pure punctuation): hash the raw text once.
    return [text.strip().lower()]


class MockEmbedder:
    """Deterministic offline embedder; a pure function of (text, dimension)."""

    def __init__(self, profile: EmbedderProfile | None = None):
        self.profile = profile or EmbedderProfile()

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyInput("cannot embed empty text")
        n_tokens = count_tokens(text)
        if n_tokens > self.profile.max_tokens:
            raise TokenBudgetExceeded(
                f"{n_tokens} tokens exceeds budget {self.profile.max_tokens}; chunk first")
        dim = self.profile.dimension
        acc = np.zeros(dim, dtype=np.float64)
        for token in _mock_tokens(text):
            data = token.encode("utf-8")
            bucket = _hash64(data, b"bucket") % dim
            sign = 1.0 if _hash64(data, b"sign") % 2 == 0 else -1.0
            acc[bucket] += sign
        norm = float(np.linalg.norm(acc))
        if norm == 0.0:
            # All token contributions cancelled: fall back to a one-hot on the
            # whole text so the output stays unit-norm and deterministic.
            acc[_hash64(text.encode("utf-8"), b"bucket") % dim] = 1.0
            norm = 1.0
        return (acc / norm).astype(np.float32)

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


class HttpEmbedder:
    """Client for an HTTP embedding endpoint (OpenAI-style request body).

    API key comes from the environment; requests are batched up to
    batch_size and in-flight concurrency is capped by a semaphore.
    """

    def __init__(self, profile: EmbedderProfile, endpoint: str,
                 api_key_env: str = "EMBEDDING_API_KEY", batch_size: int = 16,
                 timeout: float = 30.0, max_inflight: int = 4):
        self.profile = profile
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.batch_size = max(1, batch_size)
        self.timeout = timeout
        self._gate = threading.BoundedSemaphore(max_inflight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post_batch(self, texts: list[str]) -> list[np.ndarray]:
        payload = {"model": self.profile.name, "input": texts}
        with self._gate:
            started = time.monotonic()
            try:
                resp = requests.post(self.endpoint, json=payload,
                                     headers=self._headers(), timeout=self.timeout)
            except requests.RequestException as exc:
                raise ProviderError(f"embedding request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(
                f"embedding endpoint returned {resp.status_code} "
                f"after {time.monotonic() - started:.1f}s",
                status=resp.status_code, body=resp.text[:2000])
        try:
            rows = resp.json()["data"]
            vectors = [np.asarray(row["embedding"], dtype=np.float32) for row in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"unexpected embedding response shape: {exc}",
                                status=resp.status_code, body=resp.text[:2000]) from exc
        for vec in vectors:
            if vec.shape != (self.profile.dimension,):
                raise DimensionMismatch(
                    f"provider returned dimension {vec.shape}, "
                    f"profile expects {self.profile.dimension}")
        return vectors

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyInput("cannot embed empty text")
        if count_tokens(text) > self.profile.max_tokens:
            raise TokenBudgetExceeded(
                f"text exceeds budget {self.profile.max_tokens}; chunk first")
        return self._post_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start:start + self.batch_size]
            for t in batch:
                if not t or not t.strip():
                    raise EmptyInput("cannot embed empty text")
                if count_tokens(t) > self.profile.max_tokens:
                    raise TokenBudgetExceeded(
                        f"text exceeds budget {self.profile.max_tokens}; chunk first")
            out.extend(self._post_batch(batch))
        return out


def get_embedder(profile: EmbedderProfile, endpoint: str = "",
                 api_key_env: str = "EMBEDDING_API_KEY"):
    """Provider factory: profile name "mock" selects the offline embedder."""
    if profile.name == "mock" or not endpoint:
        return MockEmbedder(profile)
    return HttpEmbedder(profile, endpoint, api_key_env=api_key_env)


def cosine(a, b) -> float:
    """Cosine similarity in float64, clamped to [-1, 1]."""
    va = np.asarray(a, dtype=np.float64).ravel()
    vb = np.asarray(b, dtype=np.float64).ravel()
    if va.shape != vb.shape:
        raise DimensionMismatch(f"dimensions {va.shape[0]} and {vb.shape[0]} differ")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    value = float(np.dot(va, vb) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))
