"""OpenAI-compatible chat client with retries and a content-addressed cache.

Every completed response is written to the cache keyed by (model, prompt,
temperature), so a rerun with a warm cache issues zero network requests and
the whole evaluation is reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

API_KEY_ENV_VARS = ("EVENTBENCH_API_KEY", "OPENAI_API_KEY")

# Transient statuses worth retrying; auth and client errors fail immediately.
RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


class RequestFailed(Exception):
    """A chat request that failed after exhausting its retry budget."""


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_base: float = 1.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.backoff_base < 0:
            raise ValueError("backoff_base must be >= 0")


@dataclass(frozen=True)
class EvalConfig:
    """One evaluation run's knobs: endpoint, model, sampling, and transport limits."""

    endpoint: str
    model: str
    sample_docs: int = 250
    sample_seed: int = 0
    temperature: float = 0.0
    max_in_flight: int = 4
    timeout: float = 60.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self) -> None:
        if self.sample_docs < 1:
            raise ValueError("sample_docs must be >= 1")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


def chat_url(endpoint: str) -> str:
    stripped = endpoint.rstrip("/")
    if stripped.endswith("/chat/completions"):
        return stripped
    return stripped + "/chat/completions"


def resolve_api_key() -> str | None:
    for name in API_KEY_ENV_VARS:
        value = os.environ.get(name)
        if value:
            return value
    return None


class ResponseCache:
    """Content-addressed JSON files; reads and writes are lock-serialized."""

    def __init__(self, cache_dir: Path | str):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @staticmethod
    def key(model: str, prompt: str, temperature: float) -> str:
        payload = f"{model}\x00{temperature!r}\x00{prompt}".encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def get(self, key: str) -> str | None:
        with self._lock:
            path = self._path(key)
            if not path.exists():
                return None
            try:
                return json.loads(path.read_text(encoding="utf-8"))["response"]
            except (json.JSONDecodeError, KeyError):
                return None  # corrupt entry behaves like a miss

    def put(self, key: str, model: str, prompt: str, temperature: float, response: str) -> None:
        record = {"model": model, "temperature": temperature, "prompt": prompt, "response": response}
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(record, f, ensure_ascii=False)
            os.replace(tmp, self._path(key))


class ChatClient:
    """Thread-safe chat-completion caller. Stats track cache hits vs network calls."""

    def __init__(
        self,
        config: EvalConfig,
        cache: ResponseCache | None = None,
        api_key: str | None = None,
        session: requests.Session | None = None,
    ):
        self.config = config
        self.cache = cache
        self.api_key = api_key if api_key is not None else resolve_api_key()
        self._session = session or requests.Session()
        self._stats_lock = threading.Lock()
        self.n_network_requests = 0
        self.n_cache_hits = 0
        self.n_failures = 0

    def _count(self, attr: str) -> None:
        with self._stats_lock:
            setattr(self, attr, getattr(self, attr) + 1)

    def _post_once(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        self._count("n_network_requests")
        resp = self._session.post(
            chat_url(self.config.endpoint),
            json=payload,
            headers=headers,
            timeout=self.config.timeout,
        )
        if resp.status_code in RETRYABLE_STATUSES:
            raise requests.HTTPError(f"retryable status {resp.status_code}", response=resp)
        resp.raise_for_status()
        body = resp.json()
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise RequestFailed(f"malformed completion payload: {body!r}") from exc

    def complete(self, prompt: str) -> str:
        """Cached completion; network attempts follow the retry policy."""
        key = None
        if self.cache is not None:
            key = self.cache.key(self.config.model, prompt, self.config.temperature)
            cached = self.cache.get(key)
            if cached is not None:
                self._count("n_cache_hits")
                return cached
        policy = self.config.retry
        last_error: Exception | None = None
        for attempt in range(policy.max_attempts):
            try:
                response = self._post_once(prompt)
            except RequestFailed:
                self._count("n_failures")
                raise
            except requests.HTTPError as exc:
                status = exc.response.status_code if exc.response is not None else None
                if status not in RETRYABLE_STATUSES:
                    self._count("n_failures")
                    raise RequestFailed(f"request rejected: {exc}") from exc
                last_error = exc
            except requests.RequestException as exc:  # connection errors, timeouts
                last_error = exc
            else:
                if self.cache is not None and key is not None:
                    self.cache.put(
                        key, self.config.model, prompt, self.config.temperature, response
                    )
                return response
            if attempt + 1 < policy.max_attempts and policy.backoff_base > 0:
                time.sleep(policy.backoff_base * (2**attempt))
        self._count("n_failures")
        raise RequestFailed(f"all {policy.max_attempts} attempts failed: {last_error}")
