"""Chat-completion front end shared by every pipeline stage."""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from dataclasses import dataclass, replace
from typing import Optional

import httpx

from ..minilang.errors import MiniLangError

log = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 3
DEFAULT_IN_FLIGHT = 8
API_KEY_ENV = "SUITEVOLVE_API_KEY"


class LLMError(MiniLangError):
    pass


class RemoteUnavailable(LLMError):
    """Transport failures, 5xx or 429 persisted through every retry."""


class AuthError(LLMError):
    """The endpoint rejected the credentials (401/403)."""


@dataclass(frozen=True)
class CompletionRequest:
    template_id: str
    system: str
    user: str
    temperature: float
    max_retries: int = DEFAULT_MAX_RETRIES
    seed: Optional[int] = None  # per-request sampling seed, like the OpenAI ``seed`` field


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    backend: str
    latency: float
    temperature: float
    prompt_tokens: int = 0
    completion_tokens: int = 0


class RemoteBackend:
    """OpenAI-compatible ``/chat/completions`` client with bounded retries.

    ``transport`` lets tests plug in :class:`httpx.MockTransport`; ``sleep``
    and ``rng`` make the backoff schedule observable.
    """

    name = "remote"

    def __init__(self, endpoint: str, model: str, api_key: Optional[str] = None, *,
                 timeout: float = 60.0, transport=None, sleep=time.sleep, rng=None):
        if api_key is None:
            api_key = os.environ.get(API_KEY_ENV)
        if not api_key:
            raise AuthError(f"no API key: set the {API_KEY_ENV} environment variable")
        url = endpoint.rstrip("/")
        if not url.endswith("/chat/completions"):
            url += "/chat/completions"
        self.url = url
        self.model = model
        self._client = httpx.Client(
            timeout=timeout, transport=transport,
            headers={"Authorization": f"Bearer {api_key}"})
        self._sleep = sleep
        self._rng = rng or random.Random()
        self.http_requests = 0

    def backoff(self, attempt: int) -> float:
        """Delay before retry ``attempt`` (0-based): 1s, 2s, 4s, ... with +-20% jitter."""
        return (2.0 ** attempt) * self._rng.uniform(0.8, 1.2)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        payload = {
            "model": self.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.user}],
        }
        if request.system:
            payload["messages"].insert(0, {"role": "system", "content": request.system})
        if request.seed is not None:
            payload["seed"] = request.seed
        last = "no attempt made"
        for attempt in range(request.max_retries + 1):
            if attempt:
                self._sleep(self.backoff(attempt - 1))
            start = time.monotonic()
            self.http_requests += 1
            try:
                resp = self._client.post(self.url, json=payload)
            except httpx.TransportError as exc:
                last = f"transport error: {exc}"
                log.warning("attempt %d failed: %s", attempt + 1, last)
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                log.warning("attempt %d failed: %s", attempt + 1, last)
                continue
            if resp.status_code >= 400:
                raise LLMError(f"endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
            body = resp.json()
            usage = body.get("usage") or {}
            return CompletionResponse(
                text=body["choices"][0]["message"]["content"] or "",
                backend=self.name,
                latency=time.monotonic() - start,
                temperature=request.temperature,
                prompt_tokens=int(usage.get("prompt_tokens", 0)),
                completion_tokens=int(usage.get("completion_tokens", 0)),
            )
        raise RemoteUnavailable(
            f"{request.max_retries + 1} attempt(s) to {self.url} failed; last: {last}")

    def close(self):
        self._client.close()


class Gateway:
    """Caps concurrent requests and counts calls; wraps any backend."""

    def __init__(self, backend, in_flight: int = DEFAULT_IN_FLIGHT,
                 max_retries: Optional[int] = None):
        if in_flight < 1:
            raise ValueError("in-flight cap must be at least 1")
        if max_retries is not None and max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        self.backend = backend
        self.max_retries = max_retries  # overrides the per-request value when set
        self._slots = threading.BoundedSemaphore(in_flight)
        self._lock = threading.Lock()
        self.calls = 0
        self.failures = 0

    @property
    def name(self):
        return self.backend.name

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        if self.max_retries is not None:
            request = replace(request, max_retries=self.max_retries)
        with self._lock:
            self.calls += 1
        with self._slots:
            try:
                return self.backend.complete(request)
            except LLMError:
                with self._lock:
                    self.failures += 1
                raise


def complete(request: CompletionRequest, backend) -> CompletionResponse:
    """Issue one completion through ``backend`` (a backend or a :class:`Gateway`)."""
    return backend.complete(request)
