"""Client for OpenAI-compatible chat-completions endpoints."""

from __future__ import annotations

import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import httpx

log = logging.getLogger(__name__)


class GenerationError(RuntimeError):
    pass


class ConfigurationError(GenerationError):
    pass


class PermanentError(GenerationError):
    """The endpoint rejected the request (HTTP 4xx); retrying will not help."""


class TransportError(GenerationError):
    """Timeouts, connection failures or 5xx responses that outlived all retries."""


@dataclass(frozen=True)
class GenConfig:
    top_p: float = 0.9
    temperature: float = 0.6
    max_new_tokens: int = 512
    endpoint_url: str | None = None
    model_name: str | None = None
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_concurrency: int = 4
    retries: int = 3
    backoff: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.top_p <= 1:
            raise ConfigurationError("top_p must lie in (0, 1]")
        if self.temperature < 0:
            raise ConfigurationError("temperature must be >= 0")
        if self.max_concurrency < 1 or self.retries < 0 or self.max_new_tokens < 1:
            raise ConfigurationError("max_concurrency, retries and max_new_tokens out of range")

    @property
    def url(self) -> str:
        base = (self.endpoint_url or "").rstrip("/")
        return base if base.endswith("/chat/completions") else base + "/chat/completions"


def request_body(prompt: str, cfg: GenConfig) -> dict:
    return {
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "top_p": cfg.top_p,
        "max_tokens": cfg.max_new_tokens,
    }


class ChatClient:
    """Thread-safe client; at most ``cfg.max_concurrency`` requests in flight."""

    def __init__(self, cfg: GenConfig, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        if not cfg.endpoint_url or not cfg.model_name:
            raise ConfigurationError("endpoint_url and model_name must be configured for the llm backend")
        self.cfg = cfg
        self._slots = threading.BoundedSemaphore(cfg.max_concurrency)
        self._sleep = sleep
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(cfg.api_key_env, "") if cfg.api_key_env else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(timeout=cfg.timeout, headers=headers, transport=transport,
                                  limits=httpx.Limits(max_connections=cfg.max_concurrency))

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "ChatClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def complete(self, prompt: str) -> str:
        body = request_body(prompt, self.cfg)
        last: Exception | None = None
        for attempt in range(self.cfg.retries + 1):
            if attempt:
                self._sleep(self.cfg.backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._http.post(self.cfg.url, json=body)
            except httpx.TransportError as exc:
                last = exc
                log.warning("request attempt %d failed: %r", attempt + 1, exc)
                continue
            if 400 <= resp.status_code < 500:
                raise PermanentError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            if resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}")
                log.warning("request attempt %d got HTTP %d", attempt + 1, resp.status_code)
                continue
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise PermanentError(f"unexpected response shape: {resp.text[:200]}") from exc
        raise TransportError(f"giving up after {self.cfg.retries} retries: {last}")

    def complete_many(self, prompts: Sequence[str]) -> list[str | GenerationError]:
        """Complete every prompt; failures come back as exception objects in place."""
        def one(p: str) -> str | GenerationError:
            try:
                return self.complete(p)
            except GenerationError as exc:
                return exc
        with ThreadPoolExecutor(max_workers=self.cfg.max_concurrency) as pool:
            return list(pool.map(one, prompts))


def complete_llm(prompt: str, cfg: GenConfig) -> str:
    with ChatClient(cfg) as client:
        return client.complete(prompt)
