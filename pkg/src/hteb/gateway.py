"""Transport to generative (chat) and embedding endpoints.

One HTTP adapter speaks the common chat-completions / embeddings wire
format; a deterministic mock stands in for offline runs and tests. The
Gateway wraps either with retries, bounded parallelism and the
persistent transformation cache, and is safe to share across threads.
"""

from __future__ import annotations

import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import requests

from .cache import TransformationCache
from .errors import DimensionMismatch, ProtocolError, TransportError

CHAT_URL_ENV = "HTEB_CHAT_URL"
EMBED_URL_ENV = "HTEB_EMBED_URL"
API_KEY_ENV = "HTEB_API_KEY"

DEFAULT_MAX_OUTPUT_TOKENS = 2048
DEFAULT_BACKOFF_S = (0.5, 1.0, 2.0)

_FENCE_RE = re.compile(r"\A```[^\n]*\n(.*?)\n?```\Z", re.DOTALL)


@dataclass
class ChatRequest:
    """One generation call: an instruction applied to an input text."""

    model_id: str
    prompt: str
    input_text: str
    temperature: float = 0.0
    top_p: float = 1.0
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    seed: Optional[int] = None
    request_tag: str = ""

    def __post_init__(self):
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass
class EmbeddingRequest:
    model_id: str
    texts: list[str]
    instruction: Optional[str] = None


class Transport(Protocol):
    def chat(self, req: ChatRequest) -> str:
        ...

    def embed(self, req: EmbeddingRequest) -> list[list[float]]:
        ...


def strip_code_fence(text: str) -> str:
    """Strip surrounding whitespace and at most one enclosing code fence.

    Reasoning envelopes are intentionally left untouched; they are a
    detectable output error, not framing.
    """
    text = text.strip()
    match = _FENCE_RE.match(text)
    if match:
        return match.group(1).strip()
    return text


class HttpTransport:
    """Client for chat-completions and embeddings HTTP endpoints."""

    def __init__(
        self,
        chat_url: Optional[str] = None,
        embed_url: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout: float = 120.0,
        session: Optional[requests.Session] = None,
    ):
        self.chat_url = chat_url or os.environ.get(CHAT_URL_ENV)
        self.embed_url = embed_url or os.environ.get(EMBED_URL_ENV)
        self.api_key = api_key or os.environ.get(API_KEY_ENV)
        self.timeout = timeout
        self.session = session or requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, url: Optional[str], payload: dict) -> dict:
        if not url:
            raise TransportError("endpoint URL not configured")
        try:
            response = self.session.post(url, json=payload, headers=self._headers(), timeout=self.timeout)
            response.raise_for_status()
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError("response body is not JSON") from exc

    def chat(self, req: ChatRequest) -> str:
        payload = {
            "model": req.model_id,
            "messages": [{"role": "user", "content": f"{req.prompt}\n\n{req.input_text}"}],
            "temperature": req.temperature,
            "top_p": req.top_p,
            "max_tokens": req.max_output_tokens,
        }
        if req.seed is not None:
            payload["seed"] = req.seed
        body = self._post(self.chat_url, payload)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed chat response: {body!r}") from exc
        return "" if content is None else str(content)

    def embed(self, req: EmbeddingRequest) -> list[list[float]]:
        texts = req.texts
        if req.instruction:
            texts = [f"{req.instruction}{t}" for t in texts]
        body = self._post(self.embed_url, {"model": req.model_id, "input": texts})
        try:
            data = sorted(body["data"], key=lambda item: item["index"])
            return [list(map(float, item["embedding"])) for item in data]
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed embeddings response: {body!r}") from exc


@dataclass
class Gateway:
    """Retrying, caching front door to the model endpoints.

    Retries (on transport errors and on empty chat outputs) are bounded
    by max_attempts with the configured backoff; the final chat output,
    even if still empty, is persisted to the transformation cache.
    """

    transport: Transport
    cache: Optional[TransformationCache] = None
    max_attempts: int = 3
    backoff_s: Sequence[float] = DEFAULT_BACKOFF_S
    parallelism: int = 4
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def _chat_with_retries(self, req: ChatRequest) -> tuple[str, int]:
        last_error: Optional[Exception] = None
        output = ""
        for attempt in range(1, self.max_attempts + 1):
            try:
                output = strip_code_fence(self.transport.chat(req))
                last_error = None
                if output:
                    return output, attempt
            except TransportError as exc:
                last_error = exc
            if attempt < self.max_attempts:
                self.sleep(self.backoff_s[min(attempt - 1, len(self.backoff_s) - 1)])
        if last_error is not None:
            raise TransportError(f"chat failed after {self.max_attempts} attempts: {last_error}")
        return output, self.max_attempts

    def chat_complete(self, req: ChatRequest, transformation_id: Optional[str] = None) -> str:
        """Run one generation, serving repeats from the cache.

        Caching applies when the gateway has a cache, the request carries
        a request_tag (the content key) and a transformation scope is
        given.
        """
        if not req.input_text:
            raise ValueError("input_text must be non-empty before dispatch")
        if self.cache is not None and transformation_id and req.request_tag:
            return self.cache.get_or_put(
                req.model_id,
                transformation_id,
                req.request_tag,
                lambda: self._chat_with_retries(req),
            )
        return self._chat_with_retries(req)[0]

    def map_chat(
        self, requests_: Sequence[ChatRequest], transformation_id: Optional[str] = None
    ) -> list[str]:
        """Run many generations with bounded parallelism.

        Outputs are assembled by input index, so results are identical to
        a sequential run regardless of scheduling.
        """
        if self.parallelism <= 1 or len(requests_) <= 1:
            return [self.chat_complete(r, transformation_id) for r in requests_]
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            futures = [pool.submit(self.chat_complete, r, transformation_id) for r in requests_]
            return [f.result() for f in futures]

    def embed(self, req: EmbeddingRequest) -> list[list[float]]:
        """Embed a batch of texts, preserving input order.

        Vectors are returned exactly as the provider sent them; no
        normalisation is applied here.
        """
        if not req.texts:
            raise ValueError("texts must be a non-empty list")
        last_error: Optional[Exception] = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                vectors = self.transport.embed(req)
                last_error = None
                break
            except TransportError as exc:
                last_error = exc
                if attempt < self.max_attempts:
                    self.sleep(self.backoff_s[min(attempt - 1, len(self.backoff_s) - 1)])
        if last_error is not None:
            raise TransportError(f"embed failed after {self.max_attempts} attempts: {last_error}")
        if len(vectors) != len(req.texts):
            raise DimensionMismatch(
                f"provider returned {len(vectors)} vectors for {len(req.texts)} texts"
            )
        dims = {len(v) for v in vectors}
        if len(dims) > 1:
            raise DimensionMismatch(f"ragged embedding dimensions: {sorted(dims)}")
        return vectors
