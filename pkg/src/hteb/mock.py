"""Deterministic offline transport for tests and end-to-end dry runs.

Chat responses come from a fixture table when one matches the request
tag, otherwise from a rule-based synthesiser keyed on the instruction so
repeated runs are byte-identical. Embeddings are hash-seeded unit-free
vectors: stable across processes and distinct per (model, text).
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .gateway import ChatRequest, EmbeddingRequest
from .langid import STOPWORDS

_TRANSLATE_RE = re.compile(r"^Translate the following text to ([A-Za-z ]+)\.")
_MARKER_RE = re.compile(r"^\([A-Za-z ]+\) ")


def _digest(*parts: str) -> int:
    joined = "\x1f".join(parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


def synthesize_chat(prompt: str, text: str) -> str:
    """Deterministic stand-in generation for each instruction family."""
    translate = _TRANSLATE_RE.match(prompt)
    if translate:
        language = translate.group(1)
        core = _MARKER_RE.sub("", text)
        filler = " ".join(sorted(STOPWORDS.get(language, frozenset()))[:6])
        return f"({language}) {core} {filler}".strip()
    if prompt.startswith("Rephrase"):
        return f"{text} That is the idea, put another way."
    if prompt.startswith("Change the style"):
        return f"{text} So it reads in a rather different register."
    if prompt.startswith("Expand"):
        stem = text.rstrip(".!? ")
        return f"{text} More precisely, {stem}, described here with additional context and detail."
    if prompt.startswith("Your task is to SUMMARIZE"):
        words = text.split()
        return " ".join(words[: max(1, len(words) // 2)])
    if prompt.startswith("You are rating"):
        return f"Considering fidelity and fluency, the rating is {3 + _digest(prompt, text) % 3}"
    return f"{text} (echo)"


def hash_embedding(model_id: str, text: str, dim: int, instruction: Optional[str] = None) -> list[float]:
    seed = _digest(model_id, instruction or "", text)
    rng = np.random.default_rng(seed)
    return rng.standard_normal(dim).tolist()


class MockTransport:
    """In-process Transport with canned fixtures and counters.

    fixtures maps a request tag (the cache content key) to a canned
    output; anything unmatched is synthesised. Thread-safe counters
    record how many chat/embed calls actually reached the transport,
    which lets tests assert cache hits.
    """

    def __init__(self, fixtures: Optional[dict[str, str]] = None, embed_dims: Optional[dict[str, int]] = None, default_dim: int = 32):
        self.fixtures = dict(fixtures or {})
        self.embed_dims = dict(embed_dims or {})
        self.default_dim = default_dim
        self.chat_calls = 0
        self.embed_calls = 0
        self.embedded_texts: list[str] = []
        self._lock = threading.Lock()

    @classmethod
    def from_dir(cls, path: Union[str, Path], **kwargs) -> "MockTransport":
        """Load canned chat fixtures from <dir>/chat.jsonl if present."""
        fixtures = {}
        chat_file = Path(path) / "chat.jsonl"
        if chat_file.exists():
            with chat_file.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        raw = json.loads(line)
                        fixtures[raw["key"]] = raw["output"]
        return cls(fixtures=fixtures, **kwargs)

    def chat(self, req: ChatRequest) -> str:
        with self._lock:
            self.chat_calls += 1
        if req.request_tag and req.request_tag in self.fixtures:
            return self.fixtures[req.request_tag]
        return synthesize_chat(req.prompt, req.input_text)

    def embed(self, req: EmbeddingRequest) -> list[list[float]]:
        with self._lock:
            self.embed_calls += 1
            self.embedded_texts.extend(req.texts)
        dim = self.embed_dims.get(req.model_id, self.default_dim)
        return [hash_embedding(req.model_id, t, dim, req.instruction) for t in req.texts]
