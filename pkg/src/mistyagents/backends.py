"""Text-generation and embedding backends.

A deterministic scripted backend drives every test; the HTTP client is
for live runs only. Embeddings come in three flavors: hashed bag-of-words
(deterministic default), fixture vectors (tests pin exact geometry), and
a live HTTP embedder.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field

import numpy as np

ENV_LLM_URL = "AM_LLM_URL"
ENV_LLM_MODEL = "AM_LLM_MODEL"
ENV_LLM_KEY = "AM_LLM_KEY"
ENV_EMBED_URL = "AM_EMBED_URL"
ENV_EMBED_MODEL = "AM_EMBED_MODEL"


class BackendError(Exception):
    """Transport failure, timeout, or empty response from a backend."""

    def __init__(self, kind: str, message: str) -> None:
        super().__init__(message)
        self.kind = kind  # "timeout" | "transport" | "empty-response" | "config"


@dataclass(frozen=True)
class ChatMessage:
    role: str  # "system" | "user" | "assistant"
    content: str

    def __post_init__(self) -> None:
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")


def user(content: str) -> ChatMessage:
    return ChatMessage("user", content)


def system(content: str) -> ChatMessage:
    return ChatMessage("system", content)


def assistant(content: str) -> ChatMessage:
    return ChatMessage("assistant", content)


@dataclass(frozen=True)
class Rule:
    match: str
    response: str
    regex: bool = False

    def matches(self, text: str) -> bool:
        if self.regex:
            return re.search(self.match, text) is not None
        return self.match in text


class ScriptedBackend:
    """Pure function of (rules, last user message); first matching rule wins."""

    def __init__(self, rules: list[Rule] | None = None, default_response: str = "") -> None:
        self.rules = list(rules or [])
        self.default_response = default_response
        self.call_log: list[list[ChatMessage]] = []
        self._log_lock = threading.Lock()

    @classmethod
    def from_document(cls, doc: dict) -> "ScriptedBackend":
        rules = [
            Rule(match=r["match"], response=r["response"], regex=bool(r.get("regex", False)))
            for r in doc.get("rules", [])
        ]
        return cls(rules=rules, default_response=doc.get("default", ""))

    @classmethod
    def from_file(cls, path: str) -> "ScriptedBackend":
        with open(path, encoding="utf-8") as f:
            return cls.from_document(json.load(f))

    def complete(self, messages: list[ChatMessage], params: dict | None = None) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        with self._log_lock:
            self.call_log.append(list(messages))
        last_user = next((m for m in reversed(messages) if m.role == "user"), None)
        if last_user is None:
            return self.default_response
        for rule in self.rules:
            if rule.matches(last_user.content):
                return rule.response
        return self.default_response


class HttpChatBackend:
    """Chat-completions client configured from environment variables."""

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        retries: int = 0,
    ) -> None:
        self.base_url = base_url or os.environ.get(ENV_LLM_URL)
        self.model = model or os.environ.get(ENV_LLM_MODEL)
        self.api_key = api_key or os.environ.get(ENV_LLM_KEY, "")
        self.timeout = timeout
        self.retries = retries
        if not self.base_url or not self.model:
            raise BackendError("config", f"{ENV_LLM_URL} and {ENV_LLM_MODEL} must be set")

    def complete(self, messages: list[ChatMessage], params: dict | None = None) -> str:
        import httpx

        params = params or {}
        body = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.get("temperature", 0.0),
        }
        if "max_tokens" in params:
            body["max_tokens"] = params["max_tokens"]
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = self.base_url.rstrip("/") + "/chat/completions"
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = httpx.post(url, json=body, headers=headers, timeout=self.timeout)
                resp.raise_for_status()
                text = resp.json()["choices"][0]["message"]["content"]
                if not text:
                    raise BackendError("empty-response", "backend returned empty text")
                return text
            except httpx.TimeoutException as exc:
                last_exc = BackendError("timeout", str(exc))
            except BackendError as exc:
                last_exc = exc
            except Exception as exc:
                last_exc = BackendError("transport", str(exc))
            if attempt < self.retries:
                time.sleep(0.5 * (attempt + 1))
        raise last_exc  # type: ignore[misc]


# --- Embedders --------------------------------------------------------------


class HashEmbedder:
    """Hash-bucket bag-of-words embedding, L2-normalized. Deterministic."""

    def __init__(self, dim: int = 64) -> None:
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("text must be non-empty")
        v = np.zeros(self.dim, dtype=np.float64)
        for token in re.findall(r"[a-z0-9]+", text.lower()):
            digest = hashlib.md5(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            v[bucket] += sign
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            v[0] = 1.0
            norm = 1.0
        return v / norm


class FixtureEmbedder:
    """Exact vectors for known texts; hash fallback for everything else."""

    def __init__(self, vectors: dict[str, list[float]], dim: int | None = None) -> None:
        if not vectors and dim is None:
            raise ValueError("need vectors or an explicit dim")
        self.dim = dim or len(next(iter(vectors.values())))
        self._vectors = {}
        for text, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise ValueError(f"vector for {text!r} has dim {arr.shape}, expected {self.dim}")
            self._vectors[text] = arr / np.linalg.norm(arr)
        self._fallback = HashEmbedder(self.dim)

    @classmethod
    def from_file(cls, path: str) -> "FixtureEmbedder":
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        return cls(doc["vectors"], dim=doc.get("dim"))

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("text must be non-empty")
        if text in self._vectors:
            return self._vectors[text].copy()
        return self._fallback.embed(text)


class HttpEmbedder:
    """Live embedding client configured from environment variables."""

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
    ) -> None:
        self.base_url = base_url or os.environ.get(ENV_EMBED_URL)
        self.model = model or os.environ.get(ENV_EMBED_MODEL)
        self.api_key = api_key or os.environ.get(ENV_LLM_KEY, "")
        self.timeout = timeout
        if not self.base_url or not self.model:
            raise BackendError("config", f"{ENV_EMBED_URL} and {ENV_EMBED_MODEL} must be set")
        self.dim: int | None = None

    def embed(self, text: str) -> np.ndarray:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = self.base_url.rstrip("/") + "/embeddings"
        try:
            resp = httpx.post(
                url,
                json={"model": self.model, "input": text},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            vec = np.asarray(resp.json()["data"][0]["embedding"], dtype=np.float64)
        except Exception as exc:
            raise BackendError("transport", str(exc)) from exc
        self.dim = len(vec)
        return vec / np.linalg.norm(vec)


# --- Tool backends (ask_llm / ask_vlm / transcribe) -------------------------


@dataclass
class ScriptedTools:
    """Routes interpreter tool calls through a scripted chat backend."""

    backend: ScriptedBackend = field(default_factory=ScriptedBackend)

    def ask_llm(self, prompt: str) -> str:
        return self.backend.complete([user(prompt)])

    def ask_vlm(self, image: str, prompt: str) -> str:
        return self.backend.complete([user(f"[image {image}] {prompt}")])

    def transcribe(self, audio: str) -> str:
        return self.backend.complete([user(f"[transcribe {audio}]")])


@dataclass
class LiveTools:
    backend: HttpChatBackend

    def ask_llm(self, prompt: str) -> str:
        return self.backend.complete([user(prompt)])

    def ask_vlm(self, image: str, prompt: str) -> str:
        return self.backend.complete([user(f"[image {image}] {prompt}")])

    def transcribe(self, audio: str) -> str:
        return self.backend.complete([user(f"[transcribe audio {audio}]")])


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
