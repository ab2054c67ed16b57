"""Retrieval-augmented memory of user-approved solutions.

Keys are 5-10 word summaries of task descriptions; values are verified
code plus user preferences. Retrieval is an exact brute-force cosine
scan — stores are small and correctness beats speed here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backends import ChatMessage, system, user
from .registry import ApiRegistry, load_bundled_registry
from .rsc import parse, validate, render_diagnostics

_STOPWORDS = frozenset(
    "a an the to of and or for with in on at by is are be it this that".split()
)

DEFAULT_RETRIEVAL_GATE = 0.35

_SUMMARY_SYSTEM = (
    "You compress robot task descriptions into short retrieval keys. "
    "Reply with a 5 to 10 word summary and nothing else."
)


class MemoryError_(ValueError):
    pass


@dataclass(frozen=True)
class MemoryEntry:
    id: str
    key_summary: str
    embedding: tuple[float, ...]
    code: str
    preferences: str
    task_description: str
    created_at: int

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "key_summary": self.key_summary,
            "embedding": list(self.embedding),
            "code": self.code,
            "preferences": self.preferences,
            "task_description": self.task_description,
            "created_at": self.created_at,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "MemoryEntry":
        return cls(
            id=rec["id"],
            key_summary=rec["key_summary"],
            embedding=tuple(rec["embedding"]),
            code=rec["code"],
            preferences=rec["preferences"],
            task_description=rec["task_description"],
            created_at=rec["created_at"],
        )


def summarize_key(task_description: str, backend) -> str:
    """5-10 word key; out-of-bounds backend output is repaired, not rejected."""
    if not task_description.strip():
        raise ValueError("task description must be non-empty")
    raw = backend.complete(
        [system(_SUMMARY_SYSTEM), user(f"Summarize this task: {task_description}")]
    ).strip()
    words = raw.split()
    if len(words) > 10:
        words = words[:10]
    if len(words) < 5:
        seen = {w.lower() for w in words}
        for w in task_description.split():
            lw = w.lower().strip(".,!?")
            if lw in _STOPWORDS or lw in seen or not lw:
                continue
            words.append(lw)
            seen.add(lw)
            if len(words) >= 5:
                break
        # Degenerate descriptions: repeat the last word to reach the floor.
        while len(words) < 5 and words:
            words.append(words[-1])
    return " ".join(words)


class MemoryStore:
    def __init__(
        self,
        embedder,
        registry: ApiRegistry | None = None,
        path: str | Path | None = None,
        gate: float = DEFAULT_RETRIEVAL_GATE,
    ) -> None:
        self.embedder = embedder
        self.registry = registry or load_bundled_registry()
        self.path = Path(path) if path else None
        self.gate = gate
        self.entries: list[MemoryEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def store(
        self,
        task_description: str,
        code: str,
        preferences: str = "",
        chat_backend=None,
        key_summary: str | None = None,
    ) -> MemoryEntry:
        """Persist a user-verified solution. Refuses code that does not validate."""
        result = parse(code)
        if not result.ok:
            raise MemoryError_(
                "refusing to store unparseable code:\n" + render_diagnostics(result.diagnostics)
            )
        diags = validate(result.program, self.registry)
        if diags:
            raise MemoryError_(
                "refusing to store invalid code:\n" + render_diagnostics(diags)
            )
        if key_summary is None:
            if chat_backend is None:
                raise ValueError("need a chat backend or an explicit key_summary")
            key_summary = summarize_key(task_description, chat_backend)
        n = len(key_summary.split())
        if not (5 <= n <= 10):
            raise MemoryError_(f"key summary must be 5-10 words, got {n}")
        embedding = self.embedder.embed(key_summary)
        entry = MemoryEntry(
            id=f"m{len(self.entries) + 1:04d}",
            key_summary=key_summary,
            embedding=tuple(float(x) for x in embedding),
            code=code,
            preferences=preferences,
            task_description=task_description,
            created_at=len(self.entries),
        )
        self.entries.append(entry)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry.to_record()) + "\n")
        return entry

    def retrieve(self, query: str, k: int = 1) -> list[tuple[MemoryEntry, float]]:
        """Top-k entries by cosine similarity; ties broken by earlier created_at."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.entries:
            return []
        qv = self.embedder.embed(query)
        scored = []
        for entry in self.entries:
            ev = np.asarray(entry.embedding)
            score = float(np.dot(qv, ev))
            scored.append((entry, score))
        scored.sort(key=lambda pair: (-pair[1], pair[0].created_at))
        return scored[:k]

    def retrieve_gated(self, query: str, k: int = 1) -> list[tuple[MemoryEntry, float]]:
        """Retrieval for prompt injection: empty unless top-1 clears the gate."""
        results = self.retrieve(query, k)
        if not results or results[0][1] < self.gate:
            return []
        return results

    def persist(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for entry in self.entries:
                f.write(json.dumps(entry.to_record()) + "\n")

    @classmethod
    def load(
        cls,
        path: str | Path,
        embedder,
        registry: ApiRegistry | None = None,
        gate: float = DEFAULT_RETRIEVAL_GATE,
    ) -> "MemoryStore":
        store = cls(embedder, registry=registry, path=path, gate=gate)
        p = Path(path)
        if p.exists():
            with open(p, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        store.entries.append(MemoryEntry.from_record(json.loads(line)))
        return store
