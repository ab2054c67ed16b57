"""Human input channels for the Layer-2 gate."""

from __future__ import annotations

import queue


class ScriptedOperator:
    """Replays a fixed feedback script; returns None when it runs out."""

    def __init__(self, script: list[str], loop_last: bool = False) -> None:
        self.script = list(script)
        self.loop_last = loop_last
        self._pos = 0

    def read_input(self) -> str | None:
        if self._pos < len(self.script):
            line = self.script[self._pos]
            self._pos += 1
            return line
        if self.loop_last and self.script:
            return self.script[-1]
        return None


class AutoApprove:
    """Approves everything; useful for hands-off scripted sessions."""

    def read_input(self) -> str | None:
        return "approve"


class StdinChannel:
    def __init__(self, prompt: str = "feedback (approve / save[: prefs] / p:... / t:...)> ") -> None:
        self.prompt = prompt

    def read_input(self) -> str | None:
        try:
            return input(self.prompt)
        except EOFError:
            return None


class QueueChannel:
    """Feeds a session from another thread (the session service)."""

    def __init__(self, timeout: float | None = None) -> None:
        self._queue: queue.Queue[str | None] = queue.Queue()
        self.timeout = timeout
        self.waiting = False  # True while a reader blocks on input (gate open)
        self.gate_count = 0  # how many times the gate has opened

    def send(self, text: str | None) -> None:
        self._queue.put(text)

    def close(self) -> None:
        self._queue.put(None)

    def read_input(self) -> str | None:
        self.gate_count += 1
        self.waiting = True
        try:
            return self._queue.get(timeout=self.timeout)
        except queue.Empty:
            return None
        finally:
            self.waiting = False
