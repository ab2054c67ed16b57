"""Deterministic simulated robot: device state machine plus event stream.

All commands are serialized under one lock and validated against the API
registry; out-of-range arguments are rejected, never clamped, so the
repair loop always sees an explicit error. Time is a logical clock
advanced by declared durations.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

from .registry import ApiRegistry, load_bundled_registry
from .rsc.interpreter import CommandResult

TOUCH_SENSORS = ("HeadFront", "HeadBack", "HeadLeft", "HeadRight", "Chin", "Scruff")

EXPRESSIONS = (
    "joy",
    "sadness",
    "anger",
    "surprise",
    "fear",
    "disgust",
    "contentment",
    "love",
    "sleep",
    "neutral",
    "confusion",
    "admiration",
)

_DEFAULTS = {
    "head": {"pitch": 0, "roll": 0, "yaw": 0},
    "arms": {"left": 45, "right": 45},
    "led": [255, 255, 255],
    "expression": "neutral",
    "speech_rate": 1.0,
}


class SimError(ValueError):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class EventSubscriber:
    """Per-subscriber FIFO; safe for one producer and one consumer."""

    _queue: deque = field(default_factory=deque)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def push(self, event: dict) -> None:
        with self._lock:
            self._queue.append(event)

    def pop_all(self) -> list[dict]:
        with self._lock:
            out = list(self._queue)
            self._queue.clear()
        return out


class RobotSim:
    def __init__(self, registry: ApiRegistry | None = None) -> None:
        self.registry = registry or load_bundled_registry()
        self._lock = threading.RLock()
        self._subscribers: list[EventSubscriber] = []
        self._seq = 0
        # Test fixtures for perception, settable per scenario.
        self.camera_color = "red"
        self.photo_caption = "a photo"
        self._init_state()

    def _init_state(self) -> None:
        self.head = dict(_DEFAULTS["head"])
        self.arms = dict(_DEFAULTS["arms"])
        self.led = list(_DEFAULTS["led"])
        self.expression = _DEFAULTS["expression"]
        self.speech_rate = _DEFAULTS["speech_rate"]
        self.speech_log: list[str] = []
        self.audio_log: list[str] = []
        self.display_log: list[str] = []
        self.recording = {"video": False, "photo_count": 0}
        self.motion_log: list[dict] = []
        self.pose_time = 0

    def reset(self) -> None:
        """Back to documented defaults; the event seq counter keeps running."""
        with self._lock:
            self._init_state()

    # -- commands --

    def apply_command(self, name: str, args: dict) -> CommandResult:
        with self._lock:
            try:
                value = self._apply(name, args)
            except SimError as exc:
                return CommandResult(ok=False, error=f"{exc.code}: {exc.message}", t=self.pose_time)
            return CommandResult(ok=True, value=value, t=self.pose_time)

    def _apply(self, name: str, args: dict):
        api = self.registry.get(name)
        if api is None or api.is_syntax_form or api.event_kind:
            raise SimError("unknown-command", f"no such command {name!r}")
        self._check_args(name, args)
        handler = getattr(self, f"_cmd_{name}", None)
        if handler is None:
            raise SimError("unknown-command", f"command {name!r} is not executable on the device")
        return handler(args)

    def _check_args(self, name: str, args: dict) -> None:
        api = self.registry.get(name)
        for p in api.params:
            if p.name not in args:
                if p.required:
                    raise SimError("range-violation", f"{name}: missing argument {p.name!r}")
                continue
            v = args[p.name]
            if p.kind in ("int", "duration-ms") and not isinstance(v, int):
                raise SimError("range-violation", f"{name}: {p.name} must be an int")
            if p.kind == "float" and not isinstance(v, (int, float)):
                raise SimError("range-violation", f"{name}: {p.name} must be numeric")
            if p.range is not None and isinstance(v, (int, float)):
                lo, hi = p.range
                if not (lo <= v <= hi):
                    raise SimError("range-violation", f"{name}: {v} ∉ [{lo},{hi}]")
            if p.enum_values is not None and v not in p.enum_values:
                raise SimError(
                    "range-violation",
                    f"{name}: {v!r} is not one of {{{', '.join(p.enum_values)}}}",
                )

    def _cmd_change_led(self, a):
        self.led = [a["red"], a["green"], a["blue"]]

    def _cmd_move_head(self, a):
        self.head = {"pitch": a["pitch"], "roll": a["roll"], "yaw": a["yaw"]}
        self.motion_log.append({"motion": "move_head", **a})
        self.pose_time += a["duration_ms"]

    def _cmd_move_arms(self, a):
        self.arms = {"left": a["left_deg"], "right": a["right_deg"]}
        self.motion_log.append({"motion": "move_arms", **a})
        self.pose_time += a["duration_ms"]

    def _cmd_display_expression(self, a):
        self.expression = a["name"]
        self.display_log.append(a["name"])

    def _cmd_speak(self, a):
        self.speech_log.append(a["text"])

    def _cmd_set_speech_rate(self, a):
        self.speech_rate = float(a["rate"])

    def _cmd_play_audio(self, a):
        self.audio_log.append(a["clip"])

    def _cmd_drive_time(self, a):
        self.motion_log.append({"motion": "drive_time", **a})
        self.pose_time += a["duration_ms"]

    def _cmd_wait(self, a):
        self.pose_time += a["duration_ms"]

    def _cmd_take_photo(self, a):
        self.recording["photo_count"] += 1
        return f"photo-{self.recording['photo_count']}"

    def _cmd_start_video(self, a):
        if self.recording["video"]:
            raise SimError("invalid-state", "start_video: already recording")
        self.recording["video"] = True

    def _cmd_detect_color(self, a):
        return self.camera_color

    # -- state --

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "head": dict(self.head),
                "arms": dict(self.arms),
                "led": list(self.led),
                "expression": self.expression,
                "speech_rate": self.speech_rate,
                "speech_log": list(self.speech_log),
                "audio_log": list(self.audio_log),
                "display_log": list(self.display_log),
                "recording": dict(self.recording),
                "motion_log": [dict(m) for m in self.motion_log],
                "pose_time": self.pose_time,
            }

    # -- events --

    def subscribe(self) -> EventSubscriber:
        with self._lock:
            sub = EventSubscriber()
            self._subscribers.append(sub)
            return sub

    def unsubscribe(self, sub: EventSubscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def inject_event(self, kind: str, payload: str) -> int:
        """Deliver an external event to all subscribers; returns its seq."""
        if kind == "touch":
            if payload not in TOUCH_SENSORS:
                raise SimError("unknown-sensor", f"unknown touch sensor {payload!r}")
        elif kind == "heard":
            if not payload:
                raise SimError("unknown-sensor", "heard event requires a non-empty utterance")
        elif kind != "face_seen":
            raise SimError("unknown-sensor", f"unknown event kind {kind!r}")
        with self._lock:
            self._seq += 1
            event = {"kind": kind, "payload": payload, "seq": self._seq, "timestamp": self.pose_time}
            for sub in self._subscribers:
                sub.push(event)
            return self._seq


class LocalRobotClient:
    """In-process robot client bound to one simulator instance."""

    def __init__(self, sim: RobotSim) -> None:
        self.sim = sim
        self._sub = sim.subscribe()

    def command(self, name: str, args: dict) -> CommandResult:
        return self.sim.apply_command(name, args)

    def pop_events(self) -> list[dict]:
        return self._sub.pop_all()

    def clock_ms(self) -> int:
        return self.sim.pose_time

    def state(self) -> dict:
        return self.sim.snapshot()
