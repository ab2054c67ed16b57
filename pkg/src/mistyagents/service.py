"""HTTP front door: session resources plus the robot wire protocol.

One process hosts one simulated robot and any number of sessions. Sessions
run in worker threads and block on a queue channel at the human gate; the
console (or curl) feeds them through `POST /sessions/{id}/input` and
observes them through the transcript, plan, and JSON-lines stream
endpoints.

Robot wire protocol:
    POST /api/command  {"name": ..., "args": {...}}
                       -> {"ok": true} | {"ok": false, "error": {"code", "message"}}
    GET  /api/state    -> device snapshot
    POST /api/event    {"kind": ..., "payload": ...} -> {"seq": n}
    GET  /events       -> JSON-lines stream of {"type": "event"|"state", ...}

Session protocol:
    POST /sessions                  {"task": ...} -> {"session_id": ...}
    POST /sessions/{id}/input       {"text": ..., "kind": ...} -> {"ok": true}
    GET  /sessions/{id}/transcript  -> {"records": [...], "status": ...}
    GET  /sessions/{id}/plan        -> plan document
    GET  /sessions/{id}/stream      -> JSON-lines of {"type": "record"|"gate"|"status", ...}
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .agents import AgentBackends, Transcript
from .channels import QueueChannel
from .memory import MemoryStore
from .orchestrator import (
    SessionConfig,
    SessionDeps,
    SessionResult,
    TaskRequest,
    run_session,
)
from .registry import ApiRegistry, load_bundled_registry
from .sim import LocalRobotClient, RobotSim, SimError

_POLL_S = 0.05


class CommandBody(BaseModel):
    name: str
    args: dict = {}


class EventBody(BaseModel):
    kind: str
    payload: str


class SessionBody(BaseModel):
    task: str


class InputBody(BaseModel):
    text: str
    kind: str = ""


@dataclass
class BackendBundle:
    """Everything a session needs besides the robot and the channel."""

    planner: object
    agents: AgentBackends
    tools: object
    memory_store: MemoryStore | None = None


@dataclass
class SessionRun:
    id: str
    task: str
    channel: QueueChannel
    transcript: Transcript
    thread: threading.Thread | None = None
    result: SessionResult | None = None
    listeners: list[queue.Queue] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def status(self) -> str:
        if self.result is None:
            return "running"
        return self.result.status

    def add_listener(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            # Replay what already happened, then follow live.
            for rec in self.transcript.records:
                q.put({"type": "record", "record": rec.to_record()})
            self.listeners.append(q)
        return q

    def push(self, item: dict) -> None:
        with self._lock:
            for q in self.listeners:
                q.put(item)


def create_app(
    registry: ApiRegistry | None = None,
    backends_factory=None,
    config: SessionConfig | None = None,
    sim: RobotSim | None = None,
) -> FastAPI:
    """backends_factory() -> BackendBundle, called once per session."""
    registry = registry or load_bundled_registry()
    sim = sim or RobotSim(registry)
    config = config or SessionConfig()
    app = FastAPI(title="mistyagents")
    sessions: dict[str, SessionRun] = {}
    counter = {"n": 0}
    lock = threading.Lock()

    # -- robot wire protocol --

    @app.post("/api/command")
    def api_command(body: CommandBody):
        result = sim.apply_command(body.name, body.args)
        if result.ok:
            return {"ok": True}
        code, _, message = result.error.partition(": ")
        return {"ok": False, "error": {"code": code, "message": message}}

    @app.get("/api/state")
    def api_state():
        return sim.snapshot()

    @app.post("/api/event")
    def api_event(body: EventBody):
        try:
            seq = sim.inject_event(body.kind, body.payload)
        except SimError as exc:
            raise HTTPException(status_code=400, detail={"code": exc.code, "message": exc.message})
        return {"seq": seq}

    @app.get("/events")
    def events_stream():
        sub = sim.subscribe()

        def generate():
            last_state = None
            try:
                while True:
                    for event in sub.pop_all():
                        yield json.dumps({"type": "event", "event": event}) + "\n"
                    state = sim.snapshot()
                    if state != last_state:
                        last_state = state
                        yield json.dumps({"type": "state", "state": state}) + "\n"
                    time.sleep(_POLL_S)
            finally:
                sim.unsubscribe(sub)

        return StreamingResponse(generate(), media_type="application/jsonl")

    # -- sessions --

    if backends_factory is None:
        def backends_factory():  # noqa: F811 - default: everything scripted-empty
            raise HTTPException(status_code=503, detail="no session backends configured")

    @app.post("/sessions")
    def create_session(body: SessionBody):
        bundle = backends_factory()
        with lock:
            counter["n"] += 1
            sid = f"s{counter['n']:04d}"
        transcript = Transcript()
        channel = QueueChannel()
        run = SessionRun(id=sid, task=body.task, channel=channel, transcript=transcript)
        transcript.add_listener(
            lambda rec: run.push({"type": "record", "record": rec.to_record()})
        )
        deps = SessionDeps(
            registry=registry,
            planner=bundle.planner,
            agent_backends=bundle.agents,
            tools=bundle.tools,
            robot=LocalRobotClient(sim),
            channel=channel,
            memory_store=bundle.memory_store,
        )

        def worker():
            try:
                run.result = run_session(TaskRequest(body.task), config, deps, transcript)
            except Exception as exc:  # defensive: a crash must not hang clients
                run.result = SessionResult("Fail", f"internal error: {exc}", transcript, None, {}, None)
            run.push({"type": "status", "status": run.status})

        run.thread = threading.Thread(target=worker, daemon=True)
        with lock:
            sessions[sid] = run
        run.thread.start()
        return {"session_id": sid}

    def _get(sid: str) -> SessionRun:
        run = sessions.get(sid)
        if run is None:
            raise HTTPException(status_code=404, detail="no such session")
        return run

    @app.post("/sessions/{sid}/input")
    def session_input(sid: str, body: InputBody):
        run = _get(sid)
        if run.result is not None:
            raise HTTPException(status_code=409, detail="session already finished")
        text = body.text
        # An explicit kind adds the matching prefix unless one is present.
        if body.kind == "preference" and not text.startswith(("p:", "p!:")):
            text = f"p: {text}"
        elif body.kind == "technical" and not text.startswith(("t:", "t!:")):
            text = f"t: {text}"
        run.channel.send(text)
        return {"ok": True}

    @app.get("/sessions/{sid}/transcript")
    def session_transcript(sid: str):
        run = _get(sid)
        return {
            "session_id": sid,
            "task": run.task,
            "status": run.status,
            "records": [r.to_record() for r in run.transcript.records],
        }

    @app.get("/sessions/{sid}/plan")
    def session_plan(sid: str):
        run = _get(sid)
        if run.result is not None and run.result.plan is not None:
            return run.result.plan.to_document()
        for rec in reversed(run.transcript.records):
            if rec.actor == "system" and rec.content.startswith("plan: "):
                return json.loads(rec.content[len("plan: "):])
        raise HTTPException(status_code=404, detail="no plan yet")

    @app.get("/sessions/{sid}/stream")
    def session_stream(sid: str):
        run = _get(sid)
        q = run.add_listener()

        def generate():
            gate = None  # (open, gate_count) last reported
            while True:
                now = (run.channel.waiting, run.channel.gate_count)
                if now != gate:
                    # A count bump while already "open" means the gate closed
                    # and reopened between polls; report both edges.
                    if gate is not None and gate[0] and now[0]:
                        yield json.dumps({"type": "gate", "open": False}) + "\n"
                    gate = now
                    yield json.dumps({"type": "gate", "open": gate[0]}) + "\n"
                try:
                    item = q.get(timeout=_POLL_S)
                except queue.Empty:
                    if run.result is not None and q.empty():
                        yield json.dumps({"type": "status", "status": run.status}) + "\n"
                        return
                    continue
                yield json.dumps(item) + "\n"

        return StreamingResponse(generate(), media_type="application/jsonl")

    return app
