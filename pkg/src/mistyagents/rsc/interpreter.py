"""Deterministic interpreter executing programs against a robot client.

Event handlers are dispatched cooperatively: between top-level statements,
at wait boundaries, and once more when the program ends. With scripted
backends and the simulator's logical clock, execution is fully
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from ..registry import ApiRegistry
from .diagnostics import SourceSpan
from . import nodes as n

# APIs handled by the interpreter itself rather than sent to the robot.
_LOCAL_APIS = frozenset({"log", "now"})
_BACKEND_APIS = frozenset({"ask_llm", "ask_vlm", "transcribe"})


@dataclass(frozen=True)
class ExecutionLimits:
    max_steps: int = 10_000
    wall_clock_ms: int = 60_000


@dataclass(frozen=True)
class CommandResult:
    ok: bool
    value: object = None
    error: str = ""
    t: int = 0  # logical clock after the command


class RobotClient(Protocol):
    def command(self, name: str, args: dict) -> CommandResult: ...

    def pop_events(self) -> list[dict]: ...

    def clock_ms(self) -> int: ...

    def state(self) -> dict: ...


class ToolBackends(Protocol):
    def ask_llm(self, prompt: str) -> str: ...

    def ask_vlm(self, image: str, prompt: str) -> str: ...

    def transcribe(self, audio: str) -> str: ...


@dataclass(frozen=True)
class TraceStep:
    t: int
    command: str
    result: str


@dataclass
class ExecutionTrace:
    steps: list[TraceStep] = field(default_factory=list)
    final_state: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def commands(self, name: str | None = None) -> list[TraceStep]:
        if name is None:
            return list(self.steps)
        prefix = name + "("
        return [s for s in self.steps if s.command.startswith(prefix)]


class RscRuntimeError(Exception):
    """Execution failure carrying the offending source span."""

    def __init__(self, span: SourceSpan, message: str) -> None:
        super().__init__(message)
        self.span = span
        self.message = message

    def render(self) -> str:
        return f"error[E_RUNTIME] {self.span} {self.message}"


class _StopProgram(Exception):
    pass


@dataclass
class _Handler:
    event_kind: str
    filter_value: str | None
    binding: str | None
    block: tuple[n.Statement, ...]


class Interpreter:
    def __init__(
        self,
        registry: ApiRegistry,
        robot: RobotClient,
        backends: ToolBackends,
        limits: ExecutionLimits | None = None,
    ) -> None:
        self.registry = registry
        self.robot = robot
        self.backends = backends
        self.limits = limits or ExecutionLimits()
        self.trace = ExecutionTrace()
        self._handlers: list[_Handler] = []
        self._pending: list[dict] = []
        self._steps = 0

    # -- public entry points --

    def run(self, program: n.Program) -> ExecutionTrace:
        env: list[dict] = [{}]
        try:
            for stmt in program.items:
                self._exec(stmt, env)
                self._dispatch_events()
            self._dispatch_events()
        except _StopProgram:
            pass
        self.trace.final_state = self.robot.state()
        return self.trace

    def pump_events(self) -> ExecutionTrace:
        """Deliver any newly injected events to registered handlers."""
        try:
            self._dispatch_events()
        except _StopProgram:
            pass
        self.trace.final_state = self.robot.state()
        return self.trace

    # -- statements --

    def _exec(self, stmt: n.Statement, env: list[dict]) -> None:
        self._tick(stmt.span)
        if isinstance(stmt, n.Call):
            self._exec_call(stmt.name, stmt.args, stmt.span, env)
        elif isinstance(stmt, n.Wait):
            duration = self._eval(stmt.duration, env)
            self._send("wait", {"duration_ms": duration}, stmt.span)
            self._dispatch_events()
        elif isinstance(stmt, n.Let):
            env[-1][stmt.name] = self._eval(stmt.expr, env)
        elif isinstance(stmt, n.If):
            cond = self._eval(stmt.cond, env)
            block = stmt.then_block if self._truthy(cond) else stmt.else_block
            self._exec_block(block, env)
        elif isinstance(stmt, n.Repeat):
            count = self._eval(stmt.count, env)
            if not isinstance(count, int) or count < 0:
                raise RscRuntimeError(stmt.count.span, f"repeat count must be a non-negative int, got {count!r}")
            for _ in range(count):
                self._exec_block(stmt.block, env)
        elif isinstance(stmt, n.Handler):
            self._register_handler(stmt, env)
        elif isinstance(stmt, n.Stop):
            raise _StopProgram

    def _exec_block(self, block: tuple[n.Statement, ...], env: list[dict]) -> None:
        env.append({})
        try:
            for stmt in block:
                self._exec(stmt, env)
        finally:
            env.pop()

    def _register_handler(self, stmt: n.Handler, env: list[dict]) -> None:
        api = self.registry.get(stmt.event_api)
        if api is None or not api.event_kind:
            raise RscRuntimeError(stmt.span, f"{stmt.event_api!r} is not an event API")
        filter_value = None
        if stmt.args:
            filter_value = str(self._eval(stmt.args[0].value, env))
        self._handlers.append(
            _Handler(api.event_kind, filter_value, stmt.binding, stmt.block)
        )
        self.trace.steps.append(
            TraceStep(self.robot.clock_ms(), f"subscribe({stmt.event_api})", "ok")
        )

    def _exec_call(self, name: str, args: tuple[n.Arg, ...], span, env: list[dict]) -> None:
        self._call_value(name, args, span, env)

    # -- expressions --

    def _eval(self, expr: n.Expr, env: list[dict]):
        if isinstance(expr, (n.IntLit, n.FloatLit, n.StringLit)):
            return expr.value
        if isinstance(expr, n.VarRef):
            for scope in reversed(env):
                if expr.name in scope:
                    return scope[expr.name]
            raise RscRuntimeError(expr.span, f"undefined variable {expr.name!r}")
        if isinstance(expr, n.Compare):
            left = self._eval(expr.left, env)
            right = self._eval(expr.right, env)
            return (left == right) if expr.op == "==" else (left != right)
        if isinstance(expr, n.CallExpr):
            self._tick(expr.span)
            return self._call_value(expr.name, expr.args, expr.span, env)
        raise RscRuntimeError(expr.span, f"cannot evaluate {type(expr).__name__}")

    def _call_value(self, name: str, args: tuple[n.Arg, ...], span, env: list[dict]):
        argv = self._bind_args(name, args, span, env)
        if name == "log":
            text = str(argv.get("text", ""))
            self.trace.outputs.append(text)
            self.trace.steps.append(TraceStep(self.robot.clock_ms(), f"log({text!r})", "ok"))
            return None
        if name == "now":
            t = self.robot.clock_ms()
            self.trace.steps.append(TraceStep(t, "now()", str(t)))
            return str(t)
        if name == "wait":
            self._send("wait", argv, span)
            self._dispatch_events()
            return None
        if name in _BACKEND_APIS:
            return self._backend_call(name, argv, span)
        if name == "capture_speech":
            return self._capture_speech(int(argv["timeout_ms"]), span)
        return self._send(name, argv, span)

    def _backend_call(self, name: str, argv: dict, span) -> str:
        try:
            if name == "ask_llm":
                result = self.backends.ask_llm(str(argv["prompt"]))
            elif name == "ask_vlm":
                result = self.backends.ask_vlm(str(argv["image"]), str(argv["prompt"]))
            else:
                result = self.backends.transcribe(str(argv["audio"]))
        except Exception as exc:
            raise RscRuntimeError(span, f"backend failure in {name}: {exc}") from exc
        self.trace.steps.append(
            TraceStep(self.robot.clock_ms(), _render_cmd(name, argv), str(result))
        )
        return result

    def _capture_speech(self, timeout_ms: int, span) -> str:
        heard = self._take_heard_event()
        if heard is None:
            self._send("wait", {"duration_ms": timeout_ms}, span)
            heard = self._take_heard_event()
        payload = heard["payload"] if heard is not None else ""
        self.trace.steps.append(
            TraceStep(
                self.robot.clock_ms(),
                _render_cmd("capture_speech", {"timeout_ms": timeout_ms}),
                str(payload),
            )
        )
        return str(payload)

    def _take_heard_event(self) -> dict | None:
        self._pending.extend(self.robot.pop_events())
        for i, ev in enumerate(self._pending):
            if ev["kind"] == "heard":
                return self._pending.pop(i)
        return None

    # -- dispatch and plumbing --

    def _send(self, name: str, argv: dict, span) -> object:
        self._recheck_ranges(name, argv, span)
        result = self.robot.command(name, argv)
        self.trace.steps.append(
            TraceStep(
                result.t,
                _render_cmd(name, argv),
                "ok" if result.ok else f"error: {result.error}",
            )
        )
        if not result.ok:
            raise RscRuntimeError(span, f"{name}: {result.error}")
        if result.t > self.limits.wall_clock_ms:
            raise RscRuntimeError(span, f"wall clock limit exceeded ({result.t} ms)")
        return result.value

    def _recheck_ranges(self, name: str, argv: dict, span) -> None:
        api = self.registry.get(name)
        if api is None:
            raise RscRuntimeError(span, f"unknown API {name!r}")
        for p in api.params:
            if p.name not in argv:
                continue
            v = argv[p.name]
            if p.range is not None and isinstance(v, (int, float)):
                lo, hi = p.range
                if not (lo <= v <= hi):
                    raise RscRuntimeError(span, f"{name}: {v} ∉ [{lo},{hi}]")
            if p.enum_values is not None and isinstance(v, str) and v not in p.enum_values:
                raise RscRuntimeError(
                    span, f"{name}: {v!r} is not one of {{{', '.join(p.enum_values)}}}"
                )

    def _bind_args(self, name: str, args: tuple[n.Arg, ...], span, env: list[dict]) -> dict:
        api = self.registry.get(name)
        if api is None:
            raise RscRuntimeError(span, f"unknown API {name!r}")
        argv: dict = {}
        for i, arg in enumerate(args):
            value = self._eval(arg.value, env)
            if arg.name is not None:
                key = arg.name
            elif i < len(api.params):
                key = api.params[i].name
            else:
                raise RscRuntimeError(span, f"{name}: too many arguments")
            argv[key] = value
        for p in api.params:
            if p.name not in argv and p.default is not None:
                argv[p.name] = p.default
        return argv

    def _dispatch_events(self) -> None:
        self._pending.extend(self.robot.pop_events())
        if not self._handlers:
            return
        remaining: list[dict] = []
        for ev in self._pending:
            matched = False
            for h in self._handlers:
                if h.event_kind != ev["kind"]:
                    continue
                if h.event_kind == "touch" and h.filter_value != ev["payload"]:
                    continue
                if (
                    h.event_kind == "heard"
                    and h.filter_value is not None
                    and h.filter_value.lower() not in str(ev["payload"]).lower()
                ):
                    continue
                matched = True
                env: list[dict] = [{}]
                if h.binding:
                    env[0][h.binding] = ev["payload"]
                self._exec_block(h.block, env)
            if not matched:
                remaining.append(ev)
        self._pending = remaining

    def _tick(self, span) -> None:
        self._steps += 1
        if self._steps > self.limits.max_steps:
            raise RscRuntimeError(span, f"step limit exceeded ({self.limits.max_steps} steps)")

    @staticmethod
    def _truthy(value) -> bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, int):
            return value != 0
        return bool(value)


def execute(
    program: n.Program,
    registry: ApiRegistry,
    robot: RobotClient,
    backends: ToolBackends,
    limits: ExecutionLimits | None = None,
) -> ExecutionTrace:
    """Run a validated program to completion; raises RscRuntimeError on failure."""
    return Interpreter(registry, robot, backends, limits).run(program)


def _render_cmd(name: str, argv: dict) -> str:
    inner = ", ".join(f"{k}={v!r}" for k, v in argv.items())
    return f"{name}({inner})"
