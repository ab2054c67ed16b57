"""Two-layer drafting shared by all worker agents.

Layer 1: Designer and Critic exchange rounds until the Critic approves.
Layer 2: the UserProxy compiles and executes the approved draft, routes
execution errors straight back to the Designer, and gates success on
explicit human approval. Every event lands in the session transcript.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable

from .backends import ChatMessage, assistant, system, user
from .memory import MemoryStore
from .registry import ApiRegistry
from .rsc import (
    ExecutionLimits,
    ExecutionTrace,
    RscRuntimeError,
    execute,
    parse,
    render_diagnostics,
    validate,
)

WORKER_ROLES = ("action", "touch", "audiovisual")
AGENT_ROLES = ("planner",) + WORKER_ROLES

CODE_FENCE_RE = re.compile(r"```rsc\n(.*?)```", re.DOTALL)


class ProtocolError(Exception):
    """Malformed agent output (missing fenced block or verdict marker)."""


class RoundExhaustion(Exception):
    """Designer/Critic loop hit its round cap without approval."""


class SessionAbort(Exception):
    """The human input channel closed mid-session."""


@dataclass
class LoopConfig:
    max_critic_rounds: int = 5
    max_execute_repairs: int = 3
    max_user_rounds: int = 20
    critic_enabled: bool = True

    def __post_init__(self) -> None:
        for name in ("max_critic_rounds", "max_execute_repairs", "max_user_rounds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class AgentContext:
    role: str
    system_prompt: str
    subtask: str
    upstream_code: list[str] = field(default_factory=list)
    retrieved_examples: list[tuple[str, str]] = field(default_factory=list)
    history: list[ChatMessage] = field(default_factory=list)


@dataclass(frozen=True)
class CritiqueVerdict:
    approved: bool
    reasons: str


@dataclass
class InteractionRecord:
    seq: int
    actor: str  # user | designer | critic | userproxy | system
    kind: str  # preference | technical | approval | error-report | info
    content: str
    misunderstood_flag: bool = False

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "actor": self.actor,
            "kind": self.kind,
            "content": self.content,
            "misunderstood_flag": self.misunderstood_flag,
        }


class Transcript:
    def __init__(self) -> None:
        self.records: list[InteractionRecord] = []
        self._listeners: list[Callable[[InteractionRecord], None]] = []

    def record(
        self, actor: str, kind: str, content: str, misunderstood: bool = False
    ) -> InteractionRecord:
        rec = InteractionRecord(len(self.records) + 1, actor, kind, content, misunderstood)
        self.records.append(rec)
        for listener in self._listeners:
            listener(rec)
        return rec

    def add_listener(self, fn: Callable[[InteractionRecord], None]) -> None:
        self._listeners.append(fn)

    def user_interactions(self) -> list[InteractionRecord]:
        """Substantive user records: preferences and technical suggestions."""
        return [
            r for r in self.records if r.actor == "user" and r.kind in ("preference", "technical")
        ]

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(r.to_record()) for r in self.records) + "\n"


@dataclass
class AgentBackends:
    """Chat backends by role; scripted fixtures use distinct rule tables."""

    designer: object
    critic: object


@dataclass(frozen=True)
class FeedbackEvent:
    action: str  # "approve" | "revise" | "save"
    text: str = ""
    kind: str = "technical"  # for revise: "preference" | "technical"
    preferences: str = ""
    misunderstood: bool = False


@dataclass
class ExecutionOutcome:
    success: bool
    trace: ExecutionTrace | None = None
    diagnostics_text: str = ""
    program: object = None


class SessionBudget:
    """Counts substantive user interactions against the completion window."""

    def __init__(self, limit: int = 20) -> None:
        self.limit = limit
        self.count = 0

    def spend(self) -> None:
        self.count += 1

    @property
    def exhausted(self) -> bool:
        return self.count >= self.limit


# --- Layer 1 ----------------------------------------------------------------


def extract_code(reply: str) -> str:
    """The content of the single ```rsc fenced block, byte-for-byte."""
    blocks = CODE_FENCE_RE.findall(reply)
    if len(blocks) != 1:
        raise ProtocolError(
            f"expected exactly one fenced rsc code block, found {len(blocks)}"
        )
    return blocks[0]


def parse_verdict(message: str) -> CritiqueVerdict:
    lines = [ln for ln in message.strip().splitlines() if ln.strip()]
    if not lines:
        raise ProtocolError("empty critic message")
    final = lines[-1].strip()
    if final == "APPROVED":
        return CritiqueVerdict(approved=True, reasons="\n".join(lines[:-1]).strip())
    if final.startswith("REVISE:"):
        reasons = "\n".join(lines[:-1] + [final[len("REVISE:") :].strip()]).strip()
        return CritiqueVerdict(approved=False, reasons=reasons)
    raise ProtocolError(f"critic verdict missing APPROVED/REVISE marker: {final!r}")


def critic_review(code: str, subtask: str, backend, context_note: str = "") -> CritiqueVerdict:
    if not code.strip():
        raise ValueError("code must be non-empty")
    prompt = (
        f"Subtask: {subtask}\n\n"
        f"Candidate code:\n```rsc\n{code}```\n"
        + (f"\nLatest failure:\n{context_note}\n" if context_note else "")
        + "\nEvaluate correctness and feasibility. End your reply with a final line "
        "that is exactly APPROVED, or a final line starting with REVISE: and a reason."
    )
    reply = backend.complete(
        [system("You are a strict code reviewer for robot control scripts."), user(prompt)]
    )
    return parse_verdict(reply)


def build_first_prompt(ctx: AgentContext) -> str:
    parts = []
    # Retrieved examples come before the subtask description by contract.
    for key, code in ctx.retrieved_examples:
        parts.append(f"Example — {key}:\n```rsc\n{code}```")
    if ctx.upstream_code:
        upstream = "\n\n".join(f"```rsc\n{c}```" for c in ctx.upstream_code)
        parts.append(
            "Upstream verified code (must be embedded verbatim, unchanged, in your "
            "generated program):\n" + upstream
        )
    parts.append(f"Subtask: {ctx.subtask}")
    parts.append(
        "Reply with exactly one fenced code block tagged rsc containing the full program."
    )
    return "\n\n".join(parts)


def _designer_reply(ctx: AgentContext, backends: AgentBackends, transcript: Transcript | None) -> str:
    reply = backends.designer.complete([system(ctx.system_prompt)] + ctx.history)
    if not reply.strip():
        raise ProtocolError("designer returned an empty reply")
    ctx.history.append(assistant(reply))
    if transcript is not None:
        transcript.record("designer", "info", reply)
    return extract_code(reply)


def _designer_turn(ctx: AgentContext, backends: AgentBackends, transcript: Transcript | None) -> str:
    try:
        return _designer_reply(ctx, backends, transcript)
    except ProtocolError:
        # One reprompt, then give up.
        ctx.history.append(
            user("Protocol reminder: reply with exactly one fenced code block tagged rsc.")
        )
        return _designer_reply(ctx, backends, transcript)


def drafter_run(
    ctx: AgentContext,
    config: LoopConfig,
    backends: AgentBackends,
    memory_store: MemoryStore | None = None,
    transcript: Transcript | None = None,
    failure_note: str = "",
) -> str:
    """Run Layer 1 until the Critic approves; returns the approved code."""
    if not ctx.history:
        if memory_store is not None and not ctx.retrieved_examples:
            ctx.retrieved_examples = [
                (e.key_summary, e.code) for e, _ in memory_store.retrieve_gated(ctx.subtask)
            ]
        ctx.history.append(user(build_first_prompt(ctx)))
    for _ in range(config.max_critic_rounds):
        code = _designer_turn(ctx, backends, transcript)
        if not config.critic_enabled:
            return code
        verdict = critic_review(code, ctx.subtask, backends.critic, context_note=failure_note)
        failure_note = ""
        if transcript is not None:
            transcript.record(
                "critic",
                "info",
                "APPROVED" if verdict.approved else f"REVISE: {verdict.reasons}",
            )
        if verdict.approved:
            return code
        ctx.history.append(user(f"REVISE: {verdict.reasons}"))
    raise RoundExhaustion(
        f"critic did not approve within {config.max_critic_rounds} rounds"
    )


# --- Layer 2 ----------------------------------------------------------------


def userproxy_execute(
    code: str,
    registry: ApiRegistry,
    robot,
    tools,
    limits: ExecutionLimits | None = None,
) -> ExecutionOutcome:
    """Compile-and-run pipeline; failures come back as diagnostic text."""
    result = parse(code)
    if not result.ok:
        return ExecutionOutcome(False, diagnostics_text=render_diagnostics(result.diagnostics))
    diags = validate(result.program, registry)
    if diags:
        return ExecutionOutcome(
            False, diagnostics_text=render_diagnostics(diags), program=result.program
        )
    try:
        trace = execute(result.program, registry, robot, tools, limits)
    except RscRuntimeError as exc:
        return ExecutionOutcome(False, diagnostics_text=exc.render(), program=result.program)
    return ExecutionOutcome(True, trace=trace, program=result.program)


_FEEDBACK_RE = re.compile(r"^(p|t)(!)?:\s*(.*)$", re.DOTALL)


def parse_feedback(text: str) -> FeedbackEvent:
    """Map a raw operator line to a feedback event.

    `approve` closes the subtask; `save[: prefs]` approves and stores to
    memory; `p:`/`t:` prefix labels a revision as preference/technical
    (`p!:`/`t!:` additionally flags a misunderstanding); unprefixed text
    defaults to technical.
    """
    stripped = text.strip()
    if stripped == "approve":
        return FeedbackEvent(action="approve")
    if stripped == "save" or stripped.startswith("save:"):
        prefs = stripped[len("save:") :].strip() if stripped.startswith("save:") else ""
        return FeedbackEvent(action="save", preferences=prefs)
    m = _FEEDBACK_RE.match(stripped)
    if m:
        kind = "preference" if m.group(1) == "p" else "technical"
        return FeedbackEvent(
            action="revise", text=m.group(3), kind=kind, misunderstood=bool(m.group(2))
        )
    return FeedbackEvent(action="revise", text=stripped, kind="technical")


def human_gate(outcome: ExecutionOutcome, channel) -> FeedbackEvent:
    """Block on operator input after a successful execution."""
    line = channel.read_input()
    if line is None:
        raise SessionAbort("input channel closed")
    return parse_feedback(line)


@dataclass
class EpisodeResult:
    success: bool
    code: str = ""
    failure_reason: str = ""


def run_episode(
    ctx: AgentContext,
    config: LoopConfig,
    backends: AgentBackends,
    registry: ApiRegistry,
    robot,
    tools,
    channel,
    transcript: Transcript,
    budget: SessionBudget,
    memory_store: MemoryStore | None = None,
    limits: ExecutionLimits | None = None,
    compose_check=None,
) -> EpisodeResult:
    """One subtask end to end: Layer 1, execution, human gate."""
    failure_note = ""
    while True:
        # Layer 1 (fresh run or reactivation with appended feedback).
        try:
            code = drafter_run(
                ctx, config, backends, memory_store, transcript, failure_note=failure_note
            )
        except (ProtocolError, RoundExhaustion) as exc:
            return EpisodeResult(False, failure_reason=f"{type(exc).__name__}: {exc}")
        failure_note = ""

        # Execution repairs never consume user interactions.
        repairs = 0
        while True:
            if compose_check is not None:
                violation = compose_check(code)
                if violation:
                    outcome = ExecutionOutcome(False, diagnostics_text=violation)
                else:
                    outcome = userproxy_execute(code, registry, robot, tools, limits)
            else:
                outcome = userproxy_execute(code, registry, robot, tools, limits)
            if outcome.success:
                break
            transcript.record("userproxy", "error-report", outcome.diagnostics_text)
            ctx.history.append(
                user("Execution failed. Fix the program.\n" + outcome.diagnostics_text)
            )
            repairs += 1
            if repairs > config.max_execute_repairs:
                return EpisodeResult(
                    False,
                    failure_reason=f"execution repairs exhausted after {config.max_execute_repairs} attempts",
                )
            try:
                code = drafter_run(
                    ctx,
                    config,
                    backends,
                    transcript=transcript,
                    failure_note=outcome.diagnostics_text,
                )
            except (ProtocolError, RoundExhaustion) as exc:
                return EpisodeResult(False, failure_reason=f"{type(exc).__name__}: {exc}")

        # Layer 2 human gate.
        try:
            fb = human_gate(outcome, channel)
        except SessionAbort as exc:
            transcript.record("system", "info", str(exc))
            return EpisodeResult(False, failure_reason="session aborted")

        if fb.action in ("approve", "save"):
            transcript.record("user", "approval", "")
            if fb.action == "save" and memory_store is not None:
                transcript.record("system", "info", "saved approved code to memory")
            if fb.action == "save" and memory_store is None:
                transcript.record("system", "info", "no memory store configured; save ignored")
            result = EpisodeResult(True, code=code)
            if fb.action == "save" and memory_store is not None:
                memory_store.store(
                    ctx.subtask, code, preferences=fb.preferences, chat_backend=backends.designer
                )
            return result

        transcript.record("user", fb.kind, fb.text, misunderstood=fb.misunderstood)
        budget.spend()
        if budget.exhausted:
            return EpisodeResult(
                False, failure_reason=f"interaction window exhausted ({budget.limit})"
            )
        ctx.history.append(user(f"User feedback ({fb.kind}): {fb.text}"))
