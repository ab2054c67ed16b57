"""Planner-driven session pipeline: decompose, validate, execute, compose.

A task becomes a DAG of agent-assigned subtasks; nodes run strictly in
topological order (ties broken by ascending id), each through the shared
two-layer drafting loop, with upstream code embedded verbatim downstream.
"""

from __future__ import annotations

import heapq
import json
import re
from dataclasses import dataclass, field

from .agents import (
    AgentBackends,
    AgentContext,
    EpisodeResult,
    LoopConfig,
    SessionBudget,
    Transcript,
    WORKER_ROLES,
    parse_feedback,
    run_episode,
)
from .backends import assistant, system, user
from .memory import MemoryStore
from .registry import ApiRegistry
from .rsc import ExecutionLimits

PLAN_FENCE_RE = re.compile(r"```json\n(.*?)```", re.DOTALL)

_ROLE_CHARTERS = {
    "action": "You are the Action agent: movement, speech, LED, and expression control.",
    "touch": "You are the Touch agent: you handle physical touch interactions.",
    "audiovisual": (
        "You are the Audiovisual agent: camera, audio, and language/vision reasoning."
    ),
}

_PLANNER_SYSTEM = (
    "You are the Planner agent. Decompose the task into atomic subtasks, assign each "
    "to one of the worker agents (action, touch, audiovisual), and order them by "
    "dependency. Reply with exactly one fenced json block of the form "
    '{"subtasks":[{"id":...,"description":...,"agent":...,"deps":[...]}]}.'
)


class PlanError(ValueError):
    pass


class CycleError(PlanError):
    def __init__(self, cycle: list[str]) -> None:
        super().__init__("plan contains a cycle: " + " -> ".join(cycle))
        self.cycle = cycle


@dataclass(frozen=True)
class TaskRequest:
    text: str
    options: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("task text must be non-empty")


@dataclass(frozen=True)
class SubtaskNode:
    id: str
    description: str
    agent: str
    deps: tuple[str, ...] = ()


@dataclass(frozen=True)
class PlanGraph:
    nodes: tuple[SubtaskNode, ...]

    def node(self, node_id: str) -> SubtaskNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def edges(self) -> list[tuple[str, str]]:
        return [(dep, n.id) for n in self.nodes for dep in n.deps]

    def to_document(self) -> dict:
        return {
            "subtasks": [
                {"id": n.id, "description": n.description, "agent": n.agent, "deps": list(n.deps)}
                for n in self.nodes
            ]
        }


@dataclass
class CodeArtifact:
    node_id: str
    code: str
    approved: bool = False


def validate_plan(doc: dict) -> PlanGraph:
    """Enforce plan invariants; raises PlanError with a reason."""
    if not isinstance(doc, dict) or not isinstance(doc.get("subtasks"), list) or not doc["subtasks"]:
        raise PlanError('plan must be {"subtasks": [...]} with at least one subtask')
    nodes = []
    ids = set()
    for raw in doc["subtasks"]:
        try:
            node = SubtaskNode(
                id=str(raw["id"]),
                description=str(raw["description"]),
                agent=str(raw["agent"]),
                deps=tuple(str(d) for d in raw.get("deps", [])),
            )
        except (KeyError, TypeError) as exc:
            raise PlanError(f"malformed subtask record: {exc}") from exc
        if node.agent not in WORKER_ROLES:
            raise PlanError(f"subtask {node.id!r}: agent must be one of {WORKER_ROLES}")
        if node.id in ids:
            raise PlanError(f"duplicate subtask id {node.id!r}")
        ids.add(node.id)
        nodes.append(node)
    for node in nodes:
        for dep in node.deps:
            if dep not in ids:
                raise PlanError(f"subtask {node.id!r} references unknown dep {dep!r}")
            if dep == node.id:
                raise PlanError(f"subtask {node.id!r} depends on itself")
    graph = PlanGraph(nodes=tuple(nodes))
    topo_sort(graph)  # raises CycleError on cycles
    return graph


def topo_sort(graph: PlanGraph) -> list[str]:
    """Kahn's algorithm; simultaneously-ready nodes ordered by ascending id."""
    in_degree = {n.id: 0 for n in graph.nodes}
    adj: dict[str, list[str]] = {n.id: [] for n in graph.nodes}
    for dep, nid in graph.edges():
        in_degree[nid] += 1
        adj[dep].append(nid)
    ready = [nid for nid, deg in sorted(in_degree.items()) if deg == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for nxt in adj[nid]:
            in_degree[nxt] -= 1
            if in_degree[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(graph.nodes):
        raise CycleError(_find_cycle(graph, {n for n, d in in_degree.items() if d > 0}))
    return order


def _find_cycle(graph: PlanGraph, candidates: set[str]) -> list[str]:
    start = sorted(candidates)[0]
    path = [start]
    seen = {start}
    cur = start
    while True:
        node = graph.node(cur)
        nxt = next(d for d in node.deps if d in candidates)
        if nxt in seen:
            return path[path.index(nxt) :] + [nxt] if nxt in path else [nxt]
        path.append(nxt)
        seen.add(nxt)
        cur = nxt


def extract_plan_document(reply: str) -> dict:
    blocks = PLAN_FENCE_RE.findall(reply)
    if len(blocks) != 1:
        raise PlanError(f"expected exactly one fenced json block, found {len(blocks)}")
    try:
        return json.loads(blocks[0])
    except json.JSONDecodeError as exc:
        raise PlanError(f"plan block is not valid JSON: {exc}") from exc


def plan(task: TaskRequest, backend, registry: ApiRegistry) -> PlanGraph:
    """One planning round: prompt, parse, enforce invariants; reprompt once."""
    messages = [system(_PLANNER_SYSTEM), user(f"Task: {task.text}")]
    reply = backend.complete(messages)
    try:
        if not reply.strip():
            raise PlanError("planner returned an empty reply")
        return validate_plan(extract_plan_document(reply))
    except PlanError as exc:
        if reply.strip():
            messages.append(assistant(reply))
        messages.append(user(f"Plan rejected: {exc}. Emit a corrected fenced json plan."))
        reply = backend.complete(messages)
        if not reply.strip():
            raise PlanError("planner returned an empty reply") from exc
        return validate_plan(extract_plan_document(reply))


def compose_check(final_code: str, upstream_codes: list[str]) -> str | None:
    """None on pass; violation text when upstream code is not embedded verbatim."""
    final_norm = _normalize(final_code)
    for code in upstream_codes:
        if _normalize(code) not in final_norm:
            return (
                "composition violation: upstream verified code must be embedded "
                "verbatim in the final program"
            )
    return None


def _normalize(code: str) -> str:
    return "\n".join(line.rstrip() for line in code.strip("\n").split("\n"))


def assemble_context(
    node: SubtaskNode,
    sequence: list[str],
    artifacts: dict[str, CodeArtifact],
    memory_store: MemoryStore | None,
    registry: ApiRegistry,
) -> AgentContext:
    upstream = []
    for nid in sequence:
        if nid in node.deps:
            artifact = artifacts.get(nid)
            if artifact is None or not artifact.approved:
                raise PlanError(f"missing upstream artifact for dep {nid!r}")
            upstream.append(artifact.code)
    docs = registry.domain_subset(node.agent).render_docs()
    system_prompt = (
        _ROLE_CHARTERS[node.agent]
        + " Generate RobotScript programs using only these APIs:\n\n"
        + docs
    )
    return AgentContext(
        role=node.agent,
        system_prompt=system_prompt,
        subtask=node.description,
        upstream_code=upstream,
    )


@dataclass
class SessionConfig:
    loop: LoopConfig = field(default_factory=LoopConfig)
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)
    max_plan_rounds: int = 5
    enable_replanning: bool = True


@dataclass
class SessionDeps:
    registry: ApiRegistry
    planner: object
    agent_backends: AgentBackends
    tools: object
    robot: object
    channel: object
    memory_store: MemoryStore | None = None


@dataclass
class SessionResult:
    status: str  # "Success" | "Fail"
    reason: str
    transcript: Transcript
    plan: PlanGraph | None
    artifacts: dict[str, CodeArtifact]
    final: CodeArtifact | None

    @property
    def succeeded(self) -> bool:
        return self.status == "Success"


def run_session(
    task: TaskRequest,
    config: SessionConfig,
    deps: SessionDeps,
    transcript: Transcript | None = None,
) -> SessionResult:
    transcript = transcript if transcript is not None else Transcript()
    budget = SessionBudget(config.loop.max_user_rounds)
    artifacts: dict[str, CodeArtifact] = {}

    def fail(reason: str, graph: PlanGraph | None = None) -> SessionResult:
        transcript.record("system", "info", f"session failed: {reason}")
        return SessionResult("Fail", reason, transcript, graph, artifacts, None)

    transcript.record("system", "info", f"task: {task.text}")

    # Plan, then validate with the user; revision text triggers replanning.
    graph: PlanGraph | None = None
    for _ in range(config.max_plan_rounds):
        try:
            graph = plan(task, deps.planner, deps.registry)
        except PlanError as exc:
            return fail(f"plan: {exc}")
        transcript.record("system", "info", "plan: " + json.dumps(graph.to_document()))
        line = deps.channel.read_input()
        if line is None:
            return fail("session aborted during plan validation", graph)
        fb = parse_feedback(line)
        if fb.action in ("approve", "save"):
            transcript.record("user", "approval", "")
            break
        transcript.record("user", fb.kind, fb.text, misunderstood=fb.misunderstood)
        budget.spend()
        if budget.exhausted:
            return fail("interaction window exhausted during planning", graph)
        task = TaskRequest(text=f"{task.text}\nRevision: {fb.text}", options=task.options)
        graph = None
    if graph is None:
        return fail("plan was never approved")

    sequence = topo_sort(graph)
    transcript.record("system", "info", "execution order: " + ", ".join(sequence))

    replanned: set[str] = set()
    while True:
        pending = [nid for nid in sequence if nid not in artifacts]
        if not pending:
            break
        node_id = pending[0]
        node = graph.node(node_id)
        result, ctx = _run_node(node, sequence, artifacts, config, deps, transcript, budget)
        if result.success:
            artifacts[node_id] = CodeArtifact(node_id, result.code, approved=True)
            continue
        # Recursive subdivision: one sub-plan attempt per exhausted node.
        if (
            config.enable_replanning
            and node_id not in replanned
            and "exhaust" in result.failure_reason.lower()
            and "interaction window" not in result.failure_reason
        ):
            replanned.add(node_id)
            try:
                graph, sequence = _splice_subplan(graph, node, deps, transcript)
            except PlanError as exc:
                return fail(f"node {node_id!r}: {result.failure_reason}; replan failed: {exc}", graph)
            continue
        return fail(f"node {node_id!r}: {result.failure_reason}", graph)

    final = artifacts[sequence[-1]]
    transcript.record("system", "info", f"session complete; final artifact from {final.node_id}")
    return SessionResult("Success", "", transcript, graph, artifacts, final)


def _run_node(
    node: SubtaskNode,
    sequence: list[str],
    artifacts: dict[str, CodeArtifact],
    config: SessionConfig,
    deps: SessionDeps,
    transcript: Transcript,
    budget: SessionBudget,
) -> tuple[EpisodeResult, AgentContext]:
    transcript.record("system", "info", f"subtask {node.id} ({node.agent}): {node.description}")
    ctx = assemble_context(node, sequence, artifacts, deps.memory_store, deps.registry)
    checker = None
    if ctx.upstream_code:
        upstream = list(ctx.upstream_code)

        def checker(code: str) -> str | None:
            violation = compose_check(code, upstream)
            return ("REVISE: " + violation) if violation else None

    result = run_episode(
        ctx,
        config.loop,
        deps.agent_backends,
        deps.registry,
        deps.robot,
        deps.tools,
        deps.channel,
        transcript,
        budget,
        memory_store=deps.memory_store,
        limits=config.limits,
        compose_check=checker,
    )
    return result, ctx


def _splice_subplan(
    graph: PlanGraph, node: SubtaskNode, deps: SessionDeps, transcript: Transcript
) -> tuple[PlanGraph, list[str]]:
    """Replace an exhausted node with a planner-produced sub-plan (depth 2 cap)."""
    if "/" in node.id:
        raise PlanError("subdivision depth cap reached")
    sub = plan(TaskRequest(text=node.description), deps.planner, deps.registry)
    sub_ids = [f"{node.id}/{n.id}" for n in sub.nodes]
    sub_order = topo_sort(sub)
    last_sub = f"{node.id}/{sub_order[-1]}"
    new_nodes: list[SubtaskNode] = []
    for n in graph.nodes:
        if n.id == node.id:
            continue
        deps_rewritten = tuple(last_sub if d == node.id else d for d in n.deps)
        new_nodes.append(SubtaskNode(n.id, n.description, n.agent, deps_rewritten))
    for n in sub.nodes:
        prefixed_deps = tuple(f"{node.id}/{d}" for d in n.deps)
        if not n.deps:
            prefixed_deps = node.deps  # sub-plan roots inherit the original deps
        new_nodes.append(SubtaskNode(f"{node.id}/{n.id}", n.description, n.agent, prefixed_deps))
    new_graph = PlanGraph(nodes=tuple(new_nodes))
    sequence = topo_sort(new_graph)
    transcript.record(
        "system", "info", f"replanned {node.id} into {', '.join(sub_ids)}"
    )
    # Resume from the first not-yet-approved node in the new order.
    return new_graph, sequence
