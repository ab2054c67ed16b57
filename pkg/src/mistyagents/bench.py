"""The 28-task benchmark suite and its metrics.

Metrics per task: TC (completion), NUI/UPI/TCI (user interaction counts),
CE (code efficiency via a single-statement-deletion oracle), and US
(satisfaction, penalized per misunderstanding flag). Also: trial
aggregation (mean ± population std) and the memory-retrieval
(teachability) evaluation over fixture embeddings.
"""

from __future__ import annotations

import dataclasses
import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .agents import AgentBackends, LoopConfig
from .backends import FixtureEmbedder, ScriptedBackend, ScriptedTools
from .channels import ScriptedOperator
from .memory import MemoryStore
from .orchestrator import (
    SessionConfig,
    SessionDeps,
    SessionResult,
    TaskRequest,
    run_session,
)
from .registry import ApiRegistry, load_bundled_registry
from .rsc import RscRuntimeError, execute, parse, validate
from .rsc import nodes as n
from .sim import LocalRobotClient, RobotSim

CATEGORIES = ("elementary", "simple", "compound", "complex")

# Task ids partition into categories 9/7/4/8.
_CATEGORY_RANGES = {
    "elementary": range(1, 10),
    "simple": range(10, 17),
    "compound": range(17, 21),
    "complex": range(21, 29),
}


class BenchError(ValueError):
    pass


# --- success checks ----------------------------------------------------------


def _check_led_equals(snap: dict, p: dict) -> bool:
    return snap["led"] == list(p["rgb"])


def _check_head_equals(snap: dict, p: dict) -> bool:
    return snap["head"] == {"pitch": p["pitch"], "roll": p["roll"], "yaw": p["yaw"]}


def _check_arms_equals(snap: dict, p: dict) -> bool:
    return snap["arms"] == {"left": p["left"], "right": p["right"]}


def _check_expression_equals(snap: dict, p: dict) -> bool:
    return snap["expression"] == p["name"]


def _check_expression_shown(snap: dict, p: dict) -> bool:
    return p["name"] in snap["display_log"]


def _check_speech_contains(snap: dict, p: dict) -> bool:
    return any(p["text"] in line for line in snap["speech_log"])


def _check_audio_contains(snap: dict, p: dict) -> bool:
    return p["clip"] in snap["audio_log"]


def _check_speech_rate_equals(snap: dict, p: dict) -> bool:
    return snap["speech_rate"] == p["rate"]


def _check_photo_count_at_least(snap: dict, p: dict) -> bool:
    return snap["recording"]["photo_count"] >= p["count"]


def _check_video_started(snap: dict, p: dict) -> bool:
    return snap["recording"]["video"] is True


def _check_motion_count_at_least(snap: dict, p: dict) -> bool:
    count = sum(1 for m in snap["motion_log"] if m["motion"] == p["name"])
    return count >= p["count"]


_CHECKS = {
    "led_equals": _check_led_equals,
    "head_equals": _check_head_equals,
    "arms_equals": _check_arms_equals,
    "expression_equals": _check_expression_equals,
    "expression_shown": _check_expression_shown,
    "speech_contains": _check_speech_contains,
    "audio_contains": _check_audio_contains,
    "speech_rate_equals": _check_speech_rate_equals,
    "photo_count_at_least": _check_photo_count_at_least,
    "video_started": _check_video_started,
    "motion_count_at_least": _check_motion_count_at_least,
}


@dataclass(frozen=True)
class SuccessCheck:
    name: str
    params: tuple[tuple[str, object], ...] = ()

    @classmethod
    def from_document(cls, doc: dict) -> "SuccessCheck":
        name = doc["name"]
        params = doc.get("params", {})
        if name == "all_of":
            checks = tuple(cls.from_document(c) for c in params["checks"])
            return cls(name, (("checks", checks),))
        if name not in _CHECKS:
            raise BenchError(f"unknown success check {name!r}")
        return cls(name, tuple(sorted(params.items())))

    def evaluate(self, snapshot: dict) -> bool:
        p = dict(self.params)
        if self.name == "all_of":
            return all(c.evaluate(snapshot) for c in p["checks"])
        return _CHECKS[self.name](snapshot, _plain(p))


def _plain(params: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}


# --- tasks -------------------------------------------------------------------


@dataclass(frozen=True)
class BenchTask:
    id: int
    category: str
    description: str
    operator_script: tuple[str, ...]
    injected_events: tuple[tuple[str, str], ...]
    success_check: SuccessCheck


def load_tasks(doc: dict) -> list[BenchTask]:
    tasks = []
    for raw in doc["tasks"]:
        tasks.append(
            BenchTask(
                id=int(raw["id"]),
                category=str(raw["category"]),
                description=str(raw["description"]),
                operator_script=tuple(raw["operator_script"]),
                injected_events=tuple(
                    (e["kind"], e["payload"]) for e in raw.get("injected_events", [])
                ),
                success_check=SuccessCheck.from_document(raw["success_check"]),
            )
        )
    tasks.sort(key=lambda t: t.id)
    ids = [t.id for t in tasks]
    if ids != list(range(1, 29)):
        raise BenchError(f"task ids must be exactly 1..28, got {ids}")
    for task in tasks:
        if task.category not in CATEGORIES:
            raise BenchError(f"task {task.id}: unknown category {task.category!r}")
        if task.id not in _CATEGORY_RANGES[task.category]:
            raise BenchError(
                f"task {task.id} labeled {task.category!r} outside its id range"
            )
    return tasks


def load_tasks_file(path: str | Path) -> list[BenchTask]:
    with open(path, encoding="utf-8") as f:
        return load_tasks(json.load(f))


def bundled_tasks_path() -> Path:
    return Path(str(resources.files("mistyagents").joinpath("data/tasks.json")))


def bundled_rules_path() -> Path:
    return Path(str(resources.files("mistyagents").joinpath("data/bench_rules.json")))


def bundled_teach_path() -> Path:
    return Path(str(resources.files("mistyagents").joinpath("data/teach_fixture.json")))


# --- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class MetricsRecord:
    tc: str  # "Success" | "Fail"
    nui: int
    upi: int
    tci: int
    ce: int | None  # None when no final artifact exists to measure
    us: int

    def __post_init__(self) -> None:
        if self.tc not in ("Success", "Fail"):
            raise ValueError("tc must be Success or Fail")
        if self.nui != self.upi + self.tci:
            raise ValueError("nui must equal upi + tci")
        if self.ce is not None and not (0 <= self.ce <= 10):
            raise ValueError("ce must be in [0,10]")
        if not (0 <= self.us <= 10):
            raise ValueError("us must be in [0,10]")

    def to_record(self) -> dict:
        return {
            "tc": self.tc,
            "nui": self.nui,
            "upi": self.upi,
            "tci": self.tci,
            "ce": self.ce,
            "us": self.us,
        }


def compute_metrics(
    session: SessionResult,
    task: BenchTask,
    registry: ApiRegistry,
    tools_factory,
    max_user_rounds: int = 20,
) -> MetricsRecord:
    user_records = session.transcript.user_interactions()
    upi = sum(1 for r in user_records if r.kind == "preference")
    tci = sum(1 for r in user_records if r.kind == "technical")
    nui = upi + tci
    misunderstood = sum(1 for r in session.transcript.records if r.misunderstood_flag)
    us = max(0, 10 - misunderstood)

    checked_ok = False
    ce = None
    if session.succeeded and session.final is not None:
        snapshot = _observe(
            session.final.code, registry, task.injected_events, tools_factory
        )
        checked_ok = snapshot is not None and task.success_check.evaluate(snapshot)
        if checked_ok:
            _, ce = ce_deletion_oracle(
                session.final.code, registry, task, tools_factory
            )
    tc = "Success" if (session.succeeded and checked_ok and nui <= max_user_rounds) else "Fail"
    return MetricsRecord(tc=tc, nui=nui, upi=upi, tci=tci, ce=ce, us=us)


# --- code-efficiency deletion oracle -----------------------------------------


def _block_variants(block: tuple) -> list[tuple]:
    """All versions of a statement block with exactly one statement deleted."""
    out = []
    for i, stmt in enumerate(block):
        out.append(block[:i] + block[i + 1 :])
        for sub in _stmt_variants(stmt):
            out.append(block[:i] + (sub,) + block[i + 1 :])
    return out


def _stmt_variants(stmt) -> list:
    if isinstance(stmt, n.Repeat):
        return [dataclasses.replace(stmt, block=b) for b in _block_variants(stmt.block)]
    if isinstance(stmt, n.If):
        return [
            dataclasses.replace(stmt, then_block=b) for b in _block_variants(stmt.then_block)
        ] + [
            dataclasses.replace(stmt, else_block=b) for b in _block_variants(stmt.else_block)
        ]
    if isinstance(stmt, n.Handler):
        return [dataclasses.replace(stmt, block=b) for b in _block_variants(stmt.block)]
    return []


def deletion_variants(program: n.Program) -> list[n.Program]:
    """One variant per statement (top-level or nested), that statement removed."""
    return [dataclasses.replace(program, items=b) for b in _block_variants(program.items)]


def _observe(code_or_program, registry, injected_events, tools_factory) -> dict | None:
    """Run on a fresh sim with the task's scripted events; None on any failure."""
    if isinstance(code_or_program, str):
        result = parse(code_or_program)
        if not result.ok or validate(result.program, registry):
            return None
        program = result.program
    else:
        program = code_or_program
    sim = RobotSim(registry)
    robot = LocalRobotClient(sim)  # subscribe before injecting so events land
    for kind, payload in injected_events:
        sim.inject_event(kind, payload)
    try:
        trace = execute(program, registry, robot, tools_factory())
    except RscRuntimeError:
        return None
    return trace.final_state


def _comparable(snapshot: dict) -> dict:
    """Observable state minus the logical clock (deleting a wait shifts it)."""
    return {k: v for k, v in snapshot.items() if k != "pose_time"}


def ce_deletion_oracle(
    code: str,
    registry: ApiRegistry,
    task: BenchTask,
    tools_factory,
) -> tuple[int, int]:
    """(removable-count, ce). A statement is removable iff its single-deletion
    variant validates, runs clean, passes the success check, and leaves the
    sim-observable state identical to the baseline run."""
    result = parse(code)
    if not result.ok:
        raise BenchError("ce oracle requires parseable code")
    if validate(result.program, registry):
        raise BenchError("ce oracle requires valid code")
    baseline = _observe(result.program, registry, task.injected_events, tools_factory)
    if baseline is None:
        raise BenchError("ce oracle baseline run failed")
    baseline_obs = _comparable(baseline)
    removable = 0
    for variant in deletion_variants(result.program):
        if validate(variant, registry):
            continue
        snapshot = _observe(variant, registry, task.injected_events, tools_factory)
        if snapshot is None:
            continue
        if _comparable(snapshot) == baseline_obs and task.success_check.evaluate(snapshot):
            removable += 1
    return removable, max(0, 10 - removable)


# --- running tasks -----------------------------------------------------------


@dataclass
class TaskRunResult:
    task: BenchTask
    metrics: MetricsRecord
    session: SessionResult


def load_rules_file(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _tools_factory(rules_doc: dict):
    tool_doc = rules_doc.get("tool", {})
    return lambda: ScriptedTools(ScriptedBackend.from_document(tool_doc))


def run_task(
    task: BenchTask,
    rules_doc: dict,
    registry: ApiRegistry | None = None,
    max_user_rounds: int = 20,
) -> TaskRunResult:
    """One scripted session for one task, with per-task backend sandboxes."""
    registry = registry or load_bundled_registry()
    planner = ScriptedBackend.from_document(rules_doc.get("planner", {}))
    designer = ScriptedBackend.from_document(rules_doc.get("designer", {}))
    critic = ScriptedBackend.from_document(rules_doc.get("critic", {}))
    tools_factory = _tools_factory(rules_doc)

    sim = RobotSim(registry)
    robot = LocalRobotClient(sim)  # subscribe before injecting so events land
    for kind, payload in task.injected_events:
        sim.inject_event(kind, payload)
    deps = SessionDeps(
        registry=registry,
        planner=planner,
        agent_backends=AgentBackends(designer, critic),
        tools=tools_factory(),
        robot=robot,
        channel=ScriptedOperator(list(task.operator_script)),
        memory_store=None,
    )
    config = SessionConfig(loop=LoopConfig(max_user_rounds=max_user_rounds))
    session = run_session(TaskRequest(task.description), config, deps)
    metrics = compute_metrics(session, task, registry, tools_factory, max_user_rounds)
    return TaskRunResult(task=task, metrics=metrics, session=session)


# --- aggregation -------------------------------------------------------------


def aggregate(records: list[MetricsRecord]) -> dict[str, tuple[float, float]]:
    """Per-metric mean and population standard deviation; TC encoded 1/0."""
    if not records:
        raise ValueError("need at least one record")
    out: dict[str, tuple[float, float]] = {}
    series = {
        "tc": [1.0 if r.tc == "Success" else 0.0 for r in records],
        "nui": [float(r.nui) for r in records],
        "upi": [float(r.upi) for r in records],
        "tci": [float(r.tci) for r in records],
        "ce": [float(r.ce) for r in records if r.ce is not None],
        "us": [float(r.us) for r in records],
    }
    for name, values in series.items():
        if not values:
            out[name] = (0.0, 0.0)
            continue
        out[name] = (statistics.fmean(values), statistics.pstdev(values))
    return out


def format_mean_std(pair: tuple[float, float]) -> str:
    return f"{pair[0]:.2f}±{pair[1]:.2f}"


# --- suite + reports ---------------------------------------------------------


@dataclass
class BenchReport:
    results: list[TaskRunResult]

    def by_category(self) -> dict[str, list[TaskRunResult]]:
        out: dict[str, list[TaskRunResult]] = {c: [] for c in CATEGORIES}
        for r in self.results:
            out[r.task.category].append(r)
        return out

    @property
    def failures(self) -> list[TaskRunResult]:
        return [r for r in self.results if r.metrics.tc != "Success"]

    def to_document(self) -> dict:
        doc = {
            "tasks": [
                {
                    "id": r.task.id,
                    "category": r.task.category,
                    "description": r.task.description,
                    **r.metrics.to_record(),
                }
                for r in self.results
            ],
            "aggregates": {},
        }
        for cat, rows in self.by_category().items():
            if rows:
                doc["aggregates"][cat] = {
                    k: format_mean_std(v)
                    for k, v in aggregate([r.metrics for r in rows]).items()
                }
        doc["aggregates"]["overall"] = {
            k: format_mean_std(v)
            for k, v in aggregate([r.metrics for r in self.results]).items()
        }
        return doc

    def to_markdown(self) -> str:
        lines = [
            "| Task | Category | TC | UPI | TCI | NUI | CE | US |",
            "|---|---|---|---|---|---|---|---|",
        ]
        for r in self.results:
            m = r.metrics
            if m.tc == "Success":
                cells = [str(m.upi), str(m.tci), str(m.nui), str(m.ce), str(m.us)]
            else:
                cells = ["-", "-", "-", "-", "-"]
            lines.append(
                f"| {r.task.id} | {r.task.category} | {m.tc} | " + " | ".join(cells) + " |"
            )
        lines.append("")
        lines.append("| Category | TC | UPI | TCI | NUI | CE | US |")
        lines.append("|---|---|---|---|---|---|---|")
        rows = list(self.by_category().items()) + [("overall", self.results)]
        for cat, group in rows:
            if not group:
                continue
            agg = aggregate([r.metrics for r in group])
            lines.append(
                f"| {cat} | "
                + " | ".join(
                    format_mean_std(agg[k]) for k in ("tc", "upi", "tci", "nui", "ce", "us")
                )
                + " |"
            )
        return "\n".join(lines) + "\n"


def run_bench(
    tasks: list[BenchTask],
    rules_doc: dict,
    registry: ApiRegistry | None = None,
    parallel: int = 1,
    max_user_rounds: int = 20,
) -> BenchReport:
    registry = registry or load_bundled_registry()
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(
                pool.map(
                    lambda t: run_task(t, rules_doc, registry, max_user_rounds), tasks
                )
            )
    else:
        results = [run_task(t, rules_doc, registry, max_user_rounds) for t in tasks]
    results.sort(key=lambda r: r.task.id)
    return BenchReport(results=results)


def write_reports(report: BenchReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report.to_document(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (out / "report.md").write_text(report.to_markdown(), encoding="utf-8")
    transcripts = out / "transcripts"
    transcripts.mkdir(exist_ok=True)
    for r in report.results:
        (transcripts / f"task-{r.task.id:02d}.jsonl").write_text(
            r.session.transcript.to_jsonl(), encoding="utf-8"
        )


# --- teachability ------------------------------------------------------------


@dataclass(frozen=True)
class RetrievalRow:
    group: str  # the anchor the query belongs to
    query: str
    retrieved: str
    correct: bool


@dataclass
class TeachabilityReport:
    rows: list[RetrievalRow]

    @property
    def correct_count(self) -> int:
        return sum(1 for r in self.rows if r.correct)

    def to_document(self) -> dict:
        return {
            "rows": [
                {
                    "group": r.group,
                    "query": r.query,
                    "retrieved": r.retrieved,
                    "correct": r.correct,
                }
                for r in self.rows
            ],
            "correct": self.correct_count,
            "total": len(self.rows),
        }

    def to_markdown(self) -> str:
        lines = [
            "| Emotion Saved in Memory | User Input | Retrieval Result |",
            "|---|---|---|",
        ]
        for r in self.rows:
            verdict = "correct" if r.correct else "incorrect"
            lines.append(f"| {r.group} | {r.query} | {r.retrieved} ({verdict}) |")
        return "\n".join(lines) + "\n"


def load_teach_fixture(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def teachability_eval(
    doc: dict, registry: ApiRegistry | None = None, embedder=None
) -> TeachabilityReport:
    """Store 10 distractors plus 4 anchors; each query retrieves top-1."""
    registry = registry or load_bundled_registry()
    anchors = doc["anchors"]
    distractors = doc["distractors"]
    queries = doc["queries"]
    if len(anchors) != 4 or len(distractors) != 10 or len(queries) != 12:
        raise BenchError("fixture must hold 4 anchors, 10 distractors, 12 queries")
    if embedder is None:
        vectors = {e["key_summary"]: e["vector"] for e in anchors + distractors}
        vectors.update({q["text"]: q["vector"] for q in queries})
        embedder = FixtureEmbedder(vectors, dim=doc.get("dim"))
    store = MemoryStore(embedder, registry=registry)
    # The distractor corpus goes in first, then the anchors — matching the
    # evaluation protocol of seeding irrelevant memories before teaching.
    for entry in distractors:
        store.store(entry["key_summary"], entry["code"], key_summary=entry["key_summary"])
    label_by_key = {}
    for entry in anchors:
        store.store(entry["key_summary"], entry["code"], key_summary=entry["key_summary"])
        label_by_key[entry["key_summary"]] = entry["label"]
    rows = []
    for q in queries:
        top, _ = store.retrieve(q["text"], k=1)[0]
        retrieved = label_by_key.get(top.key_summary, f"(distractor: {top.key_summary})")
        rows.append(
            RetrievalRow(
                group=q["expected"],
                query=q["text"],
                retrieved=retrieved,
                correct=retrieved == q["expected"],
            )
        )
    return TeachabilityReport(rows=rows)
