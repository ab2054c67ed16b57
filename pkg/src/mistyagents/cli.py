"""Command-line entry point: interactive sessions, the HTTP service, the
benchmark suite, and the memory-retrieval evaluation.

Every flag has an `AM_*` environment equivalent; flags win. Exit codes:
0 success, 1 configuration error, 2 benchmark failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .agents import AgentBackends, LoopConfig
from .backends import (
    BackendError,
    HashEmbedder,
    HttpChatBackend,
    HttpEmbedder,
    LiveTools,
    ScriptedBackend,
    ScriptedTools,
)
from .bench import (
    BenchError,
    aggregate,
    bundled_rules_path,
    bundled_tasks_path,
    bundled_teach_path,
    format_mean_std,
    load_rules_file,
    load_tasks_file,
    load_teach_fixture,
    run_bench,
    teachability_eval,
    write_reports,
)
from .channels import StdinChannel
from .memory import MemoryStore
from .orchestrator import SessionConfig, SessionDeps, TaskRequest, run_session
from .registry import RegistryError, load_bundled_registry, load_registry_file
from .sim import LocalRobotClient, RobotSim


def _log(**fields) -> None:
    print(json.dumps(fields), file=sys.stderr)


def _env(name: str, default=None):
    return os.environ.get(f"AM_{name}", default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mistyagents",
        description="Multi-agent natural-language-to-robot-code toolkit",
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    def common(p):
        p.add_argument("--backend", default=_env("BACKEND", "scripted"),
                       choices=["scripted", "live"])
        p.add_argument("--registry", default=_env("REGISTRY"),
                       help="API registry JSON (default: bundled)")
        p.add_argument("--memory", default=_env("MEMORY"),
                       help="memory store jsonl path")
        p.add_argument("--rules", default=_env("RULES"),
                       help="scripted backend rules JSON")
        p.add_argument("--max-user-rounds", type=int,
                       default=int(_env("MAX_USER_ROUNDS", "20")))

    p_int = sub.add_parser("interactive", help="run one session on stdin/stdout")
    common(p_int)
    p_int.add_argument("task", nargs="?", help="task text (prompted if omitted)")

    p_serve = sub.add_parser("serve", help="host the session service and robot API")
    common(p_serve)
    p_serve.add_argument("--port", type=int, default=int(_env("PORT", "8080")))
    p_serve.add_argument("--sim-port", type=int,
                         default=int(_env("SIM_PORT", "0")),
                         help="also expose the robot API alone on this port")

    p_bench = sub.add_parser("bench", help="run the 28-task suite")
    common(p_bench)
    p_bench.add_argument("--tasks", default=_env("TASKS"),
                         help="suite definition JSON (default: bundled)")
    p_bench.add_argument("--parallel", type=int, default=int(_env("PARALLEL", "1")))
    p_bench.add_argument("--out", default=_env("OUT", "report"))
    p_bench.add_argument("--trials", type=int, default=int(_env("TRIALS", "1")))

    p_teach = sub.add_parser("teach", help="run the memory-retrieval evaluation")
    common(p_teach)
    p_teach.add_argument("fixture", nargs="?", default=_env("TASKS"),
                         help="teachability fixture JSON (default: bundled)")
    p_teach.add_argument("--out", default=_env("OUT"))
    return parser


def _load_registry(args):
    if args.registry:
        return load_registry_file(args.registry)
    return load_bundled_registry()


def _scripted_bundle(args):
    if not args.rules:
        raise BackendError("config", "scripted mode requires --rules (or AM_RULES)")
    doc = load_rules_file(args.rules)
    return (
        ScriptedBackend.from_document(doc.get("planner", {})),
        AgentBackends(
            ScriptedBackend.from_document(doc.get("designer", {})),
            ScriptedBackend.from_document(doc.get("critic", {})),
        ),
        ScriptedTools(ScriptedBackend.from_document(doc.get("tool", {}))),
    )


def _live_bundle():
    chat = HttpChatBackend()
    return chat, AgentBackends(chat, HttpChatBackend()), LiveTools(chat)


def _memory_store(args, registry):
    if not args.memory:
        return None
    if args.backend == "live" and os.environ.get("AM_EMBED_URL"):
        embedder = HttpEmbedder()
    else:
        embedder = HashEmbedder()
    return MemoryStore.load(args.memory, embedder, registry=registry)


def cmd_interactive(args) -> int:
    registry = _load_registry(args)
    if args.backend == "scripted":
        planner, agents, tools = _scripted_bundle(args)
    else:
        planner, agents, tools = _live_bundle()
    task_text = args.task or input("task> ")
    sim = RobotSim(registry)
    deps = SessionDeps(
        registry=registry,
        planner=planner,
        agent_backends=agents,
        tools=tools,
        robot=LocalRobotClient(sim),
        channel=StdinChannel(),
        memory_store=_memory_store(args, registry),
    )
    config = SessionConfig(loop=LoopConfig(max_user_rounds=args.max_user_rounds))
    result = run_session(TaskRequest(task_text), config, deps)
    for record in result.transcript.records:
        _log(seq=record.seq, actor=record.actor, kind=record.kind)
    print(f"status: {result.status}" + (f" ({result.reason})" if result.reason else ""))
    if result.final is not None:
        print(result.final.code, end="")
    return 0


def cmd_serve(args) -> int:
    import threading

    import uvicorn

    from .service import BackendBundle, create_app

    registry = _load_registry(args)
    sim = RobotSim(registry)
    config = SessionConfig(loop=LoopConfig(max_user_rounds=args.max_user_rounds))

    def backends_factory():
        if args.backend == "scripted":
            planner, agents, tools = _scripted_bundle(args)
        else:
            planner, agents, tools = _live_bundle()
        return BackendBundle(
            planner=planner,
            agents=agents,
            tools=tools,
            memory_store=_memory_store(args, registry),
        )

    app = create_app(registry=registry, backends_factory=backends_factory,
                     config=config, sim=sim)
    if args.sim_port:
        sim_app = create_app(registry=registry, sim=sim)
        thread = threading.Thread(
            target=uvicorn.run,
            args=(sim_app,),
            kwargs={"host": "127.0.0.1", "port": args.sim_port, "log_level": "warning"},
            daemon=True,
        )
        thread.start()
        _log(event="sim-listening", port=args.sim_port)
    _log(event="listening", port=args.port)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


def cmd_bench(args) -> int:
    if args.backend != "scripted":
        raise BackendError("config", "bench runs in scripted mode only")
    registry = _load_registry(args)
    tasks = load_tasks_file(args.tasks or bundled_tasks_path())
    rules = load_rules_file(args.rules or bundled_rules_path())
    out = Path(args.out)
    reports = []
    for trial in range(args.trials):
        report = run_bench(tasks, rules, registry, parallel=args.parallel,
                           max_user_rounds=args.max_user_rounds)
        reports.append(report)
        _log(event="trial-complete", trial=trial + 1,
             failures=len(report.failures))
    write_reports(reports[0], out)
    if args.trials > 1:
        trial_doc = {}
        for task in tasks:
            records = [
                next(r.metrics for r in rep.results if r.task.id == task.id)
                for rep in reports
            ]
            trial_doc[str(task.id)] = {
                k: format_mean_std(v) for k, v in aggregate(records).items()
            }
        (out / "trials.json").write_text(
            json.dumps({"trials": args.trials, "per_task": trial_doc},
                       indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    failures = sorted({r.task.id for rep in reports for r in rep.failures})
    _log(event="bench-complete", trials=args.trials, failed_tasks=failures)
    return 2 if failures else 0


def cmd_teach(args) -> int:
    registry = _load_registry(args)
    doc = load_teach_fixture(args.fixture or bundled_teach_path())
    embedder = None
    if args.backend == "live":
        embedder = HttpEmbedder()
    report = teachability_eval(doc, registry=registry, embedder=embedder)
    sys.stdout.write(report.to_markdown())
    print(f"\ncorrect: {report.correct_count}/{len(report.rows)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "teachability.json").write_text(
            json.dumps(report.to_document(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (out / "teachability.md").write_text(report.to_markdown(), encoding="utf-8")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "interactive": cmd_interactive,
        "serve": cmd_serve,
        "bench": cmd_bench,
        "teach": cmd_teach,
    }[args.mode]
    try:
        return handler(args)
    except (BackendError, BenchError, RegistryError, FileNotFoundError) as exc:
        _log(event="config-error", error=str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
