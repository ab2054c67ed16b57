import pytest

from mistyagents.rsc import (
    ExecutionLimits,
    Interpreter,
    RscRuntimeError,
    execute,
    parse,
)


def run(source, registry, robot, tools, limits=None):
    result = parse(source)
    assert result.ok, result.diagnostics
    return execute(result.program, registry, robot, tools, limits)


def test_led_write_reaches_state(registry, robot, tools):
    trace = run("change_led(0, 0, 255)", registry, robot, tools)
    assert trace.final_state["led"] == [0, 0, 255]


def test_repeat_unrolls(registry, robot, tools):
    trace = run("repeat 3 { wait(100) }", registry, robot, tools)
    assert len(trace.commands("wait")) == 3
    assert trace.final_state["pose_time"] == 300


def test_let_scope_spans_top_level(registry, robot, tools):
    trace = run('let h = "hello"\nspeak(h)', registry, robot, tools)
    assert trace.final_state["speech_log"] == ["hello"]


def test_block_scope_popped(registry, robot, tools):
    with pytest.raises(RscRuntimeError, match="undefined variable"):
        run('repeat 1 { let x = "a" }\nspeak(x)', registry, robot, tools)


def test_if_else_on_comparison(registry, robot, tools, sim):
    sim.camera_color = "blue"
    source = (
        'let c = detect_color()\n'
        'if c == "red" { speak("red") } else { speak("other") }'
    )
    trace = run(source, registry, robot, tools)
    assert trace.final_state["speech_log"] == ["other"]


def test_runtime_range_failure_has_span(registry, robot, tools):
    source = "let r = 200\nchange_led(r, r, r)\nwait(1)"
    # Variables defeat static range checks; runtime recheck still passes here.
    run(source, registry, robot, tools)
    with pytest.raises(RscRuntimeError) as exc:
        run("let r = 300\nchange_led(r, 0, 0)", registry, robot, tools)
    assert exc.value.span.line == 2
    assert "∉ [0,255]" in exc.value.message
    assert exc.value.render().startswith("error[E_RUNTIME] 2:")


def test_stop_halts_program(registry, robot, tools):
    trace = run('speak("a")\nstop\nspeak("b")', registry, robot, tools)
    assert trace.final_state["speech_log"] == ["a"]


def test_touch_handler_fires_between_statements(registry, robot, tools, sim):
    result = parse('on_touch("Chin") { change_led(255, 0, 0) }\nwait(10)\nwait(10)')
    interp = Interpreter(registry, robot, tools)
    sim.inject_event("touch", "Chin")
    trace = interp.run(result.program)
    assert trace.final_state["led"] == [255, 0, 0]


def test_touch_handler_filter_mismatch_retains_event(registry, robot, tools, sim):
    result = parse('on_touch("Chin") { change_led(255, 0, 0) }\nwait(10)')
    interp = Interpreter(registry, robot, tools)
    sim.inject_event("touch", "Scruff")
    trace = interp.run(result.program)
    assert trace.final_state["led"] == [255, 255, 255]
    assert len(interp._pending) == 1  # unmatched events stay queued


def test_heard_handler_keyword_case_insensitive(registry, robot, tools, sim):
    result = parse('on_heard("photo") as u { speak(u) }\nwait(10)')
    interp = Interpreter(registry, robot, tools)
    sim.inject_event("heard", "Take a PHOTO please")
    trace = interp.run(result.program)
    assert trace.final_state["speech_log"] == ["Take a PHOTO please"]


def test_capture_speech_consumes_heard_event(registry, robot, tools, sim):
    sim.inject_event("heard", "hello robot")
    trace = run("let u = capture_speech(5000)\nspeak(u)", registry, robot, tools)
    assert trace.final_state["speech_log"] == ["hello robot"]
    # The event was consumed without advancing the clock.
    assert trace.final_state["pose_time"] == 0


def test_capture_speech_timeout_returns_empty(registry, robot, tools):
    trace = run('let u = capture_speech(2000)\nspeak("done")', registry, robot, tools)
    assert trace.final_state["pose_time"] == 2000
    step = trace.commands("capture_speech")[0]
    assert step.result == ""


def test_backend_calls_routed(registry, robot, tools):
    tools.backend.default_response = "backend says hi"
    trace = run("let a = ask_llm(\"q\")\nspeak(a)", registry, robot, tools)
    assert trace.final_state["speech_log"] == ["backend says hi"]


def test_ask_vlm_prompt_shape(registry, robot, tools):
    run('let p = take_photo()\nlet d = ask_vlm(p, "describe")\nspeak(d)', registry, robot, tools)
    sent = tools.backend.call_log[-1][-1].content
    assert sent == "[image photo-1] describe"


def test_log_and_now_are_local(registry, robot, tools):
    trace = run('wait(500)\nlet t = now()\nlog(t)', registry, robot, tools)
    assert trace.outputs == ["500"]
    assert trace.final_state["pose_time"] == 500


def test_named_args_and_defaults_bound(registry, robot, tools):
    trace = run("move_head(pitch=10, roll=0, yaw=20, duration_ms=400)", registry, robot, tools)
    assert trace.final_state["head"] == {"pitch": 10, "roll": 0, "yaw": 20}
    assert trace.final_state["pose_time"] == 400


def test_step_limit_enforced(registry, robot, tools):
    limits = ExecutionLimits(max_steps=50, wall_clock_ms=60_000)
    with pytest.raises(RscRuntimeError, match="step limit"):
        run("repeat 1000 { change_led(0, 0, 0) }", registry, robot, tools, limits)


def test_wall_clock_limit_enforced(registry, robot, tools):
    limits = ExecutionLimits(max_steps=10_000, wall_clock_ms=1_000)
    with pytest.raises(RscRuntimeError, match="wall clock"):
        run("repeat 10 { wait(200) }", registry, robot, tools, limits)


def test_trace_is_deterministic(registry, tools):
    from mistyagents.sim import LocalRobotClient, RobotSim

    source = 'repeat 2 { change_led(1, 2, 3)\n wait(50) }\nspeak("end")'

    def one_run():
        sim = RobotSim(registry)
        robot = LocalRobotClient(sim)
        trace = run(source, registry, robot, tools)
        return [(s.t, s.command, s.result) for s in trace.steps], trace.final_state

    assert one_run() == one_run()


def test_final_drain_dispatches_late_event(registry, robot, tools, sim):
    result = parse('on_touch("Chin") { speak("touched") }')
    interp = Interpreter(registry, robot, tools)
    sim.inject_event("touch", "Chin")
    trace = interp.run(result.program)
    assert trace.final_state["speech_log"] == ["touched"]


def test_pump_events_after_run(registry, robot, tools, sim):
    result = parse('on_touch("Chin") { change_led(0, 255, 0) }')
    interp = Interpreter(registry, robot, tools)
    interp.run(result.program)
    sim.inject_event("touch", "Chin")
    trace = interp.pump_events()
    assert trace.final_state["led"] == [0, 255, 0]
