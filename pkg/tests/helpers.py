"""Shared builders: program corpus and single-fault program generators."""

from __future__ import annotations

import random


def build_corpus() -> list[str]:
    """50 programs covering every statement form."""
    programs = [
        # plain calls, positional and named
        'change_led(0, 0, 255)',
        'change_led(red=255, green=0, blue=0)',
        'move_head(0, 0, 45, 800)',
        'move_head(pitch=-10, roll=0, yaw=-45, duration_ms=500)',
        'move_arms(90, -29, 500)',
        'speak("hello there")',
        'speak("fast words", 1.5)',
        'speak(text="mixed", rate=0.75)',
        'set_speech_rate(2.0)',
        'display_expression("joy")',
        'play_audio("chime")',
        'drive_time(0.5, -0.5, 1000)',
        'log("plain log line")',
        'speak("escaped \\"quote\\" and backslash \\\\")',
        'speak("tab\\tand newline\\n")',
        # wait / stop
        'wait(500)',
        'wait(0)',
        'speak("before")\nstop\nspeak("after")',
        'stop',
        # let and expressions
        'let x = 5\nwait(x)',
        'let name = "joy"\ndisplay_expression(name)',
        'let t = now()\nlog(t)',
        'let c = detect_color()\nlog(c)',
        'let heard = capture_speech(3000)\nspeak(heard)',
        'let img = take_photo()\nlet caption = ask_vlm(img, "describe")\nspeak(caption)',
        'let reply = ask_llm("tell a joke")\nspeak(reply)',
        'let words = transcribe("clip-9")\nlog(words)',
        'let rate = 1.25\nset_speech_rate(rate)',
        # if / else
        'if 1 { change_led(0, 255, 0) }',
        'if 0 { speak("yes") } else { speak("no") }',
        'let c = detect_color()\nif c == "red" { change_led(255, 0, 0) }',
        'let c = detect_color()\nif c != "red" { change_led(0, 0, 255) } else { change_led(255, 0, 0) }',
        'let x = 2\nif x == 2 { speak("two") } else { speak("other") }',
        'if detect_color() == "green" { display_expression("joy") }',
        # repeat
        'repeat 3 { move_arms(90, 90, 500)\n  wait(500) }',
        'repeat 0 { speak("never") }',
        'let n = 2\nrepeat n { wait(100) }',
        'repeat 2 { repeat 2 { change_led(1, 2, 3) } }',
        'repeat 1 { if 1 { log("nested") } }',
        # handlers
        'on_touch("HeadFront") { play_audio("pikachu") }',
        'on_touch("Chin") as sensor { log(sensor) }',
        'on_heard("picture") { take_photo() }',
        'on_heard("record") as utterance { log(utterance)\n  start_video(5000) }',
        'start_face_rec() as face { speak(face) }',
        'on_touch("HeadBack") { display_expression("surprise")\n  wait(200) }',
        # mixed programs
        'speak("sequence start")\nrepeat 2 { move_head(10, 0, 30, 400)\n  move_head(10, 0, -30, 400) }\nspeak("done")',
        'change_led(10, 20, 30)\nwait(250)\nchange_led(0, 0, 0)',
        'on_touch("Scruff") { stop }\nrepeat 5 { wait(1000) }',
        'let poem = ask_llm("compose a short poem")\nset_speech_rate(0.8)\nspeak(poem)',
        'display_expression("sleep")\nwait(1000)\ndisplay_expression("neutral")\nlog("cycle complete")',
    ]
    assert len(programs) == 50
    return programs


# Valid one-line filler statements that validate cleanly on their own.
_FILLERS = [
    'wait(100)',
    'change_led(1, 2, 3)',
    'speak("filler")',
    'log("noise")',
    'move_arms(10, 10, 100)',
    'display_expression("neutral")',
]


def _fault_lines(code: str, rng: random.Random) -> tuple[str, int, int]:
    """One faulty line per code; returns (line_text, col_of_fault, fault_len)."""
    if code == "E_UNKNOWN_API":
        return ('blink_led(1)', 1, 0)
    if code == "E_ARITY":
        # extra positional argument; fault span is the extra literal
        return ('change_led(0, 0, 255, 9)', 23, 0)
    if code == "E_TYPE":
        return ('change_led("red", 0, 0)', 12, 0)
    if code == "E_RANGE":
        value = rng.choice([256, 300, 999, -1])
        line = f'change_led({value}, 0, 0)'
        return (line, 12, 0)
    if code == "E_PARSE":
        return ('if { }', 4, 0)
    if code == "E_TOPLEVEL_HANDLER":
        return ('repeat 1 { on_touch("Chin") { wait(1) } }', 12, 0)
    raise ValueError(code)


def generate_single_fault(code: str, seed: int) -> tuple[str, int, int]:
    """A program with exactly one planted fault.

    Returns (source, expected_line, expected_col). E_PARSE and
    E_TOPLEVEL_HANDLER faults must sit first since the parser stops at the
    first error; validator-level faults are surrounded by clean filler.
    """
    rng = random.Random(seed)
    fault, col, _ = _fault_lines(code, rng)
    if code in ("E_PARSE", "E_TOPLEVEL_HANDLER"):
        before: list[str] = rng.sample(_FILLERS, rng.randint(0, 3))
        lines = before + [fault]
        return "\n".join(lines), len(before) + 1, col
    before = rng.sample(_FILLERS, rng.randint(0, 3))
    after = rng.sample(_FILLERS, rng.randint(0, 3))
    lines = before + [fault] + after
    return "\n".join(lines), len(before) + 1, col
