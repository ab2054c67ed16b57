from mistyagents.rsc import format_program, parse


def fmt(source: str) -> str:
    result = parse(source)
    assert result.ok, result.diagnostics
    return format_program(result.program)


def test_call_canonical_spacing():
    assert fmt("change_led(0,0,  255)") == "change_led(0, 0, 255)\n"


def test_nested_blocks_two_space_indent():
    out = fmt("repeat 2 { repeat 3 { wait(1) } }")
    assert out == "repeat 2 {\n  repeat 3 {\n    wait(1)\n  }\n}\n"


def test_if_else_layout():
    out = fmt('if 1 { speak("a") } else { speak("b") }')
    assert out == 'if 1 {\n  speak("a")\n} else {\n  speak("b")\n}\n'


def test_handler_layout():
    out = fmt('on_heard("go") as u { log(u) }')
    assert out == 'on_heard("go") as u {\n  log(u)\n}\n'


def test_string_escapes_preserved():
    out = fmt('speak("a \\"b\\" c\\n")')
    assert out == 'speak("a \\"b\\" c\\n")\n'


def test_named_args_preserved():
    assert fmt("move_arms(left_deg=1, right_deg=2, duration_ms=3)") == (
        "move_arms(left_deg=1, right_deg=2, duration_ms=3)\n"
    )


def test_empty_program():
    assert fmt("") == ""
    assert fmt("# only a comment\n") == ""
