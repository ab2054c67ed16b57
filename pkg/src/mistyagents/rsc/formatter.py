"""Canonical, deterministic rendering of programs back to source text."""

from __future__ import annotations

from . import nodes as n

_INDENT = "  "


def format_program(program: n.Program) -> str:
    lines: list[str] = []
    for stmt in program.items:
        lines.extend(_stmt_lines(stmt, 0))
    return "\n".join(lines) + "\n" if lines else ""


def _stmt_lines(stmt: n.Statement, depth: int) -> list[str]:
    pad = _INDENT * depth
    if isinstance(stmt, n.Call):
        return [pad + f"{stmt.name}({_args(stmt.args)})"]
    if isinstance(stmt, n.Wait):
        return [pad + f"wait({_expr(stmt.duration)})"]
    if isinstance(stmt, n.Let):
        return [pad + f"let {stmt.name} = {_expr(stmt.expr)}"]
    if isinstance(stmt, n.Stop):
        return [pad + "stop"]
    if isinstance(stmt, n.Repeat):
        lines = [pad + f"repeat {_expr(stmt.count)} {{"]
        for inner in stmt.block:
            lines.extend(_stmt_lines(inner, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(stmt, n.If):
        lines = [pad + f"if {_expr(stmt.cond)} {{"]
        for inner in stmt.then_block:
            lines.extend(_stmt_lines(inner, depth + 1))
        if stmt.else_block:
            lines.append(pad + "} else {")
            for inner in stmt.else_block:
                lines.extend(_stmt_lines(inner, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(stmt, n.Handler):
        head = f"{stmt.event_api}({_args(stmt.args)})"
        if stmt.binding:
            head += f" as {stmt.binding}"
        lines = [pad + head + " {"]
        for inner in stmt.block:
            lines.extend(_stmt_lines(inner, depth + 1))
        lines.append(pad + "}")
        return lines
    raise TypeError(f"unknown statement type {type(stmt).__name__}")


def _args(args: tuple[n.Arg, ...]) -> str:
    parts = []
    for arg in args:
        if arg.name is not None:
            parts.append(f"{arg.name}={_expr(arg.value)}")
        else:
            parts.append(_expr(arg.value))
    return ", ".join(parts)


def _expr(expr: n.Expr) -> str:
    if isinstance(expr, n.IntLit):
        return str(expr.value)
    if isinstance(expr, n.FloatLit):
        return repr(expr.value)
    if isinstance(expr, n.StringLit):
        return _quote(expr.value)
    if isinstance(expr, n.VarRef):
        return expr.name
    if isinstance(expr, n.CallExpr):
        return f"{expr.name}({_args(expr.args)})"
    if isinstance(expr, n.Compare):
        return f"{_expr(expr.left)} {expr.op} {_expr(expr.right)}"
    raise TypeError(f"unknown expression type {type(expr).__name__}")


def _quote(value: str) -> str:
    out = value.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'
