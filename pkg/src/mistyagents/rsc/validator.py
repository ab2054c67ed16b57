"""Static validation of parsed programs against an API registry.

Faults are returned as data in stable span order, never raised.
"""

from __future__ import annotations

from ..registry import ApiDefinition, ApiRegistry, ParamSpec
from .diagnostics import (
    Diagnostic,
    E_ARITY,
    E_RANGE,
    E_TYPE,
    E_UNDEF_VAR,
    E_UNKNOWN_API,
    sort_diagnostics,
)
from . import nodes as n

# Expression result kinds used for param compatibility.
_NUMERIC = {"int", "float"}
_TEXTUAL = {"text", "image", "audio"}

_RETURNS_TO_KIND = {
    "text": "text",
    "image-handle": "image",
    "audio-handle": "audio",
    "boolean": "bool",
    "none": "none",
    "event": "event",
}


def validate(program: n.Program, registry: ApiRegistry) -> list[Diagnostic]:
    checker = _Checker(registry)
    checker.check_block(program.items, {})
    return sort_diagnostics(checker.diags)


class _Checker:
    def __init__(self, registry: ApiRegistry) -> None:
        self.registry = registry
        self.diags: list[Diagnostic] = []

    def error(self, code: str, message: str, span) -> None:
        self.diags.append(Diagnostic("error", code, message, span))

    def check_block(self, items: tuple[n.Statement, ...], scope: dict[str, str]) -> None:
        scope = dict(scope)
        for stmt in items:
            self.check_statement(stmt, scope)

    def check_statement(self, stmt: n.Statement, scope: dict[str, str]) -> None:
        if isinstance(stmt, n.Call):
            self.check_call(stmt.name, stmt.args, stmt.span, scope, as_expr=False)
        elif isinstance(stmt, n.Let):
            kind = self.expr_kind(stmt.expr, scope)
            scope[stmt.name] = kind
        elif isinstance(stmt, n.If):
            kind = self.expr_kind(stmt.cond, scope)
            if kind not in ("bool", "int", "unknown"):
                self.error(E_TYPE, f"condition must be boolean or int, got {kind}", stmt.cond.span)
            self.check_block(stmt.then_block, scope)
            self.check_block(stmt.else_block, scope)
        elif isinstance(stmt, n.Repeat):
            kind = self.expr_kind(stmt.count, scope)
            if kind not in ("int", "unknown"):
                self.error(E_TYPE, f"repeat count must be an integer, got {kind}", stmt.count.span)
            if isinstance(stmt.count, n.IntLit) and stmt.count.value < 0:
                self.error(
                    E_RANGE, f"repeat count {stmt.count.value} must be non-negative", stmt.count.span
                )
            self.check_block(stmt.block, scope)
        elif isinstance(stmt, n.Wait):
            api = self.registry.get("wait")
            if api is None:
                self.error(E_UNKNOWN_API, "unknown API 'wait'", stmt.span)
            else:
                self.check_arg_value(api.params[0], stmt.duration, scope)
        elif isinstance(stmt, n.Handler):
            self.check_handler(stmt, scope)
        elif isinstance(stmt, n.Stop):
            pass

    def check_handler(self, stmt: n.Handler, scope: dict[str, str]) -> None:
        api = self.registry.get(stmt.event_api)
        if api is None:
            self.error(E_UNKNOWN_API, f"unknown API {stmt.event_api!r}", stmt.span)
            return
        if not api.event_kind:
            self.error(
                E_TYPE, f"{stmt.event_api!r} is not an event API and takes no handler block", stmt.span
            )
            return
        self.check_bound_args(api, stmt.args, stmt.span, scope)
        inner = dict(scope)
        if stmt.binding:
            inner[stmt.binding] = "text"
        self.check_block(stmt.block, inner)

    def check_call(
        self,
        name: str,
        args: tuple[n.Arg, ...],
        span,
        scope: dict[str, str],
        as_expr: bool,
    ) -> str:
        """Check a call and return its result kind."""
        api = self.registry.get(name)
        if api is None:
            self.error(E_UNKNOWN_API, f"unknown API {name!r}", span)
            return "unknown"
        if api.is_syntax_form:
            self.error(E_TYPE, f"{name!r} is a syntax form and cannot be called", span)
            return "unknown"
        if api.event_kind:
            self.error(E_TYPE, f"event API {name!r} requires a handler block", span)
            return "unknown"
        result = _RETURNS_TO_KIND.get(api.returns, "unknown")
        if as_expr and result in ("none", "event"):
            self.error(E_TYPE, f"{name!r} returns no value and cannot be used in an expression", span)
        self.check_bound_args(api, args, span, scope)
        return result

    def check_bound_args(
        self, api: ApiDefinition, args: tuple[n.Arg, ...], span, scope: dict[str, str]
    ) -> None:
        params = api.params
        bound: dict[str, n.Arg] = {}
        positional_done = False
        ok = True
        for i, arg in enumerate(args):
            if arg.name is None:
                if positional_done:
                    self.error(E_ARITY, "positional argument after named argument", arg.span or span)
                    ok = False
                    continue
                if i >= len(params):
                    self.error(
                        E_ARITY,
                        f"{api.name!r} takes {len(params)} argument(s), got {len(args)}",
                        arg.span or span,
                    )
                    ok = False
                    break
                bound[params[i].name] = arg
            else:
                positional_done = True
                if arg.name not in {p.name for p in params}:
                    self.error(E_ARITY, f"{api.name!r} has no parameter {arg.name!r}", arg.span or span)
                    ok = False
                    continue
                if arg.name in bound:
                    self.error(E_ARITY, f"duplicate argument {arg.name!r}", arg.span or span)
                    ok = False
                    continue
                bound[arg.name] = arg
        if ok:
            missing = [p.name for p in params if p.required and p.name not in bound]
            if missing:
                self.error(
                    E_ARITY,
                    f"{api.name!r} missing required argument(s): {', '.join(missing)}",
                    span,
                )
        for p in params:
            if p.name in bound:
                self.check_arg_value(p, bound[p.name].value, scope)

    def check_arg_value(self, param: ParamSpec, expr: n.Expr, scope: dict[str, str]) -> None:
        kind = self.expr_kind(expr, scope)
        if kind == "unknown":
            return
        if param.kind in ("int", "duration-ms"):
            if kind != "int":
                self.error(E_TYPE, f"parameter {param.name!r} expects int, got {kind}", expr.span)
                return
        elif param.kind == "float":
            if kind not in _NUMERIC:
                self.error(E_TYPE, f"parameter {param.name!r} expects float, got {kind}", expr.span)
                return
        elif param.kind in ("string", "enum"):
            if kind not in _TEXTUAL:
                self.error(E_TYPE, f"parameter {param.name!r} expects text, got {kind}", expr.span)
                return
        elif param.kind == "color":
            if kind != "int":
                self.error(E_TYPE, f"parameter {param.name!r} expects int channel, got {kind}", expr.span)
                return
        # Literal constraint checks.
        if isinstance(expr, (n.IntLit, n.FloatLit)) and param.range is not None:
            lo, hi = param.range
            if not (lo <= expr.value <= hi):
                self.error(
                    E_RANGE,
                    f"{_fmt(expr.value)} ∉ [{_fmt(lo)},{_fmt(hi)}]",
                    expr.span,
                )
        if isinstance(expr, n.StringLit) and param.enum_values is not None:
            if expr.value not in param.enum_values:
                self.error(
                    E_RANGE,
                    f"{expr.value!r} is not one of {{{', '.join(param.enum_values)}}}",
                    expr.span,
                )

    def expr_kind(self, expr: n.Expr, scope: dict[str, str]) -> str:
        if isinstance(expr, n.IntLit):
            return "int"
        if isinstance(expr, n.FloatLit):
            return "float"
        if isinstance(expr, n.StringLit):
            return "text"
        if isinstance(expr, n.VarRef):
            if expr.name not in scope:
                self.error(E_UNDEF_VAR, f"undefined variable {expr.name!r}", expr.span)
                return "unknown"
            return scope[expr.name]
        if isinstance(expr, n.CallExpr):
            return self.check_call(expr.name, expr.args, expr.span, scope, as_expr=True)
        if isinstance(expr, n.Compare):
            self.expr_kind(expr.left, scope)
            self.expr_kind(expr.right, scope)
            return "bool"
        return "unknown"


def _fmt(x) -> str:
    return str(int(x)) if isinstance(x, (int, float)) and float(x).is_integer() else str(x)
