"""Source spans and structured diagnostics for the DSL toolchain."""

from __future__ import annotations

from dataclasses import dataclass

# Closed set of diagnostic codes.
E_PARSE = "E_PARSE"
E_TOPLEVEL_HANDLER = "E_TOPLEVEL_HANDLER"
E_UNKNOWN_API = "E_UNKNOWN_API"
E_ARITY = "E_ARITY"
E_TYPE = "E_TYPE"
E_RANGE = "E_RANGE"
E_UNDEF_VAR = "E_UNDEF_VAR"
E_RUNTIME = "E_RUNTIME"

ALL_CODES = (
    E_PARSE,
    E_TOPLEVEL_HANDLER,
    E_UNKNOWN_API,
    E_ARITY,
    E_TYPE,
    E_RANGE,
    E_UNDEF_VAR,
    E_RUNTIME,
)


@dataclass(frozen=True, order=True)
class SourceSpan:
    """1-based line/column span inside the source text."""

    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: SourceSpan

    def render(self) -> str:
        return f"{self.severity}[{self.code}] {self.span} {self.message}"


def render_diagnostics(diags: list[Diagnostic]) -> str:
    """The exact text appended to a drafting context on failure."""
    return "\n".join(d.render() for d in diags)


def sort_diagnostics(diags: list[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=lambda d: (d.span, d.code, d.message))
