"""RobotScript: lexer, parser, validator, formatter, and interpreter."""

from .diagnostics import (
    ALL_CODES,
    Diagnostic,
    E_ARITY,
    E_PARSE,
    E_RANGE,
    E_RUNTIME,
    E_TOPLEVEL_HANDLER,
    E_TYPE,
    E_UNDEF_VAR,
    E_UNKNOWN_API,
    SourceSpan,
    render_diagnostics,
)
from .formatter import format_program
from .interpreter import (
    CommandResult,
    ExecutionLimits,
    ExecutionTrace,
    Interpreter,
    RscRuntimeError,
    TraceStep,
    execute,
)
from .parser import ParseResult, parse
from .validator import validate
from . import nodes

__all__ = [
    "ALL_CODES",
    "CommandResult",
    "Diagnostic",
    "E_ARITY",
    "E_PARSE",
    "E_RANGE",
    "E_RUNTIME",
    "E_TOPLEVEL_HANDLER",
    "E_TYPE",
    "E_UNDEF_VAR",
    "E_UNKNOWN_API",
    "ExecutionLimits",
    "ExecutionTrace",
    "Interpreter",
    "ParseResult",
    "RscRuntimeError",
    "SourceSpan",
    "TraceStep",
    "execute",
    "format_program",
    "nodes",
    "parse",
    "render_diagnostics",
    "validate",
]
