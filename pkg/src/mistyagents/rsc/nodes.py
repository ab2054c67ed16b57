"""AST node types for RobotScript programs."""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import SourceSpan


@dataclass(frozen=True)
class Node:
    span: SourceSpan


# --- Expressions -----------------------------------------------------------


@dataclass(frozen=True)
class IntLit(Node):
    value: int


@dataclass(frozen=True)
class FloatLit(Node):
    value: float


@dataclass(frozen=True)
class StringLit(Node):
    value: str


@dataclass(frozen=True)
class VarRef(Node):
    name: str


@dataclass(frozen=True)
class CallExpr(Node):
    name: str
    args: tuple["Arg", ...]


@dataclass(frozen=True)
class Compare(Node):
    op: str  # "==" | "!="
    left: "Expr"
    right: "Expr"


Expr = IntLit | FloatLit | StringLit | VarRef | CallExpr | Compare


@dataclass(frozen=True)
class Arg:
    """One call argument, positional (name is None) or named."""

    value: Expr
    name: str | None = None
    span: SourceSpan | None = None


# --- Statements ------------------------------------------------------------


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple[Arg, ...]


@dataclass(frozen=True)
class Let(Node):
    name: str
    expr: Expr


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then_block: tuple["Statement", ...]
    else_block: tuple["Statement", ...] = ()


@dataclass(frozen=True)
class Repeat(Node):
    count: Expr
    block: tuple["Statement", ...]


@dataclass(frozen=True)
class Wait(Node):
    duration: Expr


@dataclass(frozen=True)
class Handler(Node):
    event_api: str
    args: tuple[Arg, ...]
    binding: str | None
    block: tuple["Statement", ...]


@dataclass(frozen=True)
class Stop(Node):
    pass


Statement = Call | Let | If | Repeat | Wait | Handler | Stop


@dataclass(frozen=True)
class Program(Node):
    items: tuple[Statement, ...] = field(default=())


def structurally_equal(a: Node, b: Node) -> bool:
    """Equality ignoring source spans."""
    return _strip(a) == _strip(b)


def _strip(node):
    if isinstance(node, tuple):
        return tuple(_strip(x) for x in node)
    if isinstance(node, Arg):
        return ("arg", node.name, _strip(node.value))
    if isinstance(node, Node):
        fields = []
        for k, v in vars(node).items():
            if k == "span":
                continue
            fields.append((k, _strip(v)))
        return (type(node).__name__, tuple(fields))
    return node
