"""Tokenizer for RobotScript source text."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .diagnostics import SourceSpan


class TokenKind(Enum):
    IDENT = auto()
    INT = auto()
    FLOAT = auto()
    STRING = auto()
    LPAREN = auto()
    RPAREN = auto()
    LBRACE = auto()
    RBRACE = auto()
    COMMA = auto()
    ASSIGN = auto()  # =
    EQ = auto()  # ==
    NEQ = auto()  # !=
    MINUS = auto()
    NEWLINE = auto()
    SEMI = auto()
    KW_LET = auto()
    KW_IF = auto()
    KW_ELSE = auto()
    KW_REPEAT = auto()
    KW_STOP = auto()
    KW_AS = auto()
    EOF = auto()


KEYWORDS = {
    "let": TokenKind.KW_LET,
    "if": TokenKind.KW_IF,
    "else": TokenKind.KW_ELSE,
    "repeat": TokenKind.KW_REPEAT,
    "stop": TokenKind.KW_STOP,
    "as": TokenKind.KW_AS,
}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    line: int
    col: int
    value: object = None  # decoded value for STRING tokens

    @property
    def span(self) -> SourceSpan:
        length = max(len(self.lexeme), 1)
        return SourceSpan(self.line, self.col, self.line, self.col + length - 1)


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col


def tokenize(source: str) -> list[Token]:
    """Tokenize source; raises LexError on bad input."""
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def push(kind: TokenKind, lexeme: str, ln: int, cl: int) -> None:
        tokens.append(Token(kind, lexeme, ln, cl))

    while i < n:
        ch = source[i]
        if ch == "\n":
            push(TokenKind.NEWLINE, "\n", line, col)
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":  # comment to end of line
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        start_line, start_col = line, col
        if ch == '"':
            i += 1
            col += 1
            buf = []
            raw = ['"']
            closed = False
            while i < n:
                c = source[i]
                if c == "\n":
                    break
                if c == "\\":
                    if i + 1 >= n:
                        break
                    esc = source[i + 1]
                    mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
                    if mapped is None:
                        raise LexError(f"unknown escape \\{esc}", line, col)
                    buf.append(mapped)
                    raw.append(c + esc)
                    i += 2
                    col += 2
                    continue
                if c == '"':
                    closed = True
                    raw.append(c)
                    i += 1
                    col += 1
                    break
                buf.append(c)
                raw.append(c)
                i += 1
                col += 1
            if not closed:
                raise LexError("unterminated string literal", start_line, start_col)
            tokens.append(
                Token(TokenKind.STRING, "".join(raw), start_line, start_col, "".join(buf))
            )
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and source[i + 1].isdigit()):
            j = i + 1
            is_float = False
            while j < n and (source[j].isdigit() or source[j] == "."):
                if source[j] == ".":
                    if is_float:
                        break
                    is_float = True
                j += 1
            lexeme = source[i:j]
            kind = TokenKind.FLOAT if is_float else TokenKind.INT
            push(kind, lexeme, start_line, start_col)
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            lexeme = source[i:j]
            push(KEYWORDS.get(lexeme, TokenKind.IDENT), lexeme, start_line, start_col)
            col += j - i
            i = j
            continue
        two = source[i : i + 2]
        if two == "==":
            push(TokenKind.EQ, two, start_line, start_col)
            i += 2
            col += 2
            continue
        if two == "!=":
            push(TokenKind.NEQ, two, start_line, start_col)
            i += 2
            col += 2
            continue
        singles = {
            "(": TokenKind.LPAREN,
            ")": TokenKind.RPAREN,
            "{": TokenKind.LBRACE,
            "}": TokenKind.RBRACE,
            ",": TokenKind.COMMA,
            "=": TokenKind.ASSIGN,
            ";": TokenKind.SEMI,
            "-": TokenKind.MINUS,
        }
        if ch in singles:
            push(singles[ch], ch, start_line, start_col)
            i += 1
            col += 1
            continue
        raise LexError(f"unexpected character {ch!r}", line, col)

    tokens.append(Token(TokenKind.EOF, "", line, col))
    return tokens
