"""Recursive-descent parser producing spanned AST or parse diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, E_PARSE, E_TOPLEVEL_HANDLER, SourceSpan
from .lexer import LexError, Token, TokenKind, tokenize
from . import nodes as n


@dataclass
class ParseResult:
    program: n.Program | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.program is not None


class _ParseFail(Exception):
    def __init__(self, diag: Diagnostic) -> None:
        super().__init__(diag.message)
        self.diag = diag


def parse(source: str) -> ParseResult:
    try:
        tokens = tokenize(source)
    except LexError as exc:
        span = SourceSpan(exc.line, exc.col, exc.line, exc.col)
        return ParseResult(None, [Diagnostic("error", E_PARSE, exc.message, span)])
    parser = _Parser(tokens)
    try:
        program = parser.parse_program()
    except _ParseFail as exc:
        return ParseResult(None, [exc.diag])
    return ParseResult(program, [])


_SEPARATORS = (TokenKind.NEWLINE, TokenKind.SEMI)


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self._toks = tokens
        self._pos = 0

    # -- token helpers --

    def _peek(self, skip_newlines: bool = False) -> Token:
        pos = self._pos
        if skip_newlines:
            while self._toks[pos].kind in _SEPARATORS:
                pos += 1
        return self._toks[pos]

    def _advance(self, skip_newlines: bool = False) -> Token:
        if skip_newlines:
            while self._toks[self._pos].kind in _SEPARATORS:
                self._pos += 1
        tok = self._toks[self._pos]
        if tok.kind != TokenKind.EOF:
            self._pos += 1
        return tok

    def _skip_separators(self) -> None:
        while self._toks[self._pos].kind in _SEPARATORS:
            self._pos += 1

    def _expect(self, kind: TokenKind, what: str, skip_newlines: bool = False) -> Token:
        tok = self._peek(skip_newlines)
        if tok.kind != kind:
            got = repr(tok.lexeme) if tok.lexeme else "end of input"
            self._fail(f"expected {what}, got {got}", tok)
        return self._advance(skip_newlines)

    def _fail(self, message: str, tok: Token, code: str = E_PARSE) -> None:
        raise _ParseFail(Diagnostic("error", code, message, tok.span))

    # -- grammar --

    def parse_program(self) -> n.Program:
        items: list[n.Statement] = []
        self._skip_separators()
        while self._peek().kind != TokenKind.EOF:
            items.append(self._statement(top_level=True))
            self._skip_separators()
        span = _span_of(items) if items else SourceSpan(1, 1, 1, 1)
        return n.Program(span=span, items=tuple(items))

    def _block(self) -> tuple[n.Statement, ...]:
        self._expect(TokenKind.LBRACE, "'{'", skip_newlines=True)
        items: list[n.Statement] = []
        self._skip_separators()
        while self._peek().kind != TokenKind.RBRACE:
            if self._peek().kind == TokenKind.EOF:
                self._fail("unterminated block: expected '}'", self._peek())
            items.append(self._statement(top_level=False))
            self._skip_separators()
        self._advance()  # consume '}'
        return tuple(items)

    def _statement(self, top_level: bool) -> n.Statement:
        tok = self._peek()
        if tok.kind == TokenKind.KW_LET:
            return self._let()
        if tok.kind == TokenKind.KW_IF:
            return self._if()
        if tok.kind == TokenKind.KW_REPEAT:
            return self._repeat()
        if tok.kind == TokenKind.KW_STOP:
            self._advance()
            return n.Stop(span=tok.span)
        if tok.kind == TokenKind.IDENT:
            return self._call_statement(top_level)
        self._fail(f"expected a statement, got {tok.lexeme!r}", tok)
        raise AssertionError  # unreachable

    def _let(self) -> n.Let:
        kw = self._advance()
        name = self._expect(TokenKind.IDENT, "variable name")
        self._expect(TokenKind.ASSIGN, "'='")
        expr = self._expression()
        return n.Let(span=_join(kw.span, expr.span), name=name.lexeme, expr=expr)

    def _if(self) -> n.If:
        kw = self._advance()
        cond = self._expression()
        then_block = self._block()
        else_block: tuple[n.Statement, ...] = ()
        if self._peek(skip_newlines=True).kind == TokenKind.KW_ELSE:
            self._advance(skip_newlines=True)
            else_block = self._block()
        end = self._toks[self._pos - 1].span
        return n.If(span=_join(kw.span, end), cond=cond, then_block=then_block, else_block=else_block)

    def _repeat(self) -> n.Repeat:
        kw = self._advance()
        count = self._expression()
        block = self._block()
        end = self._toks[self._pos - 1].span
        return n.Repeat(span=_join(kw.span, end), count=count, block=block)

    def _call_statement(self, top_level: bool) -> n.Statement:
        name_tok = self._advance()
        self._expect(TokenKind.LPAREN, "'('")
        args = self._args()
        close = self._toks[self._pos - 1]
        # Handler form: ')' immediately followed (same statement) by 'as' or '{'.
        nxt = self._peek()
        if nxt.kind in (TokenKind.KW_AS, TokenKind.LBRACE):
            binding = None
            if nxt.kind == TokenKind.KW_AS:
                self._advance()
                binding = self._expect(TokenKind.IDENT, "binding name").lexeme
            block = self._block()
            end = self._toks[self._pos - 1].span
            span = _join(name_tok.span, end)
            if not top_level:
                raise _ParseFail(
                    Diagnostic(
                        "error",
                        E_TOPLEVEL_HANDLER,
                        f"event handler {name_tok.lexeme!r} must appear at top level",
                        name_tok.span,
                    )
                )
            return n.Handler(
                span=span, event_api=name_tok.lexeme, args=args, binding=binding, block=block
            )
        span = _join(name_tok.span, close.span)
        if name_tok.lexeme == "wait" and len(args) == 1 and args[0].name is None:
            return n.Wait(span=span, duration=args[0].value)
        return n.Call(span=span, name=name_tok.lexeme, args=args)

    def _args(self) -> tuple[n.Arg, ...]:
        args: list[n.Arg] = []
        if self._peek(skip_newlines=True).kind == TokenKind.RPAREN:
            self._advance(skip_newlines=True)
            return ()
        while True:
            args.append(self._arg())
            tok = self._peek(skip_newlines=True)
            if tok.kind == TokenKind.COMMA:
                self._advance(skip_newlines=True)
                continue
            if tok.kind == TokenKind.RPAREN:
                self._advance(skip_newlines=True)
                return tuple(args)
            self._fail(f"expected ',' or ')' in argument list, got {tok.lexeme!r}", tok)

    def _arg(self) -> n.Arg:
        tok = self._peek(skip_newlines=True)
        self._skip_separators()
        if (
            tok.kind == TokenKind.IDENT
            and self._toks[self._pos + 1].kind == TokenKind.ASSIGN
        ):
            self._advance()
            self._advance()
            value = self._expression()
            return n.Arg(value=value, name=tok.lexeme, span=_join(tok.span, value.span))
        value = self._expression()
        return n.Arg(value=value, name=None, span=value.span)

    def _expression(self) -> n.Expr:
        left = self._primary()
        tok = self._peek()
        if tok.kind in (TokenKind.EQ, TokenKind.NEQ):
            self._advance()
            right = self._primary()
            return n.Compare(
                span=_join(left.span, right.span), op=tok.lexeme, left=left, right=right
            )
        return left

    def _primary(self) -> n.Expr:
        tok = self._peek()
        if tok.kind == TokenKind.MINUS:
            self._advance()
            num = self._peek()
            if num.kind == TokenKind.INT:
                self._advance()
                return n.IntLit(span=_join(tok.span, num.span), value=-int(num.lexeme))
            if num.kind == TokenKind.FLOAT:
                self._advance()
                return n.FloatLit(span=_join(tok.span, num.span), value=-float(num.lexeme))
            self._fail("expected a number after '-'", num)
        if tok.kind == TokenKind.INT:
            self._advance()
            return n.IntLit(span=tok.span, value=int(tok.lexeme))
        if tok.kind == TokenKind.FLOAT:
            self._advance()
            return n.FloatLit(span=tok.span, value=float(tok.lexeme))
        if tok.kind == TokenKind.STRING:
            self._advance()
            return n.StringLit(span=tok.span, value=str(tok.value))
        if tok.kind == TokenKind.IDENT:
            self._advance()
            if self._peek().kind == TokenKind.LPAREN:
                self._advance()
                args = self._args()
                end = self._toks[self._pos - 1].span
                return n.CallExpr(span=_join(tok.span, end), name=tok.lexeme, args=args)
            return n.VarRef(span=tok.span, name=tok.lexeme)
        self._fail(f"expected an expression, got {tok.lexeme!r}", tok)
        raise AssertionError  # unreachable


def _join(a: SourceSpan, b: SourceSpan) -> SourceSpan:
    return SourceSpan(a.line, a.col, b.end_line, b.end_col)


def _span_of(items: list[n.Statement]) -> SourceSpan:
    return _join(items[0].span, items[-1].span)
