"""Recursive-descent parser for the skill language.

Grammar (also published in docs/grammar.ebnf):

    program    = { line } ;
    line       = [ statement | comment ] NEWLINE ;
    statement  = let | call ;
    let        = IDENT "=" expr ;
    call       = IDENT "(" [ expr { "," expr } ] ")" ;
    comment    = "#" TEXT ;
    expr       = term { ("+" | "-") term } ;
    term       = postfix { ("*" | "/") postfix } ;
    postfix    = primary { "[" INTEGER "]" } ;
    primary    = NUMBER | "-" NUMBER | STRING
               | IDENT [ "(" [ expr { "," expr } ] ")" ]
               | "(" expr "," expr "," expr ")"      (* vector literal *)
               | "(" expr ")" ;                      (* grouping *)

Comments occupy a whole line; numbers are decimal; strings are single- or
double-quoted with backslash escapes.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InterpError
from .ast import BinOp, Call, CallExpr, Comment, Expr, Index, Let, Num, Program, Stmt, Str, Var, Vec

_SYMBOLS = ("=", "(", ")", "[", "]", ",", "+", "-", "*", "/")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER STRING SYMBOL COMMENT NEWLINE EOF
    value: str
    line: int
    column: int


def _error(message: str, line: int, column: int) -> InterpError:
    return InterpError("Parse", message, line, column)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    line_has_code = False
    while i < n:
        c = text[i]
        if c == "\n":
            tokens.append(Token("NEWLINE", "\n", line, col))
            line += 1
            col = 1
            i += 1
            line_has_code = False
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            if line_has_code:
                raise _error("comments must occupy their own line", line, col)
            start = i
            while i < n and text[i] != "\n":
                i += 1
            tokens.append(Token("COMMENT", text[start + 1 : i].strip(), line, col))
            col += i - start
            continue
        line_has_code = True
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            start, startcol = i, col
            seen_dot = False
            while i < n and (text[i].isdigit() or (text[i] == "." and not seen_dot)):
                seen_dot = seen_dot or text[i] == "."
                i += 1
                col += 1
            tokens.append(Token("NUMBER", text[start:i], line, startcol))
            continue
        if c.isalpha() or c == "_":
            start, startcol = i, col
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
                col += 1
            tokens.append(Token("IDENT", text[start:i], line, startcol))
            continue
        if c in "'\"":
            quote, startcol = c, col
            i += 1
            col += 1
            out = []
            while True:
                if i >= n or text[i] == "\n":
                    raise _error("unterminated string literal", line, startcol)
                ch = text[i]
                if ch == "\\":
                    if i + 1 >= n:
                        raise _error("dangling escape in string literal", line, col)
                    nxt = text[i + 1]
                    if nxt not in ("\\", "'", '"'):
                        raise _error(f"unsupported escape \\{nxt}", line, col)
                    out.append(nxt)
                    i += 2
                    col += 2
                    continue
                if ch == quote:
                    i += 1
                    col += 1
                    break
                out.append(ch)
                i += 1
                col += 1
            tokens.append(Token("STRING", "".join(out), line, startcol))
            continue
        if c in _SYMBOLS:
            tokens.append(Token("SYMBOL", c, line, col))
            i += 1
            col += 1
            continue
        raise _error(f"unexpected character {c!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect_symbol(self, sym: str) -> Token:
        tok = self.cur
        if tok.kind != "SYMBOL" or tok.value != sym:
            raise _error(f"expected {sym!r}, found {tok.value!r}", tok.line, tok.column)
        return self.advance()

    def at_symbol(self, *syms: str) -> bool:
        return self.cur.kind == "SYMBOL" and self.cur.value in syms

    # -- statements --

    def program(self) -> Program:
        statements: list[Stmt] = []
        while self.cur.kind != "EOF":
            if self.cur.kind == "NEWLINE":
                self.advance()
                continue
            statements.append(self.statement())
            if self.cur.kind not in ("NEWLINE", "EOF"):
                tok = self.cur
                raise _error(
                    f"unexpected {tok.value!r} after statement", tok.line, tok.column
                )
        return Program(tuple(statements))

    def statement(self) -> Stmt:
        tok = self.cur
        if tok.kind == "COMMENT":
            self.advance()
            return Comment(tok.value)
        if tok.kind != "IDENT":
            raise _error(
                f"expected a statement, found {tok.value or tok.kind!r}", tok.line, tok.column
            )
        name = self.advance().value
        if self.at_symbol("="):
            self.advance()
            return Let(name, self.expression())
        if self.at_symbol("("):
            args = self.call_args()
            return Call(name, args)
        raise _error(
            f"expected '=' or '(' after {name!r}", self.cur.line, self.cur.column
        )

    def call_args(self) -> tuple[Expr, ...]:
        self.expect_symbol("(")
        args: list[Expr] = []
        if not self.at_symbol(")"):
            args.append(self.expression())
            while self.at_symbol(","):
                self.advance()
                args.append(self.expression())
        self.expect_symbol(")")
        return tuple(args)

    # -- expressions --

    def expression(self) -> Expr:
        left = self.term()
        while self.at_symbol("+", "-"):
            op = self.advance().value
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.postfix()
        while self.at_symbol("*", "/"):
            op = self.advance().value
            left = BinOp(op, left, self.postfix())
        return left

    def postfix(self) -> Expr:
        node = self.primary()
        while self.at_symbol("["):
            self.advance()
            tok = self.cur
            if tok.kind != "NUMBER" or "." in tok.value:
                raise _error("index must be an integer literal", tok.line, tok.column)
            self.advance()
            self.expect_symbol("]")
            node = Index(node, int(tok.value))
        return node

    def primary(self) -> Expr:
        tok = self.cur
        if tok.kind == "NUMBER":
            self.advance()
            return Num(float(tok.value))
        if tok.kind == "SYMBOL" and tok.value == "-" and self._peek_is_number():
            self.advance()
            num = self.advance()
            return Num(-float(num.value))
        if tok.kind == "STRING":
            self.advance()
            return Str(tok.value)
        if tok.kind == "IDENT":
            self.advance()
            if self.at_symbol("("):
                return CallExpr(tok.value, self.call_args())
            return Var(tok.value)
        if self.at_symbol("("):
            self.advance()
            first = self.expression()
            if self.at_symbol(","):
                self.advance()
                second = self.expression()
                self.expect_symbol(",")
                third = self.expression()
                self.expect_symbol(")")
                return Vec(first, second, third)
            self.expect_symbol(")")
            return first
        raise _error(
            f"expected an expression, found {tok.value or tok.kind!r}", tok.line, tok.column
        )

    def _peek_is_number(self) -> bool:
        return self.tokens[self.pos + 1].kind == "NUMBER"


def parse(text: str) -> Program:
    """Parse program text; raises InterpError(Parse) with location on failure."""
    tokens = [t for t in tokenize(text)]
    return _Parser(tokens).program()


def parse_expression(text: str) -> Expr:
    """Parse a single expression (used by verifier conditions)."""
    tokens = tokenize(text)
    p = _Parser(tokens)
    while p.cur.kind == "NEWLINE":
        p.advance()
    expr = p.expression()
    while p.cur.kind == "NEWLINE":
        p.advance()
    if p.cur.kind != "EOF":
        tok = p.cur
        raise _error(f"unexpected {tok.value!r} after expression", tok.line, tok.column)
    return expr
