"""AST for the restricted skill language.

The language is deliberately tiny: straight-line programs of assignments
and calls over scalars, strings, and 3-vectors. No loops, no conditionals,
no recursion. Every node serializes to a canonical text form (one statement
per line, normalized spacing, decimal literals with at most six fractional
digits) and the canonical form re-parses to an equal tree.
"""

from __future__ import annotations

from dataclasses import dataclass


def format_number(v: float) -> str:
    s = f"{float(v):.6f}".rstrip("0").rstrip(".")
    if s in ("", "-0"):
        return "0"
    return s


def quote_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


# --- expressions ----------------------------------------------------------


class Expr:
    def serialize(self) -> str:
        raise NotImplementedError

    precedence = 3  # atoms bind tightest


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def serialize(self) -> str:
        return format_number(self.value)


@dataclass(frozen=True)
class Str(Expr):
    value: str

    def serialize(self) -> str:
        return quote_string(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def serialize(self) -> str:
        return self.name


@dataclass(frozen=True)
class Vec(Expr):
    x: Expr
    y: Expr
    z: Expr

    def serialize(self) -> str:
        return f"({self.x.serialize()}, {self.y.serialize()}, {self.z.serialize()})"


@dataclass(frozen=True)
class Index(Expr):
    base: Expr
    index: int

    def serialize(self) -> str:
        base = self.base.serialize()
        if self.base.precedence < 3:
            base = f"({base})"
        return f"{base}[{self.index}]"


@dataclass(frozen=True)
class CallExpr(Expr):
    callee: str
    args: tuple[Expr, ...]

    def serialize(self) -> str:
        return f"{self.callee}({', '.join(a.serialize() for a in self.args)})"


BINOPS = ("+", "-", "*", "/")
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def precedence(self) -> int:
        return _PRECEDENCE[self.op]

    def serialize(self) -> str:
        lhs = self.left.serialize()
        if self.left.precedence < self.precedence:
            lhs = f"({lhs})"
        rhs = self.right.serialize()
        # Right operands at equal precedence keep explicit parentheses so
        # left-associative reparsing reproduces the tree.
        if self.right.precedence <= self.precedence:
            rhs = f"({rhs})"
        return f"{lhs} {self.op} {rhs}"


# --- statements -----------------------------------------------------------


class Stmt:
    def serialize(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Let(Stmt):
    name: str
    expr: Expr

    def serialize(self) -> str:
        return f"{self.name} = {self.expr.serialize()}"


@dataclass(frozen=True)
class Call(Stmt):
    callee: str
    args: tuple[Expr, ...]

    def serialize(self) -> str:
        return f"{self.callee}({', '.join(a.serialize() for a in self.args)})"


@dataclass(frozen=True)
class Comment(Stmt):
    text: str

    def serialize(self) -> str:
        return f"# {self.text}" if self.text else "#"


@dataclass(frozen=True)
class Program:
    statements: tuple[Stmt, ...]

    def serialize(self) -> str:
        return "\n".join(s.serialize() for s in self.statements)

    def __len__(self) -> int:
        return len(self.statements)


def canonical_source(program: Program) -> str:
    return program.serialize()
