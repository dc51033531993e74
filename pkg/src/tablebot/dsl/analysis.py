"""Static checks for skill programs: name resolution, arity, and typing.

Types form the tiny lattice {num, str, vec, unknown}; skill parameters are
unknown until runtime, so the checker only rejects provable mistakes.
Everything it raises is an InterpError, keeping the interpretation /
grounding split exact: if validate passes, the only failures left are
world-model ones.
"""

from __future__ import annotations

from ..errors import InterpError
from .ast import BinOp, Call, CallExpr, Comment, Expr, Index, Let, Num, Program, Str, Var, Vec
from .library import BUILTINS, CONSTANTS, PRIMITIVES, SkillLibrary

UNKNOWN = "unknown"


def callees_of(program: Program) -> tuple[str, ...]:
    """All callee names referenced by a program, in first-use order."""
    seen: dict[str, None] = {}

    def walk_expr(e: Expr) -> None:
        if isinstance(e, CallExpr):
            seen.setdefault(e.callee)
            for a in e.args:
                walk_expr(a)
        elif isinstance(e, BinOp):
            walk_expr(e.left)
            walk_expr(e.right)
        elif isinstance(e, Index):
            walk_expr(e.base)
        elif isinstance(e, Vec):
            walk_expr(e.x)
            walk_expr(e.y)
            walk_expr(e.z)

    for stmt in program.statements:
        if isinstance(stmt, Call):
            seen.setdefault(stmt.callee)
            for a in stmt.args:
                walk_expr(a)
        elif isinstance(stmt, Let):
            walk_expr(stmt.expr)
    return tuple(seen)


def validate(
    program: Program,
    lib: SkillLibrary,
    params: tuple[str, ...] | list[str] = (),
) -> None:
    """Raise InterpError unless every name resolves, every call has the right
    arity, and no statically-known type is misused."""
    env: dict[str, str] = {p: UNKNOWN for p in params}

    def resolve_call(callee: str, args: tuple[Expr, ...], as_expr: bool) -> str:
        if callee in BUILTINS:
            sig = BUILTINS[callee]
        elif callee in PRIMITIVES:
            sig = PRIMITIVES[callee]
        elif callee in lib.skills:
            sig = lib.skills[callee]
        else:
            raise InterpError("UndefinedSymbol", f"call to undefined function {callee!r}")
        if len(args) != sig.arity:
            raise InterpError(
                "Arity",
                f"{callee}() takes {sig.arity} argument(s), got {len(args)}",
            )
        arg_types = [infer(a) for a in args]
        expected = getattr(sig, "param_types", None)
        if expected:
            for i, (got, want) in enumerate(zip(arg_types, expected)):
                if got != UNKNOWN and got != want:
                    raise InterpError(
                        "TypeMismatch",
                        f"argument {i + 1} of {callee}() must be {want}, got {got}",
                    )
        returns = getattr(sig, "returns", "unit")
        if as_expr and returns == "unit":
            raise InterpError(
                "TypeMismatch",
                f"{callee}() returns no value and cannot be used in an expression",
            )
        return returns

    def infer(e: Expr) -> str:
        if isinstance(e, Num):
            return "num"
        if isinstance(e, Str):
            return "str"
        if isinstance(e, Var):
            if e.name in CONSTANTS:
                return CONSTANTS[e.name]
            if e.name not in env:
                raise InterpError("UndefinedSymbol", f"use of undefined variable {e.name!r}")
            return env[e.name]
        if isinstance(e, Vec):
            for comp in (e.x, e.y, e.z):
                t = infer(comp)
                if t not in ("num", UNKNOWN):
                    raise InterpError(
                        "TypeMismatch", f"vector components must be scalars, got {t}"
                    )
            return "vec"
        if isinstance(e, Index):
            if e.index not in (0, 1, 2):
                raise InterpError(
                    "TypeMismatch", f"index {e.index} out of range; vectors index 0..2"
                )
            base = infer(e.base)
            if base not in ("vec", UNKNOWN):
                raise InterpError("TypeMismatch", f"cannot index a {base} value")
            return "num"
        if isinstance(e, BinOp):
            lt, rt = infer(e.left), infer(e.right)
            for t in (lt, rt):
                if t == "str":
                    raise InterpError(
                        "TypeMismatch", f"operator {e.op!r} not defined for strings"
                    )
            if "vec" in (lt, rt):
                return "vec"
            if lt == rt == "num":
                return "num"
            return UNKNOWN
        if isinstance(e, CallExpr):
            return resolve_call(e.callee, e.args, as_expr=True)
        raise TypeError(f"unhandled expression node {e!r}")

    for stmt in program.statements:
        if isinstance(stmt, Comment):
            continue
        if isinstance(stmt, Let):
            if stmt.name in CONSTANTS:
                raise InterpError(
                    "TypeMismatch", f"cannot rebind workspace constant {stmt.name!r}"
                )
            env[stmt.name] = infer(stmt.expr)
        elif isinstance(stmt, Call):
            resolve_call(stmt.callee, stmt.args, as_expr=False)
        else:
            raise TypeError(f"unhandled statement node {stmt!r}")
