from .ast import (
    BinOp,
    Call,
    CallExpr,
    Comment,
    Expr,
    Index,
    Let,
    Num,
    Program,
    Stmt,
    Str,
    Var,
    Vec,
    canonical_source,
)
from .analysis import callees_of, validate
from .interp import ExecutionTrace, MAX_CALL_DEPTH, interpret, replay_trace
from .library import (
    BUILTINS,
    CONSTANTS,
    PRIMITIVES,
    SkillDef,
    SkillLibrary,
    add_skill,
    empty_library,
    library_to_json,
    load_library,
    save_library,
)
from .parser import parse, parse_expression

__all__ = [
    "BinOp",
    "BUILTINS",
    "Call",
    "CallExpr",
    "Comment",
    "CONSTANTS",
    "ExecutionTrace",
    "Expr",
    "Index",
    "Let",
    "MAX_CALL_DEPTH",
    "Num",
    "PRIMITIVES",
    "Program",
    "SkillDef",
    "SkillLibrary",
    "Stmt",
    "Str",
    "Var",
    "Vec",
    "add_skill",
    "callees_of",
    "canonical_source",
    "empty_library",
    "interpret",
    "library_to_json",
    "load_library",
    "parse",
    "parse_expression",
    "replay_trace",
    "save_library",
    "validate",
]
