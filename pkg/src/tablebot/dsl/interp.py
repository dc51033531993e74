"""Interpreter: runs validated skill programs against a Scene.

Primitive calls dispatch straight to scene methods and are recorded in an
execution trace; skill calls expand through their bodies with a bounded
call depth. Every runtime failure is a GroundError carrying the top-level
statement index, preserving the interpretation/grounding partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import GroundError
from ..sim.model import Scene
from .ast import BinOp, Call, CallExpr, Comment, Expr, Index, Let, Num, Program, Str, Var, Vec
from .library import BUILTINS, PRIMITIVES, SkillLibrary

Value = float | str | tuple  # tuple = 3-vector

MAX_CALL_DEPTH = 16


@dataclass
class PrimitiveCall:
    name: str
    args: list

    def to_dict(self) -> dict:
        return {"name": self.name, "args": self.args}


@dataclass
class ExecutionTrace:
    records: list[PrimitiveCall] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def to_list(self) -> list[dict]:
        return [r.to_dict() for r in self.records]


def _fault(message: str) -> GroundError:
    return GroundError("ExogenousFault", message)


def _as_vec(v: Value, what: str) -> tuple:
    if isinstance(v, tuple) and len(v) == 3:
        return v
    raise _fault(f"{what} must be an (x, y, z) value, got {v!r}")


def _as_num(v: Value, what: str) -> float:
    if isinstance(v, float):
        return v
    raise _fault(f"{what} must be a number, got {v!r}")


def _as_str(v: Value, what: str) -> str:
    if isinstance(v, str):
        return v
    raise _fault(f"{what} must be an object name string, got {v!r}")


def _check_finite(v: float) -> float:
    if not math.isfinite(v):
        raise _fault("arithmetic produced a non-finite value")
    return v


def _arith(op: str, a: float, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0.0:
        raise _fault("division by zero")
    return a / b


class _Frame:
    __slots__ = ("env",)

    def __init__(self, env: dict):
        self.env = env


class Interpreter:
    def __init__(self, lib: SkillLibrary, scene: Scene):
        self.lib = lib
        self.scene = scene
        self.trace = ExecutionTrace()
        self.statement_index = -1

    # -- expression evaluation --

    def eval(self, expr: Expr, frame: _Frame) -> Value:
        if isinstance(expr, Num):
            return float(expr.value)
        if isinstance(expr, Str):
            return expr.value
        if isinstance(expr, Var):
            if expr.name == "BOUNDS_MIN":
                return self.scene.bounds.min_corner
            if expr.name == "BOUNDS_MAX":
                return self.scene.bounds.max_corner
            try:
                return frame.env[expr.name]
            except KeyError:
                raise _fault(f"unbound variable {expr.name!r} at runtime") from None
        if isinstance(expr, Vec):
            return (
                _as_num(self.eval(expr.x, frame), "vector component"),
                _as_num(self.eval(expr.y, frame), "vector component"),
                _as_num(self.eval(expr.z, frame), "vector component"),
            )
        if isinstance(expr, Index):
            base = _as_vec(self.eval(expr.base, frame), "indexed value")
            return base[expr.index]
        if isinstance(expr, BinOp):
            left = self.eval(expr.left, frame)
            right = self.eval(expr.right, frame)
            if isinstance(left, str) or isinstance(right, str):
                raise _fault(f"operator {expr.op!r} not defined for strings")
            if isinstance(left, tuple) and isinstance(right, tuple):
                return tuple(
                    _check_finite(_arith(expr.op, a, b)) for a, b in zip(left, right)
                )
            if isinstance(left, tuple):
                return tuple(_check_finite(_arith(expr.op, a, right)) for a in left)
            if isinstance(right, tuple):
                return tuple(_check_finite(_arith(expr.op, left, b)) for b in right)
            return _check_finite(_arith(expr.op, left, right))
        if isinstance(expr, CallExpr):
            return self.call(expr.callee, [self.eval(a, frame) for a in expr.args], depth=0)
        raise TypeError(f"unhandled expression node {expr!r}")

    # -- calls --

    def call(self, callee: str, args: list[Value], depth: int) -> Value:
        if callee in BUILTINS:
            return self._builtin(callee, args)
        if callee in PRIMITIVES:
            return self._primitive(callee, args)
        skill = self.lib.skills.get(callee)
        if skill is None:
            raise _fault(f"call to unknown function {callee!r} at runtime")
        if depth + 1 > MAX_CALL_DEPTH:
            raise _fault(f"skill call depth exceeded {MAX_CALL_DEPTH}")
        frame = _Frame(dict(zip(skill.params, args)))
        self._run_body(skill.body, frame, depth + 1)
        return None

    def _builtin(self, callee: str, args: list[Value]) -> Value:
        if callee == "abs":
            return abs(_as_num(args[0], "abs() argument"))
        if callee == "dist":
            a = _as_vec(args[0], "dist() argument")
            b = _as_vec(args[1], "dist() argument")
            return math.dist(a, b)
        raise TypeError(f"unhandled builtin {callee}")

    def _primitive(self, callee: str, args: list[Value]) -> Value:
        result: Value = None
        if callee == "movep":
            target = _as_vec(args[0], "movep() target")
            self.scene.movep(target)
            recorded = [list(target)]
        elif callee == "close_gripper":
            self.scene.close_gripper()
            recorded = []
        elif callee == "open_gripper":
            self.scene.open_gripper()
            recorded = []
        elif callee == "get_obj_position":
            name = _as_str(args[0], "get_obj_position() argument")
            result = self.scene.get_obj_position(name)
            recorded = [name]
        elif callee == "get_obj_dimensions":
            name = _as_str(args[0], "get_obj_dimensions() argument")
            result = self.scene.get_obj_dimensions(name)
            recorded = [name]
        elif callee == "go_home":
            self.scene.go_home()
            recorded = []
        else:
            raise TypeError(f"unhandled primitive {callee}")
        self.trace.records.append(PrimitiveCall(callee, recorded))
        return result

    # -- statements --

    def _run_body(self, program: Program, frame: _Frame, depth: int) -> None:
        for stmt in program.statements:
            if isinstance(stmt, Comment):
                continue
            if isinstance(stmt, Let):
                frame.env[stmt.name] = self.eval(stmt.expr, frame)
            elif isinstance(stmt, Call):
                self.call(stmt.callee, [self.eval(a, frame) for a in stmt.args], depth)
            else:
                raise TypeError(f"unhandled statement node {stmt!r}")

    def run(
        self,
        program: Program,
        args: dict[str, Value] | None = None,
        env: dict | None = None,
    ) -> ExecutionTrace:
        """Execute top-level statements; pass `env` to share bindings (and
        keep accumulating the same trace) across successive programs."""
        frame = _Frame(env if env is not None else dict(args or {}))
        for i, stmt in enumerate(program.statements):
            self.statement_index = i
            try:
                if isinstance(stmt, Comment):
                    continue
                if isinstance(stmt, Let):
                    frame.env[stmt.name] = self.eval(stmt.expr, frame)
                elif isinstance(stmt, Call):
                    self.call(stmt.callee, [self.eval(a, frame) for a in stmt.args], depth=0)
            except GroundError as e:
                raise GroundError(e.kind, e.message, step_index=i) from e
        return self.trace


def interpret(
    program: Program,
    args: dict[str, Value] | None,
    lib: SkillLibrary,
    scene: Scene,
) -> ExecutionTrace:
    """Execute a validated program; returns the primitive-call trace.

    GroundErrors propagate with the index of the offending top-level
    statement in `step_index`.
    """
    return Interpreter(lib, scene).run(program, args)


def replay_trace(trace_records: list[dict], lib: SkillLibrary, scene: Scene) -> None:
    """Re-apply a recorded primitive sequence to a scene."""
    interp = Interpreter(lib, scene)
    for rec in trace_records:
        name, args = rec["name"], rec["args"]
        values = [tuple(a) if isinstance(a, list) else a for a in args]
        interp._primitive(name, values)
