"""Skill definitions, the skill library, and its persistent JSON format.

The library is an insertion-ordered set of named skill programs over a
fixed primitive action surface. Because a new skill may only call names
that already exist, insertion order is automatically a topological order
of the dependency DAG. Libraries are treated as immutable values:
add_skill returns a new library.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InterpError, SchemaError
from .ast import Program, canonical_source


@dataclass(frozen=True)
class PrimitiveSig:
    name: str
    params: tuple[str, ...]
    param_types: tuple[str, ...]
    returns: str  # "unit" | "vec" | "num"
    description: str

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def signature(self) -> str:
        return f"{self.name}({', '.join(self.params)})"


PRIMITIVES: dict[str, PrimitiveSig] = {
    p.name: p
    for p in (
        PrimitiveSig(
            "movep",
            ("position",),
            ("vec",),
            "unit",
            "Move the end-effector in a straight line to the given (x, y, z) position.",
        ),
        PrimitiveSig(
            "close_gripper",
            (),
            (),
            "unit",
            "Close the gripper to grasp the object under it. The gripper is initially open.",
        ),
        PrimitiveSig(
            "open_gripper",
            (),
            (),
            "unit",
            "Open the gripper to place whatever it is holding.",
        ),
        PrimitiveSig(
            "get_obj_position",
            ("object_name",),
            ("str",),
            "vec",
            "Get the center position of the named object as an (x, y, z) tuple.",
        ),
        PrimitiveSig(
            "get_obj_dimensions",
            ("object_name",),
            ("str",),
            "vec",
            "Get the (width, depth, height) dimensions of the named object.",
        ),
        PrimitiveSig(
            "go_home",
            (),
            (),
            "unit",
            "Move the gripper back to the home position.",
        ),
    )
}

# Pure value-level helpers available in any expression.
BUILTINS: dict[str, PrimitiveSig] = {
    p.name: p
    for p in (
        PrimitiveSig("abs", ("value",), ("num",), "num", "Absolute value of a scalar."),
        PrimitiveSig(
            "dist",
            ("a", "b"),
            ("vec", "vec"),
            "num",
            "Euclidean distance between two (x, y, z) positions.",
        ),
    )
}

# Workspace-limit constants bound from the live scene at execution time.
CONSTANTS: dict[str, str] = {
    "BOUNDS_MIN": "vec",
    "BOUNDS_MAX": "vec",
}

_LIBRARY_FIELDS = ("Type", "Description", "Input", "Output", "Related functions", "Example", "Code")


@dataclass(frozen=True)
class SkillDef:
    name: str
    params: tuple[str, ...]
    description: str
    input_doc: str
    output_doc: str
    related: tuple[str, ...]
    example: str
    body: Program

    @property
    def signature(self) -> str:
        return f"{self.name}({', '.join(self.params)})"

    @property
    def arity(self) -> int:
        return len(self.params)

    def to_entry(self) -> dict:
        return {
            "Type": "function",
            "Description": self.description,
            "Input": self.input_doc,
            "Output": self.output_doc,
            "Related functions": ", ".join(f"{n}()" for n in self.related),
            "Example": self.example,
            "Code": canonical_source(self.body),
        }


def parse_signature(sig: str) -> tuple[str, tuple[str, ...]]:
    sig = sig.strip()
    if not sig.endswith(")") or "(" not in sig:
        raise SchemaError(f"bad skill signature {sig!r}")
    name, _, rest = sig.partition("(")
    name = name.strip()
    params = tuple(p.strip() for p in rest[:-1].split(",") if p.strip())
    if not name.isidentifier():
        raise SchemaError(f"bad skill name in signature {sig!r}")
    for p in params:
        if not p.isidentifier():
            raise SchemaError(f"bad parameter {p!r} in signature {sig!r}")
    return name, params


@dataclass(frozen=True)
class SkillLibrary:
    skills: dict[str, SkillDef] = field(default_factory=dict)  # insertion-ordered

    def __contains__(self, name: str) -> bool:
        return name in self.skills or name in PRIMITIVES

    def skill_names(self) -> list[str]:
        return list(self.skills)

    def arity_of(self, callee: str) -> int | None:
        if callee in PRIMITIVES:
            return PRIMITIVES[callee].arity
        if callee in BUILTINS:
            return BUILTINS[callee].arity
        if callee in self.skills:
            return self.skills[callee].arity
        return None

    def dag(self) -> dict[str, tuple[str, ...]]:
        """Dependency edges skill -> callees (primitives included)."""
        from .analysis import callees_of

        return {name: callees_of(d.body) for name, d in self.skills.items()}

    def signature_listing(self) -> str:
        """Human-readable catalogue embedded into planner/reflector prompts."""
        lines = ["Primitive functions:"]
        for p in PRIMITIVES.values():
            lines.append(f"- {p.signature}: {p.description}")
        for b in BUILTINS.values():
            lines.append(f"- {b.signature}: {b.description}")
        lines.append(
            "- BOUNDS_MIN, BOUNDS_MAX: (x, y, z) corners of the available workspace; "
            "all positions must stay inside."
        )
        if self.skills:
            lines.append("Acquired skills:")
            for d in self.skills.values():
                lines.append(f"- {d.signature}: {d.description}")
        return "\n".join(lines)


def add_skill(lib: SkillLibrary, skill: SkillDef) -> SkillLibrary:
    """Extend the library; the new skill may only call already-known names."""
    from .analysis import validate

    if skill.name in PRIMITIVES or skill.name in BUILTINS or skill.name in CONSTANTS:
        raise InterpError("UndefinedSymbol", f"{skill.name!r} shadows a primitive name")
    if skill.name in lib.skills:
        raise InterpError("UndefinedSymbol", f"skill {skill.name!r} already exists")
    if len(set(skill.params)) != len(skill.params):
        raise InterpError("UndefinedSymbol", f"duplicate parameter in {skill.signature}")
    validate(skill.body, lib, skill.params)
    new = dict(lib.skills)
    new[skill.name] = skill
    return SkillLibrary(new)


def empty_library() -> SkillLibrary:
    return SkillLibrary({})


def save_library(lib: SkillLibrary, path: str | Path) -> None:
    Path(path).write_text(library_to_json(lib))


def library_to_json(lib: SkillLibrary) -> str:
    doc = {d.signature: d.to_entry() for d in lib.skills.values()}
    return json.dumps(doc, indent=2) + "\n"


def load_library(source: str | Path | dict) -> SkillLibrary:
    if isinstance(source, dict):
        doc = source
    else:
        p = Path(source)
        if not p.exists():
            raise SchemaError(f"library file not found: {source}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise SchemaError(f"library file is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError("library document must be a JSON object keyed by signature")
    lib = empty_library()
    for sig, entry in doc.items():
        name, params = parse_signature(sig)
        missing = [f for f in ("Description", "Code") if f not in entry]
        if missing:
            raise SchemaError(f"skill {name!r} missing fields {missing}")
        unknown = [f for f in entry if f not in _LIBRARY_FIELDS]
        if unknown:
            raise SchemaError(f"skill {name!r} has unknown fields {unknown}")
        from .parser import parse

        try:
            body = parse(entry["Code"])
        except InterpError as e:
            raise SchemaError(f"skill {name!r} body failed to parse: {e}") from e
        related = tuple(
            part.strip().removesuffix("()")
            for part in entry.get("Related functions", "").split(",")
            if part.strip()
        )
        skill = SkillDef(
            name=name,
            params=params,
            description=entry["Description"],
            input_doc=entry.get("Input", ""),
            output_doc=entry.get("Output", ""),
            related=related,
            example=entry.get("Example", ""),
            body=body,
        )
        try:
            lib = add_skill(lib, skill)
        except InterpError as e:
            raise SchemaError(f"skill {name!r} failed validation on load: {e}") from e
    return lib
