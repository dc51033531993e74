"""Object-description sentences compiled to relation predicates.

Preconditions and verification conditions travel as short natural-language
sentences ("the bottom drawer is open", "the cup is on the table"). This
module compiles them against the closed relation vocabulary so they can be
checked mechanically against a scene description. Uncompilable sentences
compile to None (vacuously true), which callers log.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .sim.describe import Relation, SceneDescription
from .sim.model import TABLE

_VACUOUS_MARKERS = ("reachable", "no precondition", "nothing required", "none")

_PATTERNS: tuple[tuple[str, str], ...] = (
    (r"^(?P<s>.+?) is on the table$", "on_table"),
    (r"^(?P<s>.+?) is on top of (?:the )?(?P<o>.+)$", "on"),
    (r"^(?P<s>.+?) is on (?:the )?(?P<o>.+)$", "on"),
    (r"^(?P<s>.+?) is (?:inside|in) (?:the )?(?P<o>.+)$", "inside"),
    (r"^(?P<s>.+?) is open$", "open"),
    (r"^(?P<s>.+?) is closed$", "closed"),
    (r"^(?P<s>.+?) is pressed(?: down)?$", "pressed"),
    (r"^(?P<s>.+?) is (?:switched |turned )?on$", "on_state"),
    (r"^(?P<s>.+?) is to the left of (?:the )?(?P<o>.+)$", "left_of"),
    (r"^(?P<s>.+?) is to the right of (?:the )?(?P<o>.+)$", "right_of"),
    (r"^(?P<s>.+?) is behind (?:the )?(?P<o>.+)$", "behind"),
    (r"^(?P<s>.+?) is in front of (?:the )?(?P<o>.+)$", "in_front_of"),
)


@dataclass(frozen=True)
class Condition:
    """A sentence plus its compiled relation; relation None means vacuous."""

    text: str
    relation: Relation | None

    @property
    def vacuous(self) -> bool:
        return self.relation is None


def _normalize(text: str) -> str:
    t = text.strip().strip(".").lower()
    t = re.sub(r"\s+", " ", t)
    t = re.sub(r"^the ", "", t)
    return t


def compile_condition(text: str) -> Condition:
    t = _normalize(text)
    if not t or any(marker in t for marker in _VACUOUS_MARKERS):
        return Condition(text, None)
    for pattern, rel in _PATTERNS:
        m = re.match(pattern, t)
        if not m:
            continue
        subject = m.group("s").strip()
        if rel == "on_table":
            return Condition(text, Relation(subject, "on", TABLE))
        obj = m.groupdict().get("o")
        obj = re.sub(r"^the ", "", obj.strip()) if obj else None
        return Condition(text, Relation(subject, rel, obj))
    return Condition(text, None)


def condition_holds(cond: Condition, desc: SceneDescription) -> bool:
    """Check a compiled condition against a scene description."""
    if cond.relation is None:
        return True
    r = cond.relation
    if r.relation == "on" and r.object == TABLE:
        # "on the table" is satisfied by resting on the table directly.
        return desc.has(r.subject, "on", TABLE)
    return desc.has(r.subject, r.relation, r.object)
