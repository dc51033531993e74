"""Ground-truth scene descriptions.

Produces the structured observation the agent loops consume instead of
camera pixels: visible objects with colors, spatial relations derived
purely from geometry and joint state, and a deterministic natural-language
summary. Objects inside a closed drawer are omitted entirely, which is what
makes find-the-cup episodes non-trivial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import OPEN_FRACTION, ObjectState, Scene, TABLE

RELATIONS = (
    "on",
    "inside",
    "left_of",
    "right_of",
    "behind",
    "in_front_of",
    "open",
    "closed",
    "pressed",
    "on_state",
)

# Minimum center gap (m) before a directional relation is reported.
DIRECTIONAL_GAP = 0.03
# Distance from a workspace edge (m) that counts as "near the edge".
EDGE_ZONE = 0.08


@dataclass(frozen=True)
class Relation:
    subject: str
    relation: str
    object: str | None = None

    def to_dict(self) -> dict:
        return {"subject": self.subject, "relation": self.relation, "object": self.object}


@dataclass
class SceneDescription:
    text: str
    objects: list[dict] = field(default_factory=list)  # {"name", "color"}
    relations: list[Relation] = field(default_factory=list)

    def object_names(self) -> list[str]:
        return [o["name"] for o in self.objects]

    def has(self, subject: str, relation: str, obj: str | None = None) -> bool:
        return any(
            r.subject == subject and r.relation == relation and (obj is None or r.object == obj)
            for r in self.relations
        )

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "objects": self.objects,
            "relations": [r.to_dict() for r in self.relations],
        }


def describe(scene: Scene) -> SceneDescription:
    visible = sorted(scene.visible_objects(), key=lambda o: o.name)
    relations: list[Relation] = []

    for obj in visible:
        support = scene.objects.get(obj.support) if obj.support else None
        if support is not None and not scene.occluded(support):
            relations.append(Relation(obj.name, "on", support.name))
        elif obj.support is None:
            relations.append(Relation(obj.name, "on", TABLE))
        container = _containing_volume(scene, obj, visible)
        if container is not None:
            relations.append(Relation(obj.name, "inside", container.name))

    for obj in visible:
        if obj.articulation is not None:
            frac = obj.articulation.fraction
            if frac >= OPEN_FRACTION:
                relations.append(Relation(obj.name, "open"))
            elif frac <= 1.0 - OPEN_FRACTION:
                relations.append(Relation(obj.name, "closed"))
        if obj.kind == "button" and obj.binary_state:
            relations.append(Relation(obj.name, "pressed"))
        if obj.kind == "lamp" and obj.binary_state:
            relations.append(Relation(obj.name, "on_state"))

    top_level = [o for o in visible if o.support is None]
    for a in top_level:
        for b in top_level:
            if a.name >= b.name:
                continue
            if a.position[1] < b.position[1] - DIRECTIONAL_GAP:
                relations.append(Relation(a.name, "left_of", b.name))
            elif a.position[1] > b.position[1] + DIRECTIONAL_GAP:
                relations.append(Relation(a.name, "right_of", b.name))
            if a.position[0] > b.position[0] + DIRECTIONAL_GAP:
                relations.append(Relation(a.name, "behind", b.name))
            elif a.position[0] < b.position[0] - DIRECTIONAL_GAP:
                relations.append(Relation(a.name, "in_front_of", b.name))

    objects = [{"name": o.name, "color": o.color} for o in visible]
    return SceneDescription(text=_summary(scene, visible, relations), objects=objects, relations=relations)


def _containing_volume(
    scene: Scene, obj: ObjectState, visible: list[ObjectState]
) -> ObjectState | None:
    """Innermost container/drawer whose footprint holds obj's center and whose
    vertical extent includes obj's center."""
    best: ObjectState | None = None
    for cand in visible:
        if cand.id == obj.id or cand.kind not in ("container", "drawer_unit"):
            continue
        if not cand.footprint_contains_center(obj):
            continue
        if not (cand.bottom <= obj.position[2] <= cand.top):
            continue
        if best is None or cand.top - cand.bottom < best.top - best.bottom:
            best = cand
    return best


def _zone_phrase(scene: Scene, obj: ObjectState) -> str:
    (xl, xh) = scene.bounds.x_range
    (yl, yh) = scene.bounds.y_range
    parts = []
    if obj.position[1] <= yl + EDGE_ZONE:
        parts.append("near the left edge")
    elif obj.position[1] >= yh - EDGE_ZONE:
        parts.append("near the right edge")
    elif obj.position[0] <= xl + EDGE_ZONE:
        parts.append("near the front edge")
    elif obj.position[0] >= xh - EDGE_ZONE:
        parts.append("near the back edge")
    else:
        third_y = (yh - yl) / 3
        if obj.position[1] < yl + third_y:
            parts.append("on the left side")
        elif obj.position[1] > yh - third_y:
            parts.append("on the right side")
        else:
            parts.append("in the middle")
    return parts[0]


def _summary(scene: Scene, visible: list[ObjectState], relations: list[Relation]) -> str:
    if not visible:
        return "The table is empty; no objects are visible."
    listing = ", ".join(_article(f"{o.color} {_noun(o)}") for o in visible)
    lines = [f"On the table there are {len(visible)} visible objects: {listing}."]
    rel_by_subject = {}
    for r in relations:
        rel_by_subject.setdefault(r.subject, []).append(r)
    for obj in visible:
        clauses = [f"The {obj.name} is {_zone_phrase(scene, obj)}"]
        for r in rel_by_subject.get(obj.name, []):
            if r.relation == "on" and r.object != TABLE:
                clauses.append(f"on top of the {r.object}")
            elif r.relation == "inside":
                clauses.append(f"inside the {r.object}")
            elif r.relation == "open":
                clauses.append("open")
            elif r.relation == "closed":
                clauses.append("closed")
            elif r.relation == "pressed":
                clauses.append("pressed down")
            elif r.relation == "on_state":
                clauses.append("switched on")
        lines.append(", ".join(clauses) + ".")
    return " ".join(lines)


def _article(phrase: str) -> str:
    return f"an {phrase}" if phrase[:1].lower() in "aeiou" else f"a {phrase}"


def _noun(obj: ObjectState) -> str:
    return obj.name if obj.color.lower() not in obj.name.lower() else obj.name.replace(
        obj.color.lower(), ""
    ).strip() or obj.name
