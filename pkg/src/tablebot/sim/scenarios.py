"""Scenario documents: JSON schema validation and the shipped scene fixtures.

A scenario document fully determines a Scene up to seed and noise:

    {
      "id": "...",
      "bounds": [[xmin, xmax], [ymin, ymax], [zmin, zmax]],
      "home": [x, y, z],
      "noise": {"grasp_slip_prob": p, "step_fail_prob": q},   # optional
      "grasp_tol": 0.01,                                       # optional
      "per_task_reset": "all" | ["name", ...],                 # optional
      "objects": [
        {"name", "color", "kind", "position", "dimensions",
         "articulation"?, "binary_state"?, "contains"?}
      ]
    }
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..errors import SchemaError
from ..geometry import Bounds, vec3
from .model import Articulation, KINDS, NoiseConfig, ObjectState, Scene

FIXTURES = (
    "blocks_world",
    "cup_drawer",
    "desktop_organization",
    "lamp_button",
    "containers",
    "rubbish",
    "bookshelf",
    "cupboard",
    "microwave",
)

_REQUIRED_OBJECT_FIELDS = ("name", "color", "kind", "position", "dimensions")


def fixture_path(name: str):
    return resources.files("tablebot.sim").joinpath(f"fixtures/{name}.json")


def load_document(source) -> dict:
    """Accept a dict, a path to a JSON file, or a shipped fixture name."""
    if isinstance(source, dict):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and source.endswith(".json")):
        p = Path(source)
        if not p.exists():
            raise SchemaError(f"scenario file not found: {source}")
        return json.loads(p.read_text())
    if isinstance(source, str):
        if source not in FIXTURES:
            raise SchemaError(
                f"unknown scenario {source!r}; shipped fixtures: {', '.join(FIXTURES)}"
            )
        return json.loads(fixture_path(source).read_text())
    raise SchemaError(f"unsupported scenario source: {type(source).__name__}")


def load_scenario(
    source,
    seed: int = 0,
    noise: NoiseConfig | None = None,
) -> Scene:
    """Build a validated Scene; `noise` overrides the document's noise block."""
    doc = load_document(source)
    for key in ("bounds", "home", "objects"):
        if key not in doc:
            raise SchemaError(f"scenario missing required field {key!r}")
    try:
        bounds = Bounds.from_lists(doc["bounds"])
        home = vec3(*doc["home"])
    except (TypeError, ValueError) as e:
        raise SchemaError(f"bad bounds/home: {e}") from e

    objects: list[ObjectState] = []
    names: set[str] = set()
    contains_links: list[tuple[str, str]] = []
    for entry in doc["objects"]:
        for f in _REQUIRED_OBJECT_FIELDS:
            if f not in entry:
                raise SchemaError(f"object entry missing {f!r}: {entry}")
        name = entry["name"]
        if name in names:
            raise SchemaError(f"duplicate object name {name!r}")
        names.add(name)
        if entry["kind"] not in KINDS:
            raise SchemaError(f"unknown kind {entry['kind']!r} for {name!r}")
        art = None
        if "articulation" in entry:
            try:
                art = Articulation.from_dict(entry["articulation"])
            except (KeyError, TypeError) as e:
                raise SchemaError(f"bad articulation on {name!r}: {e}") from e
        try:
            position = vec3(*entry["position"])
            dimensions = vec3(*entry["dimensions"])
        except (TypeError, ValueError) as e:
            raise SchemaError(f"bad geometry on {name!r}: {e}") from e
        if min(dimensions) <= 0:
            raise SchemaError(f"non-positive dimensions on {name!r}")
        objects.append(
            ObjectState(
                id=name,
                name=name,
                color=entry["color"],
                kind=entry["kind"],
                position=position,
                dimensions=dimensions,
                articulation=art,
                binary_state=entry.get("binary_state"),
            )
        )
        for contained in entry.get("contains", ()):
            contains_links.append((contained, name))

    by_name = {o.name: o for o in objects}
    for contained, container in contains_links:
        if contained not in by_name:
            raise SchemaError(f"{container!r} contains unknown object {contained!r}")
        inner, outer = by_name[contained], by_name[container]
        if not (
            outer.footprint_contains_center(inner)
            and outer.bottom <= inner.position[2] <= outer.top
        ):
            raise SchemaError(
                f"{contained!r} declared inside {container!r} but lies outside its volume"
            )
        inner.support = outer.id

    if noise is None and "noise" in doc:
        try:
            noise = NoiseConfig(**doc["noise"])
        except TypeError as e:
            raise SchemaError(f"bad noise block: {e}") from e

    scene = Scene(
        bounds=bounds,
        home=home,
        objects=objects,
        seed=seed,
        noise=noise,
        grasp_tol=float(doc.get("grasp_tol", 0.01)),
        scenario_id=doc.get("id", ""),
    )
    # Normalize authored poses: free movable objects settle onto whatever is
    # under them (container-declared ones keep their authored pose).
    contained = {inner for inner, _ in contains_links}
    for obj in sorted(objects, key=lambda o: o.position[2]):
        if obj.movable and obj.name not in contained:
            scene._settle(obj)
    scene._validate()
    scene.reset_names = _reset_names(doc, by_name)
    scene.initial_poses = {o.name: o.position for o in objects}
    return scene


def _reset_names(doc: dict, by_name: dict) -> list[str]:
    spec = doc.get("per_task_reset", [])
    if spec == "all":
        return [name for name, o in by_name.items() if o.movable]
    for name in spec:
        if name not in by_name:
            raise SchemaError(f"per_task_reset names unknown object {name!r}")
    return list(spec)


def reset_for_task(scene: Scene) -> None:
    """Return the declared reset objects to their scenario start poses."""
    if not scene.reset_names:
        return
    if scene.gripper.held in scene.reset_names:
        scene.open_gripper()
    for name in scene.reset_names:
        obj = scene.objects[name]
        obj.position = scene.initial_poses[name]
        obj.support = None
    for name in scene.reset_names:
        scene._settle(scene.objects[name])
