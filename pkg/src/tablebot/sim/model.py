"""Kinematic tabletop world model.

Quasi-static by design: objects only move when carried or when they settle
after release; the only articulation is a prismatic joint (drawers and
sliding doors). The robot surface is exactly six primitives (movep,
close_gripper, open_gripper, get_obj_position, get_obj_dimensions, go_home)
plus press_contact for button scenes, all raising GroundError on misuse so
the repair loop upstream can react.

Determinism contract: a Scene built from the same scenario document and
seed, driven through the same primitive sequence, serializes to the same
bytes. All randomness flows through the scene's own seeded generator.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from ..errors import GroundError, InvariantViolation
from ..geometry import Bounds, Vec3, dist_xy, vec3

TABLE = "table"

KINDS = (
    "block",
    "container",
    "rubbish",
    "cup",
    "button",
    "lamp",
    "drawer_unit",
    "shelf",
    "fixed_surface",
)

# Kinds the suction gripper can pick up and that settle under gravity.
MOVABLE_KINDS = ("block", "rubbish", "cup")

DEFAULT_GRASP_TOL = 0.01
# Extension fraction at which a prismatic joint counts as open (and its
# contents become visible); <= 1 - threshold counts as closed.
OPEN_FRACTION = 0.8


@dataclass
class Articulation:
    """Prismatic joint: the body slides along `axis` by `extension` meters."""

    axis: Vec3
    extension: float
    max_extension: float
    handle_offset: Vec3

    def __post_init__(self):
        n = math.sqrt(sum(c * c for c in self.axis))
        if not math.isclose(n, 1.0, abs_tol=1e-6):
            raise InvariantViolation(f"articulation axis must be a unit vector, got {self.axis}")
        if self.max_extension <= 0:
            raise InvariantViolation("max_extension must be positive")
        if not 0.0 <= self.extension <= self.max_extension:
            raise InvariantViolation(
                f"extension {self.extension} outside [0, {self.max_extension}]"
            )

    @property
    def fraction(self) -> float:
        return self.extension / self.max_extension

    def to_dict(self) -> dict:
        return {
            "axis": list(self.axis),
            "extension": self.extension,
            "max_extension": self.max_extension,
            "handle_offset": list(self.handle_offset),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Articulation":
        return cls(
            axis=vec3(*d["axis"]),
            extension=float(d.get("extension", 0.0)),
            max_extension=float(d["max_extension"]),
            handle_offset=vec3(*d["handle_offset"]),
        )


@dataclass
class ObjectState:
    id: str
    name: str
    color: str
    kind: str
    position: Vec3  # geometric center
    dimensions: Vec3  # width (x), depth (y), height (z)
    support: str | None = None  # id of object directly beneath, None = table
    articulation: Articulation | None = None
    binary_state: bool | None = None  # pressed (buttons) / on (lamps)

    @property
    def top(self) -> float:
        return self.position[2] + self.dimensions[2] / 2

    @property
    def bottom(self) -> float:
        return self.position[2] - self.dimensions[2] / 2

    @property
    def movable(self) -> bool:
        return self.kind in MOVABLE_KINDS

    @property
    def grasp_point(self) -> Vec3:
        """Suction contact point: top-face center, or the handle for joints."""
        if self.articulation is not None:
            ho = self.articulation.handle_offset
            return (
                self.position[0] + ho[0],
                self.position[1] + ho[1],
                self.position[2] + ho[2],
            )
        return (self.position[0], self.position[1], self.top)

    def footprint_overlaps(self, other: "ObjectState") -> bool:
        for axis in (0, 1):
            half = self.dimensions[axis] / 2 + other.dimensions[axis] / 2
            if abs(self.position[axis] - other.position[axis]) >= half:
                return False
        return True

    def footprint_contains_center(self, other: "ObjectState") -> bool:
        return (
            abs(other.position[0] - self.position[0]) <= self.dimensions[0] / 2
            and abs(other.position[1] - self.position[1]) <= self.dimensions[1] / 2
        )

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "name": self.name,
            "color": self.color,
            "kind": self.kind,
            "position": list(self.position),
            "dimensions": list(self.dimensions),
            "support": self.support,
        }
        if self.articulation is not None:
            d["articulation"] = self.articulation.to_dict()
        if self.binary_state is not None:
            d["binary_state"] = self.binary_state
        return d


@dataclass
class GripperState:
    position: Vec3
    closed: bool = False
    held: str | None = None  # object id
    # Vector from gripper to held object's center, fixed at grasp time.
    grasp_offset: Vec3 = (0.0, 0.0, 0.0)
    slippery: bool = False

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "closed": self.closed,
            "held": self.held,
            "grasp_offset": list(self.grasp_offset),
            "slippery": self.slippery,
        }


@dataclass(frozen=True)
class NoiseConfig:
    """Opt-in stochastic faults; both default off for deterministic runs.

    grasp_slip_prob is drawn inside the scene (per grasp); step_fail_prob
    is consumed by episode runners from their own RNG stream so that
    replaying a primitive trace never desyncs the scene's generator.
    """

    grasp_slip_prob: float = 0.0
    step_fail_prob: float = 0.0

    def __post_init__(self):
        for p in (self.grasp_slip_prob, self.step_fail_prob):
            if not 0.0 <= p <= 1.0:
                raise InvariantViolation(f"probability {p} outside [0, 1]")

    def to_dict(self) -> dict:
        return {"grasp_slip_prob": self.grasp_slip_prob, "step_fail_prob": self.step_fail_prob}


class Scene:
    """Single-owner mutable world state for one episode."""

    def __init__(
        self,
        bounds: Bounds,
        home: Vec3,
        objects: list[ObjectState],
        seed: int = 0,
        noise: NoiseConfig | None = None,
        grasp_tol: float = DEFAULT_GRASP_TOL,
        scenario_id: str = "",
    ):
        self.bounds = bounds
        self.home = home
        self.objects: dict[str, ObjectState] = {}
        for obj in objects:
            if obj.name in self.objects:
                raise InvariantViolation(f"duplicate object name {obj.name!r}")
            self.objects[obj.name] = obj
        self.gripper = GripperState(position=home)
        self.seed = seed
        self.rng = random.Random(f"scene:{seed}")
        self.noise = noise or NoiseConfig()
        self.grasp_tol = grasp_tol
        self.scenario_id = scenario_id
        self.step_count = 0
        self.grasp_count = 0
        self.slip_count = 0
        # Filled by the scenario loader: declarative between-task reset data.
        self.reset_names: list[str] = []
        self.initial_poses: dict[str, Vec3] = {}
        # Most recent plan execution trace, attached by the explorer.
        self.last_trace = None
        self._validate()

    # -- invariants --------------------------------------------------------

    def _validate(self) -> None:
        if not self.bounds.contains(self.home):
            raise InvariantViolation(f"home {self.home} outside bounds")
        for obj in self.objects.values():
            if obj.kind not in KINDS:
                raise InvariantViolation(f"unknown kind {obj.kind!r} for {obj.name!r}")
            if obj.support is not None and obj.support not in self.objects:
                raise InvariantViolation(f"{obj.name!r} supported by unknown {obj.support!r}")
            if self.gripper.held != obj.id and not self.bounds.contains(obj.position):
                raise InvariantViolation(f"{obj.name!r} at {obj.position} outside bounds")
        self._check_support_forest()

    def _check_support_forest(self) -> None:
        for name in self.objects:
            seen = {name}
            cur = self.objects[name].support
            while cur is not None:
                if cur in seen:
                    raise InvariantViolation(f"support cycle through {name!r}")
                seen.add(cur)
                cur = self.objects[cur].support

    # -- queries -----------------------------------------------------------

    def occluded(self, obj: ObjectState) -> bool:
        """True while the object sits inside a closed (not-yet-open) joint body."""
        holder = obj.support
        while holder is not None:
            h = self.objects[holder]
            if h.articulation is not None and h.articulation.fraction < OPEN_FRACTION:
                return True
            holder = h.support
        return False

    def visible_objects(self) -> list[ObjectState]:
        return [o for o in self.objects.values() if not self.occluded(o)]

    def lookup_visible(self, name: str) -> ObjectState:
        obj = self.objects.get(name)
        if obj is None:
            raise GroundError("UnknownObject", f"no object named {name!r} in the scene")
        if self.occluded(obj):
            raise GroundError("UnknownObject", f"{name!r} is not visible")
        return obj

    def supported_by(self, support_id: str) -> list[ObjectState]:
        return [o for o in self.objects.values() if o.support == support_id]

    # -- primitives ---------------------------------------------------------

    def movep(self, target: Vec3) -> None:
        """Straight-line end-effector motion to target."""
        target = vec3(*target)
        if not self.bounds.contains(target):
            raise GroundError(
                "OutOfBounds",
                f"target {tuple(round(c, 4) for c in target)} outside workspace "
                f"{self.bounds.to_lists()}",
            )
        self.step_count += 1
        self._shake_out_slippery_hold()
        held = self.objects.get(self.gripper.held) if self.gripper.held else None
        if held is not None and held.articulation is not None:
            self._drag_joint(held, target)
            return
        self.gripper.position = target
        if held is not None:
            off = self.gripper.grasp_offset
            self._place_rigid(held, (target[0] + off[0], target[1] + off[1], target[2] + off[2]))

    def _shake_out_slippery_hold(self) -> None:
        if not (self.gripper.slippery and self.gripper.held):
            return
        dropped = self.objects[self.gripper.held]
        self.gripper.held = None
        self.gripper.slippery = False
        self.slip_count += 1
        self._settle(dropped)

    def _drag_joint(self, body: ObjectState, target: Vec3) -> None:
        art = body.articulation
        assert art is not None
        delta = (
            target[0] - self.gripper.position[0],
            target[1] - self.gripper.position[1],
            target[2] - self.gripper.position[2],
        )
        along = sum(delta[i] * art.axis[i] for i in range(3))
        new_ext = min(max(art.extension + along, 0.0), art.max_extension)
        actual = new_ext - art.extension
        art.extension = new_ext
        shift = (art.axis[0] * actual, art.axis[1] * actual, art.axis[2] * actual)
        self._place_rigid(body, (
            body.position[0] + shift[0],
            body.position[1] + shift[1],
            body.position[2] + shift[2],
        ))
        g = self.gripper.position
        self.gripper.position = (g[0] + shift[0], g[1] + shift[1], g[2] + shift[2])

    def _place_rigid(self, obj: ObjectState, center: Vec3) -> None:
        """Move obj exactly to center; everything it transitively supports
        shifts by the same delta."""
        delta = (
            center[0] - obj.position[0],
            center[1] - obj.position[1],
            center[2] - obj.position[2],
        )
        obj.position = center
        stack = self.supported_by(obj.id)
        while stack:
            cur = stack.pop()
            cur.position = (
                cur.position[0] + delta[0],
                cur.position[1] + delta[1],
                cur.position[2] + delta[2],
            )
            stack.extend(self.supported_by(cur.id))

    def close_gripper(self) -> None:
        if self.gripper.closed:
            raise GroundError("AlreadyClosed", "gripper is already closed")
        self.step_count += 1
        self.gripper.closed = True
        candidate = self._grasp_candidate()
        if candidate is None:
            return
        self.gripper.held = candidate.id
        gp = self.gripper.position
        self.gripper.grasp_offset = (
            candidate.position[0] - gp[0],
            candidate.position[1] - gp[1],
            candidate.position[2] - gp[2],
        )
        self.grasp_count += 1
        self.gripper.slippery = (
            candidate.articulation is None
            and self.noise.grasp_slip_prob > 0
            and self.rng.random() < self.noise.grasp_slip_prob
        )

    def _grasp_candidate(self) -> ObjectState | None:
        """Nearest graspable object in suction contact with the gripper tip."""
        gp = self.gripper.position
        tol = self.grasp_tol
        best: tuple[float, str, ObjectState] | None = None
        for obj in self.objects.values():
            if self.occluded(obj):
                continue
            if obj.articulation is not None:
                hx, hy, hz = obj.grasp_point
                if dist_xy(gp, (hx, hy, hz)) <= tol and abs(gp[2] - hz) <= tol:
                    d = math.dist(gp, (hx, hy, hz))
                else:
                    continue
            elif obj.movable:
                if dist_xy(gp, obj.position) > tol:
                    continue
                if not (obj.bottom - tol <= gp[2] <= obj.top + tol):
                    continue
                d = abs(gp[2] - obj.top)
            else:
                continue
            key = (d, obj.name, obj)
            if best is None or key[:2] < best[:2]:
                best = key
        return best[2] if best else None

    def open_gripper(self) -> None:
        self.step_count += 1
        self.gripper.closed = False
        self.gripper.slippery = False
        held = self.gripper.held
        self.gripper.held = None
        if held is None:
            return
        obj = self.objects[held]
        if obj.articulation is not None:
            return  # joints stay where released
        self._settle(obj)

    def _settle(self, obj: ObjectState) -> None:
        """Drop obj straight down onto the highest surface under its footprint.

        Open-top containers capture objects whose center lies within their
        footprint: those rest on the container floor (or on earlier contents)
        instead of the container's rim.
        """
        obj.position = self.bounds.clamp_xy(obj.position)
        candidates = [
            o
            for o in self.objects.values()
            if o.id != obj.id and o.footprint_overlaps(obj) and not self._is_above(o, obj)
        ]
        catcher = None
        for o in candidates:
            if o.kind == "container" and o.footprint_contains_center(obj):
                if catcher is None or o.top > catcher.top:
                    catcher = o
        if catcher is not None:
            base = None
            for o in candidates:
                if o is not catcher and self._is_above(o, catcher):
                    if base is None or o.top > base.top:
                        base = o
            if base is not None:
                z = base.top + obj.dimensions[2] / 2
                support = base.id
            else:
                z = catcher.bottom + 0.005 + obj.dimensions[2] / 2
                support = catcher.id
            obj.position = (obj.position[0], obj.position[1], z)
            obj.support = support
            return
        best = None
        for o in candidates:
            if best is None or o.top > best.top:
                best = o
        if best is not None:
            obj.position = (obj.position[0], obj.position[1], best.top + obj.dimensions[2] / 2)
            obj.support = best.id
        else:
            obj.position = (obj.position[0], obj.position[1], obj.dimensions[2] / 2)
            obj.support = None

    def _is_above(self, other: ObjectState, obj: ObjectState) -> bool:
        """True when `other` rests (transitively) on obj, so it cannot catch it."""
        cur = other.support
        while cur is not None:
            if cur == obj.id:
                return True
            cur = self.objects[cur].support
        return False

    def get_obj_position(self, name: str) -> Vec3:
        self.step_count += 1
        return self.lookup_visible(name).position

    def get_obj_dimensions(self, name: str) -> Vec3:
        self.step_count += 1
        return self.lookup_visible(name).dimensions

    def go_home(self) -> None:
        self.movep(self.home)

    def press_contact(self) -> None:
        """Toggle a button under the gripper tip; linked lamps follow."""
        self.step_count += 1
        gp = self.gripper.position
        tol = self.grasp_tol
        for obj in self.objects.values():
            if obj.kind != "button":
                continue
            if dist_xy(gp, obj.position) <= tol and abs(gp[2] - obj.top) <= tol:
                obj.binary_state = not bool(obj.binary_state)
                break
        else:
            return
        any_pressed = any(
            o.binary_state for o in self.objects.values() if o.kind == "button"
        )
        for lamp in self.objects.values():
            if lamp.kind == "lamp":
                lamp.binary_state = any_pressed

    # -- snapshots -----------------------------------------------------------

    def snapshot(self) -> dict:
        """Copy of poses and gripper state; excludes the RNG stream on purpose
        (restoring a retry must not replay the same noise draws)."""
        return {
            "objects": {
                name: replace(
                    o,
                    articulation=replace(o.articulation) if o.articulation else None,
                )
                for name, o in self.objects.items()
            },
            "gripper": replace(self.gripper),
            "step_count": self.step_count,
        }

    def restore(self, snap: dict) -> None:
        self.objects = {
            name: replace(
                o, articulation=replace(o.articulation) if o.articulation else None
            )
            for name, o in snap["objects"].items()
        }
        self.gripper = replace(snap["gripper"])
        # step_count stays monotone: restoring poses does not undo time.
        self.step_count = max(self.step_count, snap["step_count"])

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "seed": self.seed,
            "bounds": self.bounds.to_lists(),
            "home": list(self.home),
            "noise": self.noise.to_dict(),
            "grasp_tol": self.grasp_tol,
            "step_count": self.step_count,
            "gripper": self.gripper.to_dict(),
            "objects": [self.objects[k].to_dict() for k in sorted(self.objects)],
        }
