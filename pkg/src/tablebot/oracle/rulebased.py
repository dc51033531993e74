"""Deterministic rule-based oracle backend.

Synthesizes responses for every model role without a network: task
curricula per scenario family, plans in the skill language (using acquired
skills when the library has them, long primitive sequences when it does
not), verification predicates, skill reflections, per-step preconditions,
and the deployment controller policy. Responses are pure functions of the
request plus the fault-injection config, so record/replay and the offline
acceptance suite are exact.

Fault injection corrupts one planner step (or one reflector field) on the
first non-repair request for a matching task, to exercise the repair paths.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..conditions import compile_condition, condition_holds
from ..sim.describe import SceneDescription, Relation
from .base import OracleRequest, OracleResponse, OracleRole, UnsupportedScenario
from .jsonblocks import fence, fence_all

BLOCK_COLOR_ORDER = ("purple", "blue", "green", "yellow", "orange", "red")

RUBBISH_WORDS = ("rubbish", "paper", "bottle", "trash", "wrapper", "can")


@dataclass(frozen=True)
class FaultInjection:
    """Deterministic single-fault corruption of oracle output.

    kind: parse | undefined_symbol | out_of_bounds (planner step faults)
          | bad_related (reflector related-list fault)
    task_contains: substring of the task name to target ("" targets every
          fresh plan request).
    step: 1-based plan step to corrupt.
    """

    kind: str = "none"
    task_contains: str = ""
    step: int = 1


def _q(name: str) -> str:
    return '"' + name + '"'


def _step(name: str, explanation: str, *lines: str) -> dict:
    return {"Name": name, "Explanation": explanation, "Code": "\n".join(lines)}


def _task_name(task: dict) -> str:
    return task.get("Task Name") or task.get("Task name") or ""


def _task_objects(task: dict) -> list[str]:
    return list(task.get("Objects") or [])


def _task_description(task: dict) -> str:
    return task.get("Task Description") or task.get("Task description") or ""


class RuleBasedBackend:
    name = "rule"

    def __init__(self, faults: FaultInjection | None = None):
        self.faults = faults or FaultInjection()

    def call(self, request: OracleRequest) -> OracleResponse:
        role = request.role
        ctx = request.context
        if role == OracleRole.SCENE_DESCRIBER:
            blocks = [_describe_block(ctx)]
        elif role == OracleRole.TASK_GENERATOR:
            blocks = _generate_tasks(ctx)
        elif role == OracleRole.PLANNER:
            blocks = self._plan(ctx)
        elif role == OracleRole.CODE_VERIFIER_GEN:
            blocks = [_code_predicate(ctx["task"])]
        elif role == OracleRole.VISION_VERIFIER:
            blocks = [_vision_verdict(ctx)]
        elif role == OracleRole.REFLECTOR:
            blocks = [self._reflect(ctx)]
        elif role == OracleRole.PRECONDITION_GEN:
            blocks = [_preconditions(ctx)]
        elif role == OracleRole.CONTROLLER:
            blocks = [_controller_action(ctx)]
        else:  # pragma: no cover - closed enum
            raise UnsupportedScenario(f"role {role} not supported")
        return OracleResponse(raw=fence_all(blocks), blocks=blocks)

    # -- planner ---------------------------------------------------------

    def _plan(self, ctx: dict) -> list[dict]:
        task = ctx["task"]
        skills = set(ctx.get("skills", ()))
        if "failed_step" in ctx:
            # Interpretation repair: regenerate exactly the failed step.
            steps = _route_plan(task, skills)
            idx = ctx["failed_step"]["index"]
            if not 0 <= idx < len(steps):
                idx = len(steps) - 1
            return [steps[idx]]
        steps = _route_plan(task, skills)
        if self.faults.kind in ("parse", "undefined_symbol", "out_of_bounds"):
            if "failure" not in ctx and self.faults.task_contains in _task_name(task):
                steps = _corrupt_plan(steps, self.faults)
        return steps

    # -- reflector ---------------------------------------------------------

    def _reflect(self, ctx: dict) -> dict:
        task = ctx["task"]
        skills = set(ctx.get("skills", ()))
        retry = bool(ctx.get("retry_note"))
        entry = _route_skill(task, skills)
        if entry is None:
            return {"Skip": "the plan already reduces to existing skills"}
        if self.faults.kind == "bad_related" and not retry:
            if self.faults.task_contains in _task_name(task):
                entry = dict(entry)
                entry["Related functions"] = "movep()"
        return entry


# --- scene describer -------------------------------------------------------


def _describe_block(ctx: dict) -> dict:
    scene = ctx["scene"]
    return {
        "Description": scene.get("text", ""),
        "Objects on table": [
            {"Name": o["name"], "Color": o["color"]} for o in scene.get("objects", [])
        ],
    }


# --- scenario families ------------------------------------------------------


def _family(names: list[str]) -> str:
    lower = [n.lower() for n in names]
    if any("drawer" in n for n in lower):
        return "cup_drawer"
    if any("bin" in n for n in lower) and any("shelf" in n for n in lower):
        return "desktop_organization"
    blocks = [n for n in lower if n.endswith("block")]
    if len(blocks) >= 2:
        return "blocks_world"
    raise UnsupportedScenario(
        f"rule-based oracle does not know this scene family (objects: {names})"
    )


def _blocks_by_color(names: list[str]) -> list[str]:
    ordered = []
    for color in BLOCK_COLOR_ORDER:
        for n in names:
            if n.lower() == f"{color} block":
                ordered.append(n)
    return ordered


# --- task generator ----------------------------------------------------------


def _generate_tasks(ctx: dict) -> list[dict]:
    names = [o["name"] for o in ctx["objects"]]
    family = _family(names)
    if family == "blocks_world":
        return _blocks_tasks(_blocks_by_color(names))
    if family == "cup_drawer":
        drawer = next(n for n in names if "drawer" in n.lower())
        item = next((n for n in names if "cup" in n.lower()), None)
        return _cup_tasks(drawer, item)
    return _desktop_tasks(names)


def _blocks_tasks(blocks: list[str]) -> list[dict]:
    purple, blue, green, yellow, orange, red = (blocks + [None] * 6)[:6]
    tasks = [
        {
            "Task Name": f"Pick and Place the {purple.title()}",
            "Objects": [purple],
            "Task Description": f"Pick up the {purple} and place it at the right boundary of the table.",
        }
    ]
    if blue:
        tasks.append(
            {
                "Task Name": "Create a Two-Block Stack",
                "Objects": [purple, blue],
                "Task Description": f"Stack the {purple} on top of the {blue}.",
            }
        )
    if green:
        tasks.append(
            {
                "Task Name": "Create a Three-Block Stack",
                "Objects": [purple, blue, green],
                "Task Description": (
                    f"Stack the {purple} on top of the {blue}, then place the {green} "
                    f"on top of the {purple}."
                ),
            }
        )
    if red:
        tasks.append(
            {
                "Task Name": "Color Match and Stack",
                "Objects": [purple, blue, green, yellow, orange, red],
                "Task Description": (
                    f"Create three stacks of two blocks each: the {purple} on the {yellow}, "
                    f"the {blue} on the {orange}, and the {green} on the {red}."
                ),
            }
        )
        tasks.append(
            {
                "Task Name": "Block Pyramid Stacking",
                "Objects": [yellow, orange, red],
                "Task Description": (
                    f"Build a pyramid in the center of the table: the {yellow} and the "
                    f"{orange} side by side, and the {red} on top."
                ),
            }
        )
        tasks.append(
            {
                "Task Name": "Complex Pyramid Construction",
                "Objects": [purple, blue, green, yellow, orange, red],
                "Task Description": (
                    "Build a three-level pyramid in the center of the table: the "
                    f"{purple}, {blue} and {green} as the bottom level, the {yellow} "
                    f"and {orange} as the middle level, and the {red} on top."
                ),
            }
        )
    return tasks


def _cup_tasks(drawer: str, item: str | None) -> list[dict]:
    tasks = [
        {
            "Task Name": f"Open the {drawer.title()}",
            "Objects": [drawer],
            "Task Description": f"Pull the {drawer} open by its handle.",
        }
    ]
    if not item:
        tasks.append(
            {
                "Task Name": f"Close the {drawer.title()}",
                "Objects": [drawer],
                "Task Description": f"Push the {drawer} shut by its handle.",
            }
        )
    if item:
        tasks.append(
            {
                "Task Name": f"Take Out the {item.title()}",
                "Objects": [item, drawer],
                "Task Description": (
                    f"Open the {drawer}, then take the {item} out and place it on the table."
                ),
            }
        )
        tasks.append(
            {
                "Task Name": f"{item.title()} Acquisition",
                "Objects": [item, drawer],
                "Task Description": (
                    f"Open the {drawer}, place the {item} on the table, and close the "
                    f"{drawer} again."
                ),
            }
        )
    return tasks


def _desktop_tasks(names: list[str]) -> list[dict]:
    bin_name = next(n for n in names if "bin" in n.lower())
    shelf = next(n for n in names if "shelf" in n.lower())
    rubbish = [n for n in names if _is_rubbish(n) and n != bin_name]
    useful = [n for n in names if n not in (bin_name, shelf) and n not in rubbish]
    return [
        {
            "Task Name": "Clear the Rubbish",
            "Objects": rubbish + [bin_name],
            "Task Description": f"Put {_listing(rubbish)} into the {bin_name}.",
        },
        {
            "Task Name": "Shelve the Useful Objects",
            "Objects": useful + [shelf],
            "Task Description": f"Place {_listing(useful)} on top of the {shelf}.",
        },
        {
            "Task Name": "Desktop Organization",
            "Objects": rubbish + useful + [bin_name, shelf],
            "Task Description": (
                f"Clean the table: put {_listing(rubbish)} into the {bin_name} and "
                f"place {_listing(useful)} on the {shelf}."
            ),
        },
    ]


def _is_rubbish(name: str) -> bool:
    return any(w in name.lower() for w in RUBBISH_WORDS)


def _listing(names: list[str]) -> str:
    if not names:
        return "nothing"
    if len(names) == 1:
        return f"the {names[0]}"
    return ", ".join(f"the {n}" for n in names[:-1]) + f" and the {names[-1]}"


# --- planner ------------------------------------------------------------------


def _placement_steps(
    k: int,
    obj: str,
    target_template: str,
    skills: set,
    extra_reads: tuple[str, ...] = (),
    why: str = "",
) -> list[dict]:
    """Steps moving `obj` to a target expression.

    The template may use {P}/{D} for the object's own position/dimensions
    variables. Skill mode packs everything into one step; primitive mode
    spells out each motion.
    """
    p, d, t = f"p{k}", f"d{k}", f"t{k}"
    target = target_template.replace("{P}", p).replace("{D}", d)
    needs_own = "{P}" in target_template or "{D}" in target_template
    why = why or f"Move the {obj} to its target position."
    if "pick_and_place_object" in skills:
        lines = list(extra_reads)
        if needs_own:
            lines += [f"{p} = get_obj_position({_q(obj)})", f"{d} = get_obj_dimensions({_q(obj)})"]
        lines += [f"{t} = {target}", f"pick_and_place_object({_q(obj)}, {t})"]
        return [_step(f"Move the {obj}", why, *lines)]
    steps = [
        _step(
            f"Locate the {obj}",
            f"Read the current position and size of the {obj}.",
            f"{p} = get_obj_position({_q(obj)})",
            f"{d} = get_obj_dimensions({_q(obj)})",
        ),
        _step(
            f"Compute target {k}",
            why,
            *extra_reads,
            f"{t} = {target}",
        ),
        _step(
            f"Approach the {obj}",
            "Hover just above the object before descending.",
            f"movep(({p}[0], {p}[1], {p}[2] + {d}[2]))",
        ),
        _step(
            f"Descend to the {obj}",
            "Lower the gripper onto the object.",
            f"movep(({p}[0], {p}[1], {p}[2]))",
        ),
        _step(f"Grasp the {obj}", "Close the gripper on the object.", "close_gripper()"),
        _step(
            "Lift to travel height",
            "Raise the object to the top of the workspace before moving sideways.",
            f"movep(({p}[0], {p}[1], BOUNDS_MAX[2]))",
        ),
        _step(
            "Carry above the target",
            "Translate at travel height to above the target.",
            f"movep(({t}[0], {t}[1], BOUNDS_MAX[2]))",
        ),
        _step("Lower to the target", "Descend to the placement height.", f"movep(({t}[0], {t}[1], {t}[2]))"),
        _step(f"Release the {obj}", "Open the gripper to place the object.", "open_gripper()"),
    ]
    return steps


def _home_step() -> dict:
    return _step("Return home", "Move the gripper back to its home position.", "go_home()")


def _drawer_pull_steps(drawer: str, direction: float, k: int, skills: set) -> list[dict]:
    verb = "open" if direction < 0 else "close"
    skill = f"{verb}_drawer"
    if skill in skills:
        return [
            _step(
                f"{verb.title()} the {drawer}",
                f"Use the learned skill to {verb} the {drawer}.",
                f"{skill}({_q(drawer)})",
            )
        ]
    c, d = f"c{k}", f"d{k}"
    sign = "-" if direction < 0 else "+"
    return [
        _step(
            f"Locate the {drawer} handle",
            f"Read the {drawer} pose; the handle sits at the center of its front face.",
            f"{c} = get_obj_position({_q(drawer)})",
            f"{d} = get_obj_dimensions({_q(drawer)})",
        ),
        _step(
            "Move to the handle",
            "Put the gripper on the handle.",
            f"movep(({c}[0] - {d}[0] / 2, {c}[1], {c}[2]))",
        ),
        _step("Grip the handle", "Close the gripper on the handle.", "close_gripper()"),
        _step(
            f"{'Pull' if direction < 0 else 'Push'} the {drawer} {verb}",
            f"Slide the {drawer} along its joint axis until it is fully {verb}.",
            f"movep(({c}[0] - {d}[0] / 2 {sign} 0.2, {c}[1], {c}[2]))",
        ),
        _step("Let go of the handle", "Release the handle.", "open_gripper()"),
    ]


def _route_plan(task: dict, skills: set) -> list[dict]:
    name = _task_name(task).lower()
    desc = _task_description(task).lower()
    objs = _task_objects(task)
    blob = f"{name} {desc}"

    if "two-block stack" in name or ("stack" in blob and len(objs) == 2):
        return _stack_plan([(objs[0], objs[1])], skills)
    if "three-block stack" in name and len(objs) >= 3:
        return _stack3_plan(objs[0], objs[1], objs[2], skills)
    if "color match" in name and len(objs) >= 6:
        pairs = [(objs[0], objs[3]), (objs[1], objs[4]), (objs[2], objs[5])]
        return _stack_plan(pairs, skills)
    if "complex pyramid" in name and len(objs) >= 6:
        return _pyramid6_plan(objs, skills)
    if "pyramid" in name and len(objs) >= 3:
        return _pyramid3_plan(objs[0], objs[1], objs[2], skills)
    if "acquisition" in name and objs:
        return _cup_acquisition_plan(objs, skills)
    if "take out" in name and objs:
        return _take_out_plan(objs, skills)
    if "open" in name and any("drawer" in o.lower() for o in objs):
        drawer = next(o for o in objs if "drawer" in o.lower())
        return _drawer_pull_steps(drawer, -1, 1, skills) + (
            [] if "open_drawer" in skills else [_home_step()]
        )
    if "close" in name and any("drawer" in o.lower() for o in objs):
        drawer = next(o for o in objs if "drawer" in o.lower())
        return _drawer_pull_steps(drawer, +1, 1, skills) + (
            [] if "close_drawer" in skills else [_home_step()]
        )
    if ("clear" in name and ("rubbish" in blob or "bin" in blob)) or (
        "rubbish" in name and objs
    ):
        return _into_container_plan(objs, skills)
    if "shelve" in name or "shelf" in blob and "organization" not in name:
        return _onto_surface_plan(objs, skills)
    if "organization" in name or "clean the table" in blob:
        return _organize_plan(objs, skills)
    if "pick and place" in name or "edge" in blob or "boundary" in blob:
        return _edge_plan(objs[0], skills)
    if objs:
        # Fallback: bring the first object to the center of the workspace.
        steps = [
            _step(
                "Compute the workspace center",
                "Anchor the placement at the middle of the reachable area.",
                "c0 = (BOUNDS_MIN + BOUNDS_MAX) / 2",
            )
        ]
        steps += _placement_steps(1, objs[0], "(c0[0], c0[1], {D}[2] / 2)", skills)
        if "pick_and_place_object" not in skills:
            steps.append(_home_step())
        return steps
    raise UnsupportedScenario(f"cannot plan task {_task_name(task)!r}")


def _edge_plan(obj: str, skills: set) -> list[dict]:
    steps = _placement_steps(
        1,
        obj,
        "({P}[0], BOUNDS_MAX[1] - {D}[1], {D}[2] / 2)",
        skills,
        why=f"Place the {obj} just inside the right boundary of the workspace.",
    )
    if "pick_and_place_object" not in skills:
        steps.append(_home_step())
    return steps


def _stack_plan(pairs: list[tuple[str, str]], skills: set) -> list[dict]:
    if "stack_blocks" in skills:
        return [
            _step(
                f"Stack the {top} on the {base}",
                f"Use the stacking skill to put the {top} onto the {base}.",
                f"stack_blocks({_q(top)}, {_q(base)})",
            )
            for top, base in pairs
        ]
    steps: list[dict] = []
    for i, (top, base) in enumerate(pairs):
        k = i + 1
        reads = (
            f"b{k} = get_obj_position({_q(base)})",
            f"h{k} = get_obj_dimensions({_q(base)})",
        )
        steps += _placement_steps(
            k,
            top,
            f"b{k} + (0, 0, h{k}[2])",
            skills,
            extra_reads=reads,
            why=f"Place the {top} exactly one block height above the {base}.",
        )
    if "pick_and_place_object" not in skills:
        steps.append(_home_step())
    return steps


def _stack3_plan(top: str, base: str, third: str, skills: set) -> list[dict]:
    if "create_three_block_stack" in skills:
        return [
            _step(
                "Build the three-block stack",
                "Use the learned three-block stacking skill.",
                f"create_three_block_stack({_q(top)}, {_q(base)}, {_q(third)})",
            )
        ]
    if "stack_blocks" in skills:
        return [
            _step(
                f"Stack the {top} on the {base}",
                "Build the base pair of the stack.",
                f"stack_blocks({_q(top)}, {_q(base)})",
            ),
            _step(
                f"Stack the {third} on the {top}",
                "Finish the tower by stacking onto the new top block.",
                f"stack_blocks({_q(third)}, {_q(top)})",
            ),
        ]
    steps = _stack_plan([(top, base)], skills)
    if "pick_and_place_object" not in skills and steps and steps[-1]["Code"] == "go_home()":
        steps = steps[:-1]
    reads = (
        f"b9 = get_obj_position({_q(top)})",
        f"h9 = get_obj_dimensions({_q(top)})",
    )
    steps += _placement_steps(
        9,
        third,
        "b9 + (0, 0, h9[2])",
        skills,
        extra_reads=reads,
        why=f"Place the {third} on what is now the top of the stack.",
    )
    if "pick_and_place_object" not in skills:
        steps.append(_home_step())
    return steps


def _anchor_step(measure_obj: str) -> dict:
    return _step(
        "Compute the pyramid anchor",
        "Anchor the build at the center of the workspace and measure a block.",
        "c = (BOUNDS_MIN + BOUNDS_MAX) / 2",
        f"w = get_obj_dimensions({_q(measure_obj)})",
    )


def _pyramid3_plan(left: str, right: str, top: str, skills: set) -> list[dict]:
    if "build_pyramid" in skills:
        return [
            _step(
                "Build the pyramid",
                "Use the learned pyramid-building skill.",
                f"build_pyramid({_q(left)}, {_q(right)}, {_q(top)})",
            )
        ]
    steps = [_anchor_step(left)]
    steps += _placement_steps(
        1, left, "(c[0], c[1] - w[1] / 2, w[2] / 2)", skills,
        why="Put the first base block just left of the anchor.",
    )
    steps += _placement_steps(
        2, right, "(q1[0], q1[1] + w[1], q1[2])", skills,
        extra_reads=(f"q1 = get_obj_position({_q(left)})",),
        why="Put the second base block flush against the first.",
    )
    steps += _placement_steps(
        3, top, "((q1[0] + q2[0]) / 2, (q1[1] + q2[1]) / 2, q1[2] + w[2])", skills,
        extra_reads=(f"q2 = get_obj_position({_q(right)})",),
        why="Bridge the top block across the two base blocks.",
    )
    steps.append(_home_step())
    return steps


def _pyramid6_plan(objs: list[str], skills: set) -> list[dict]:
    b1, b2, b3, m1, m2, top = objs[:6]
    steps = [_anchor_step(b1)]
    targets = [
        (b1, "(c[0], c[1] - w[1], w[2] / 2)", "Bottom row, left position."),
        (b2, "(c[0], c[1], w[2] / 2)", "Bottom row, middle position."),
        (b3, "(c[0], c[1] + w[1], w[2] / 2)", "Bottom row, right position."),
        (m1, "(c[0], c[1] - w[1] / 2, w[2] * 1.5)", "Middle level, bridging the left pair."),
        (m2, "(c[0], c[1] + w[1] / 2, w[2] * 1.5)", "Middle level, bridging the right pair."),
        (top, "(c[0], c[1], w[2] * 2.5)", "Top block, bridging the middle level."),
    ]
    for k, (obj, target, why) in enumerate(targets, 1):
        steps += _placement_steps(k, obj, target, skills, why=why)
    steps.append(_home_step())
    return steps


def _cup_item(objs: list[str]) -> tuple[str, str]:
    drawer = next(o for o in objs if "drawer" in o.lower())
    item = next(o for o in objs if "drawer" not in o.lower())
    return item, drawer


def _take_out_item_steps(item: str, skills: set) -> list[dict]:
    return _placement_steps(
        5,
        item,
        "(BOUNDS_MIN[0] + 0.15, {P}[1] + 0.25, {D}[2] / 2)",
        skills,
        why=f"Lift the {item} out and put it down on the open table.",
    )


def _take_out_plan(objs: list[str], skills: set) -> list[dict]:
    item, drawer = _cup_item(objs)
    steps = _drawer_pull_steps(drawer, -1, 1, skills)
    steps += _take_out_item_steps(item, skills)
    if "pick_and_place_object" not in skills:
        steps.append(_home_step())
    return steps


def _cup_acquisition_plan(objs: list[str], skills: set) -> list[dict]:
    item, drawer = _cup_item(objs)
    steps = _drawer_pull_steps(drawer, -1, 1, skills)
    steps += _take_out_item_steps(item, skills)
    steps += _drawer_pull_steps(drawer, +1, 9, skills)
    if not ({"open_drawer", "close_drawer"} & skills):
        steps.append(_home_step())
    return steps


def _into_container_plan(objs: list[str], skills: set) -> list[dict]:
    container = next((o for o in objs if "bin" in o.lower()), objs[-1])
    items = [o for o in objs if o != container]
    steps: list[dict] = []
    for k, item in enumerate(items, 1):
        if "put_in_container" in skills:
            steps.append(
                _step(
                    f"Drop the {item} into the {container}",
                    "Use the learned container skill.",
                    f"put_in_container({_q(item)}, {_q(container)})",
                )
            )
        else:
            steps += _placement_steps(
                k,
                item,
                f"(g{k}[0], g{k}[1], g{k}[2])",
                skills,
                extra_reads=(f"g{k} = get_obj_position({_q(container)})",),
                why=f"Release the {item} above the {container} so it falls inside.",
            )
    if "pick_and_place_object" not in skills and "put_in_container" not in skills:
        steps.append(_home_step())
    return steps


def _onto_surface_plan(objs: list[str], skills: set) -> list[dict]:
    surface = next((o for o in objs if "shelf" in o.lower()), objs[-1])
    items = [o for o in objs if o != surface]
    steps: list[dict] = []
    for k, item in enumerate(items, 1):
        side = "-" if k % 2 else "+"
        steps += _placement_steps(
            k,
            item,
            f"(s{k}[0], s{k}[1] {side} e{k}[1] / 4, s{k}[2] + e{k}[2])",
            skills,
            extra_reads=(
                f"s{k} = get_obj_position({_q(surface)})",
                f"e{k} = get_obj_dimensions({_q(surface)})",
            ),
            why=f"Set the {item} down on top of the {surface}.",
        )
    if "pick_and_place_object" not in skills:
        steps.append(_home_step())
    return steps


def _organize_plan(objs: list[str], skills: set) -> list[dict]:
    bin_name = next((o for o in objs if "bin" in o.lower()), None)
    shelf = next((o for o in objs if "shelf" in o.lower()), None)
    rubbish = [o for o in objs if _is_rubbish(o) and o != bin_name]
    useful = [o for o in objs if o not in (bin_name, shelf) and o not in rubbish]
    steps = _into_container_plan(rubbish + [bin_name], skills)
    if steps and steps[-1]["Code"] == "go_home()":
        steps = steps[:-1]
    # Shelf placements continue the numbering to keep variables unique.
    more = _onto_surface_plan(useful + [shelf], skills)
    renumbered = []
    for s in more:
        code = s["Code"]
        for k in range(1, len(useful) + 1):
            for var in ("p", "d", "t", "s", "e"):
                code = code.replace(f"{var}{k}", f"{var}{k + 4}")
        renumbered.append({**s, "Code": code})
    return steps + renumbered


def _corrupt_plan(steps: list[dict], faults: FaultInjection) -> list[dict]:
    idx = min(max(faults.step - 1, 0), len(steps) - 1)
    step = dict(steps[idx])
    if faults.kind == "parse":
        step["Code"] = step["Code"].rstrip(")")
    elif faults.kind == "undefined_symbol":
        lines = step["Code"].split("\n")
        for i, line in enumerate(lines):
            if "(" in line:
                callee = line[: line.index("(")].split("=")[-1].strip()
                lines[i] = line.replace(f"{callee}(", f"{callee}_v2(", 1)
                break
        step["Code"] = "\n".join(lines)
    elif faults.kind == "out_of_bounds":
        step["Code"] = "movep((9, 9, 9))\n" + step["Code"]
    out = list(steps)
    out[idx] = step
    return out


# --- code verifier -------------------------------------------------------------


def _code_predicate(task: dict) -> dict:
    name = _task_name(task).lower()
    objs = _task_objects(task)
    if "two-block stack" in name or ("stack" in name and len(objs) == 2):
        return _stack_predicate([(objs[0], objs[1])])
    if "three-block stack" in name and len(objs) >= 3:
        return _stack_predicate([(objs[0], objs[1]), (objs[2], objs[0])])
    if "color match" in name and len(objs) >= 6:
        return _stack_predicate(
            [(objs[0], objs[3]), (objs[1], objs[4]), (objs[2], objs[5])]
        )
    if "complex pyramid" in name and len(objs) >= 6:
        bindings = [f"v{i} = get_obj_position({_q(o)})" for i, o in enumerate(objs[:6])]
        bindings.append(f"w = get_obj_dimensions({_q(objs[0])})")
        conditions = [
            "abs(v0[2] - w[2] / 2) <= 0.01",
            "abs(v1[2] - w[2] / 2) <= 0.01",
            "abs(v2[2] - w[2] / 2) <= 0.01",
            "abs(v3[2] - w[2] * 1.5) <= 0.01",
            "abs(v4[2] - w[2] * 1.5) <= 0.01",
            "abs(v5[2] - w[2] * 2.5) <= 0.01",
        ]
        return {"Bindings": "\n".join(bindings), "Conditions": conditions}
    if "pyramid" in name and len(objs) >= 3:
        left, right, top = objs[0], objs[1], objs[2]
        bindings = [
            f"a = get_obj_position({_q(left)})",
            f"b = get_obj_position({_q(right)})",
            f"t = get_obj_position({_q(top)})",
            f"w = get_obj_dimensions({_q(top)})",
        ]
        conditions = [
            "abs(a[2] - w[2] / 2) <= 0.01",
            "abs(b[2] - w[2] / 2) <= 0.01",
            "abs(t[2] - w[2] * 1.5) <= 0.01",
            "dist((t[0], t[1], 0), ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2, 0)) <= 0.03",
        ]
        return {"Bindings": "\n".join(bindings), "Conditions": conditions}
    if ("take out" in name or "acquisition" in name) and objs:
        item = next(o for o in objs if "drawer" not in o.lower())
        return {
            "Bindings": f"ip = get_obj_position({_q(item)})\nid = get_obj_dimensions({_q(item)})",
            "Conditions": ["abs(ip[2] - id[2] / 2) <= 0.015"],
        }
    if ("open" in name or "close" in name) and any("drawer" in o.lower() for o in objs):
        # Joint state is not measurable through the two object queries alone;
        # the code route only confirms the drawer is still resolvable and
        # leaves open/closed judgment to the vision route.
        drawer = next(o for o in objs if "drawer" in o.lower())
        return {
            "Bindings": f"dp = get_obj_position({_q(drawer)})",
            "Conditions": ["dp[2] >= 0"],
        }
    if ("clear" in name or "rubbish" in name) and objs:
        container = next((o for o in objs if "bin" in o.lower()), objs[-1])
        items = [o for o in objs if o != container]
        return _containment_predicate(items, container)
    if "shelve" in name and objs:
        surface = next((o for o in objs if "shelf" in o.lower()), objs[-1])
        items = [o for o in objs if o != surface]
        return _on_surface_predicate(items, surface)
    if "organization" in name and objs:
        bin_name = next((o for o in objs if "bin" in o.lower()), None)
        shelf = next((o for o in objs if "shelf" in o.lower()), None)
        rubbish = [o for o in objs if _is_rubbish(o) and o != bin_name]
        useful = [o for o in objs if o not in (bin_name, shelf) and o not in rubbish]
        a = _containment_predicate(rubbish, bin_name, prefix="r")
        b = _on_surface_predicate(useful, shelf, prefix="u")
        return {
            "Bindings": a["Bindings"] + "\n" + b["Bindings"],
            "Conditions": a["Conditions"] + b["Conditions"],
        }
    if objs:
        # Default: the object ended near the right boundary, resting on the table.
        obj = objs[0]
        return {
            "Bindings": f"p = get_obj_position({_q(obj)})\nd = get_obj_dimensions({_q(obj)})",
            "Conditions": [
                "BOUNDS_MAX[1] - p[1] <= 0.1",
                "abs(p[2] - d[2] / 2) <= 0.01",
            ],
        }
    return {"Bindings": "", "Conditions": ["0 <= 1"]}


def _stack_predicate(pairs: list[tuple[str, str]]) -> dict:
    bindings, conditions = [], []
    for i, (top, base) in enumerate(pairs):
        bindings += [
            f"t{i} = get_obj_position({_q(top)})",
            f"b{i} = get_obj_position({_q(base)})",
            f"h{i} = get_obj_dimensions({_q(base)})",
        ]
        conditions.append(f"dist(t{i}, b{i} + (0, 0, h{i}[2])) <= 0.02")
    return {"Bindings": "\n".join(bindings), "Conditions": conditions}


def _containment_predicate(items: list[str], container: str, prefix: str = "i") -> dict:
    bindings = [
        f"c{prefix} = get_obj_position({_q(container)})",
        f"cd{prefix} = get_obj_dimensions({_q(container)})",
    ]
    conditions = []
    for i, item in enumerate(items):
        v = f"{prefix}{i}"
        bindings.append(f"{v} = get_obj_position({_q(item)})")
        conditions += [
            f"dist(({v}[0], {v}[1], 0), (c{prefix}[0], c{prefix}[1], 0)) <= cd{prefix}[0] / 2",
            f"{v}[2] <= c{prefix}[2] + cd{prefix}[2] / 2",
        ]
    return {"Bindings": "\n".join(bindings), "Conditions": conditions}


def _on_surface_predicate(items: list[str], surface: str, prefix: str = "s") -> dict:
    bindings = [
        f"c{prefix} = get_obj_position({_q(surface)})",
        f"cd{prefix} = get_obj_dimensions({_q(surface)})",
    ]
    conditions = []
    for i, item in enumerate(items):
        v = f"{prefix}{i}"
        bindings.append(f"{v} = get_obj_position({_q(item)})")
        conditions += [
            f"abs({v}[0] - c{prefix}[0]) <= cd{prefix}[0] / 2",
            f"abs({v}[1] - c{prefix}[1]) <= cd{prefix}[1] / 2",
            f"{v}[2] >= c{prefix}[2] + cd{prefix}[2] / 2 - 0.01",
        ]
    return {"Bindings": "\n".join(bindings), "Conditions": conditions}


# --- vision verifier --------------------------------------------------------------


def _vision_verdict(ctx: dict) -> dict:
    condition = ctx["condition"]
    desc = SceneDescription(
        text=ctx["scene"].get("text", ""),
        objects=ctx["scene"].get("objects", []),
        relations=[Relation(**r) for r in ctx["scene"].get("relations", [])],
    )
    objs = ctx.get("objects", [])
    ok, reason = _check_goal(condition, objs, desc)
    return {"Satisfied": bool(ok), "Reason": reason}


def _check_goal(condition: str, objs: list[str], desc: SceneDescription) -> tuple[bool, str]:
    lower = condition.lower()
    if "pick and place" in lower or "boundary" in lower or "edge" in lower:
        obj = objs[0] if objs else ""
        sentence = next(
            (s for s in desc.text.split(". ") if s.lower().startswith(f"the {obj}")), ""
        )
        ok = "right edge" in sentence
        return ok, (
            f"The {obj} is reported near the right edge."
            if ok
            else f"The {obj} is not near the right edge."
        )
    if "two-block stack" in lower or ("stack" in lower and len(objs) == 2):
        ok = desc.has(objs[0], "on", objs[1])
        return ok, f"checked that the {objs[0]} rests on the {objs[1]}"
    if "three-block stack" in lower and len(objs) >= 3:
        ok = desc.has(objs[0], "on", objs[1]) and desc.has(objs[2], "on", objs[0])
        return ok, "checked both levels of the stack"
    if "color match" in lower and len(objs) >= 6:
        ok = all(
            desc.has(top, "on", base)
            for top, base in [(objs[0], objs[3]), (objs[1], objs[4]), (objs[2], objs[5])]
        )
        return ok, "checked all three two-block stacks"
    if "complex pyramid" in lower and len(objs) >= 6:
        b1, b2, b3, m1, m2, top = objs[:6]
        ok = (
            (desc.has(m1, "on", b1) or desc.has(m1, "on", b2))
            and (desc.has(m2, "on", b2) or desc.has(m2, "on", b3))
            and (desc.has(top, "on", m1) or desc.has(top, "on", m2))
        )
        return ok, "checked the three pyramid levels"
    if "pyramid" in lower and len(objs) >= 3:
        left, right, top = objs[0], objs[1], objs[2]
        ok = (desc.has(top, "on", left) or desc.has(top, "on", right)) and (
            desc.has(left, "on", "table") and desc.has(right, "on", "table")
        )
        return ok, "checked the top block bridges the base pair"
    if "acquisition" in lower and objs:
        item = next(o for o in objs if "drawer" not in o.lower())
        drawer = next(o for o in objs if "drawer" in o.lower())
        ok = desc.has(item, "on", "table") and desc.has(drawer, "closed")
        return ok, f"checked the {item} is out on the table and the {drawer} is closed"
    if "take out" in lower and objs:
        item = next(o for o in objs if "drawer" not in o.lower())
        ok = desc.has(item, "on", "table")
        return ok, f"checked the {item} is on the table"
    if "open" in lower and any("drawer" in o.lower() for o in objs):
        drawer = next(o for o in objs if "drawer" in o.lower())
        ok = desc.has(drawer, "open")
        return ok, f"checked the {drawer} is open"
    if "close" in lower and any("drawer" in o.lower() for o in objs):
        drawer = next(o for o in objs if "drawer" in o.lower())
        ok = desc.has(drawer, "closed")
        return ok, f"checked the {drawer} is closed"
    if "organization" in lower and objs:
        bin_name = next((o for o in objs if "bin" in o.lower()), None)
        shelf = next((o for o in objs if "shelf" in o.lower()), None)
        rubbish = [o for o in objs if _is_rubbish(o) and o != bin_name]
        useful = [o for o in objs if o not in (bin_name, shelf) and o not in rubbish]
        ok = all(desc.has(r, "inside", bin_name) for r in rubbish) and all(
            desc.has(u, "on", shelf) for u in useful
        )
        return ok, "checked the bin contents and the shelf contents"
    if ("clear" in lower or "rubbish" in lower) and objs:
        container = next((o for o in objs if "bin" in o.lower()), objs[-1])
        items = [o for o in objs if o != container]
        ok = all(desc.has(i, "inside", container) for i in items)
        return ok, f"checked everything is inside the {container}"
    if "shelve" in lower and objs:
        surface = next((o for o in objs if "shelf" in o.lower()), objs[-1])
        items = [o for o in objs if o != surface]
        ok = all(desc.has(i, "on", surface) for i in items)
        return ok, f"checked everything rests on the {surface}"
    compiled = compile_condition(condition)
    if not compiled.vacuous:
        ok = condition_holds(compiled, desc)
        return ok, f"checked the relation {compiled.relation}"
    return True, "condition is vacuous"


def ground_truth_success(task, scene) -> bool:
    """Judge a task's goal directly against the simulator's ground truth.

    Used by the experiment harness to score outcomes independently of
    whatever verification the agent variant did (or skipped).
    """
    from ..sim.describe import describe

    block = task.to_json() if hasattr(task, "to_json") else task
    condition = f"{_task_name(block)}: {_task_description(block)}"
    ok, _ = _check_goal(condition, _task_objects(block), describe(scene))
    return ok


# --- reflector -----------------------------------------------------------------


PICK_AND_PLACE_BODY = """pos = get_obj_position(object_name)
dims = get_obj_dimensions(object_name)
movep((pos[0], pos[1], pos[2] + dims[2]))
movep((pos[0], pos[1], pos[2]))
close_gripper()
movep((pos[0], pos[1], BOUNDS_MAX[2]))
movep((destination[0], destination[1], BOUNDS_MAX[2]))
movep((destination[0], destination[1], destination[2]))
open_gripper()
go_home()"""

STACK_BLOCKS_BODY = """go_home()
base = get_obj_position(block2)
height = get_obj_dimensions(block2)
pick_and_place_object(block1, base + (0, 0, height[2]))
go_home()"""

# Variant bodies used when the library does not yet have the building blocks.
STACK_BLOCKS_PRIMITIVE_BODY = """go_home()
base = get_obj_position(block2)
height = get_obj_dimensions(block2)
pos = get_obj_position(block1)
dims = get_obj_dimensions(block1)
movep((pos[0], pos[1], pos[2] + dims[2]))
movep((pos[0], pos[1], pos[2]))
close_gripper()
movep((pos[0], pos[1], BOUNDS_MAX[2]))
movep((base[0], base[1], BOUNDS_MAX[2]))
movep((base[0], base[1], base[2] + height[2]))
open_gripper()
go_home()"""

PUT_IN_CONTAINER_PRIMITIVE_BODY = """container_position = get_obj_position(container_name)
pos = get_obj_position(object_name)
dims = get_obj_dimensions(object_name)
movep((pos[0], pos[1], pos[2] + dims[2]))
movep((pos[0], pos[1], pos[2]))
close_gripper()
movep((pos[0], pos[1], BOUNDS_MAX[2]))
movep((container_position[0], container_position[1], BOUNDS_MAX[2]))
movep((container_position[0], container_position[1], container_position[2]))
open_gripper()
go_home()"""

THREE_STACK_BODY = """stack_blocks(first_block, second_block)
stack_position = get_obj_position(first_block)
stack_height = get_obj_dimensions(first_block)
pick_and_place_object(third_block, stack_position + (0, 0, stack_height[2]))
go_home()"""

BUILD_PYRAMID_BODY = """anchor = (BOUNDS_MIN + BOUNDS_MAX) / 2
width = get_obj_dimensions(base_left)
pick_and_place_object(base_left, (anchor[0], anchor[1] - width[1] / 2, width[2] / 2))
left_position = get_obj_position(base_left)
pick_and_place_object(base_right, (left_position[0], left_position[1] + width[1], left_position[2]))
right_position = get_obj_position(base_right)
pick_and_place_object(top_block, ((left_position[0] + right_position[0]) / 2, (left_position[1] + right_position[1]) / 2, left_position[2] + width[2]))
go_home()"""

OPEN_DRAWER_BODY = """handle_center = get_obj_position(drawer_name)
drawer_size = get_obj_dimensions(drawer_name)
movep((handle_center[0] - drawer_size[0] / 2, handle_center[1], handle_center[2]))
close_gripper()
movep((handle_center[0] - drawer_size[0] / 2 - 0.2, handle_center[1], handle_center[2]))
open_gripper()
go_home()"""

CLOSE_DRAWER_BODY = """handle_center = get_obj_position(drawer_name)
drawer_size = get_obj_dimensions(drawer_name)
movep((handle_center[0] - drawer_size[0] / 2, handle_center[1], handle_center[2]))
close_gripper()
movep((handle_center[0] - drawer_size[0] / 2 + 0.2, handle_center[1], handle_center[2]))
open_gripper()
go_home()"""

PUT_IN_CONTAINER_BODY = """container_position = get_obj_position(container_name)
pick_and_place_object(object_name, (container_position[0], container_position[1], container_position[2]))"""


def _skill_entry(sig, description, input_doc, output_doc, related, example, body) -> dict:
    return {
        "Function name": sig,
        "Description": description,
        "Input": input_doc,
        "Output": output_doc,
        "Code": body,
        "Example": example,
        "Related functions": ", ".join(f"{r}()" for r in related),
    }


def _route_skill(task: dict, skills: set) -> dict | None:
    name = _task_name(task).lower()
    objs = _task_objects(task)
    has_drawer = any("drawer" in o.lower() for o in objs)
    if "open" in name and has_drawer:
        if "open_drawer" in skills:
            return None
        return _skill_entry(
            "open_drawer(drawer_name)",
            "Open a drawer by gripping the handle at the center of its front "
            "face and pulling along the joint axis until fully open.",
            "drawer_name: name of the drawer to open.",
            "None.",
            ("get_obj_position", "get_obj_dimensions", "movep", "close_gripper", "open_gripper", "go_home"),
            f"open_drawer({objs[0]!r})" if objs else "open_drawer('drawer')",
            OPEN_DRAWER_BODY,
        )
    if ("close" in name or "acquisition" in name) and has_drawer:
        if "close_drawer" in skills:
            return None
        drawer = next(o for o in objs if "drawer" in o.lower())
        return _skill_entry(
            "close_drawer(drawer_name)",
            "Close a drawer by gripping its handle and pushing along the joint "
            "axis until fully shut.",
            "drawer_name: name of the drawer to close.",
            "None.",
            ("get_obj_position", "get_obj_dimensions", "movep", "close_gripper", "open_gripper", "go_home"),
            f"close_drawer({drawer!r})",
            CLOSE_DRAWER_BODY,
        )
    if "two-block stack" in name and "stack_blocks" not in skills:
        composed = "pick_and_place_object" in skills
        return _skill_entry(
            "stack_blocks(block1, block2)",
            "Stack one named block on top of another by placing it one block "
            "height above the base block's current position.",
            "block1: block to move; block2: block to stack onto.",
            "None.",
            ("go_home", "get_obj_position", "get_obj_dimensions", "pick_and_place_object")
            if composed
            else (
                "go_home",
                "get_obj_position",
                "get_obj_dimensions",
                "movep",
                "close_gripper",
                "open_gripper",
            ),
            f"stack_blocks({objs[0]!r}, {objs[1]!r})" if len(objs) >= 2 else
            "stack_blocks('block a', 'block b')",
            STACK_BLOCKS_BODY if composed else STACK_BLOCKS_PRIMITIVE_BODY,
        )
    if "three-block stack" in name and "create_three_block_stack" not in skills:
        if not {"stack_blocks", "pick_and_place_object"} <= skills:
            return None
        return _skill_entry(
            "create_three_block_stack(first_block, second_block, third_block)",
            "Build a three-block tower: stack the first block on the second, "
            "then place the third on the new top of the stack.",
            "first_block, second_block, third_block: names of the blocks, bottom-up "
            "order second, first, third.",
            "None.",
            ("stack_blocks", "get_obj_position", "get_obj_dimensions", "pick_and_place_object", "go_home"),
            (
                f"create_three_block_stack({objs[0]!r}, {objs[1]!r}, {objs[2]!r})"
                if len(objs) >= 3
                else "create_three_block_stack('a', 'b', 'c')"
            ),
            THREE_STACK_BODY,
        )
    if "block pyramid" in name and "build_pyramid" not in skills:
        if "pick_and_place_object" not in skills:
            return None
        return _skill_entry(
            "build_pyramid(base_left, base_right, top_block)",
            "Build a small pyramid at the center of the workspace: two base "
            "blocks side by side and one block bridging them on top.",
            "base_left, base_right, top_block: names of the three blocks.",
            "None.",
            ("get_obj_dimensions", "pick_and_place_object", "get_obj_position", "go_home"),
            (
                f"build_pyramid({objs[0]!r}, {objs[1]!r}, {objs[2]!r})"
                if len(objs) >= 3
                else "build_pyramid('a', 'b', 'c')"
            ),
            BUILD_PYRAMID_BODY,
        )
    if ("clear" in name or "rubbish" in name) and "put_in_container" not in skills:
        composed = "pick_and_place_object" in skills
        container = next((o for o in objs if "bin" in o.lower()), "container")
        item = next((o for o in objs if o != container), "object")
        return _skill_entry(
            "put_in_container(object_name, container_name)",
            "Drop a named object into an open-top container by releasing it "
            "above the container's center.",
            "object_name: object to move; container_name: the container.",
            "None.",
            ("get_obj_position", "pick_and_place_object")
            if composed
            else (
                "get_obj_position",
                "get_obj_dimensions",
                "movep",
                "close_gripper",
                "open_gripper",
                "go_home",
            ),
            f"put_in_container({item!r}, {container!r})",
            PUT_IN_CONTAINER_BODY if composed else PUT_IN_CONTAINER_PRIMITIVE_BODY,
        )
    if "pick_and_place_object" not in skills and (
        "pick and place" in name or "move" in name or "edge" in name or "boundary" in name
        or "shelve" in name or "take out" in name
    ):
        return _skill_entry(
            "pick_and_place_object(object_name, destination)",
            "Pick up a named object and place it at a destination position. "
            "Approaches from above, grasps, carries at travel height, places, "
            "and returns home.",
            "object_name: string name of the object; destination: (x, y, z) target position.",
            "None; the robot ends at the home position.",
            (
                "get_obj_position",
                "get_obj_dimensions",
                "movep",
                "close_gripper",
                "open_gripper",
                "go_home",
            ),
            f"pick_and_place_object({objs[0]!r}, (0.5, 0.45, 0.02))" if objs else
            "pick_and_place_object('object', (0.5, 0.45, 0.02))",
            PICK_AND_PLACE_BODY,
        )
    return None


# --- precondition generator ------------------------------------------------------


def _preconditions(ctx: dict) -> dict:
    plan = ctx["plan"]
    sentences = ["the workspace is reachable"]
    for step in plan[:-1] if len(plan) > 1 else []:
        sentences.append(_postcondition_of(step))
    return {"Preconditions": sentences[: len(plan)]}


def _postcondition_of(step: dict) -> str:
    name = step.get("Name", "").lower()
    code = step.get("Code", "")
    lowered = f"{name} {code.lower()}"
    target = _first_quoted(code)
    if "open" in name and "drawer" in lowered and target:
        return f"the {target} is open"
    if ("close" in name or "push" in name) and "drawer" in lowered and target:
        return f"the {target} is closed"
    if "put_in_container" in code or "into the" in name:
        names = _all_quoted(code)
        if len(names) >= 2:
            return f"the {names[0]} is inside the {names[1]}"
    if "stack_blocks" in code:
        names = _all_quoted(code)
        if len(names) >= 2:
            return f"the {names[0]} is on the {names[1]}"
    if ("move the" in name or "pick_and_place_object" in code) and target:
        return f"the {target} is on the table"
    return "the workspace is reachable"


def _first_quoted(code: str) -> str | None:
    names = _all_quoted(code)
    return names[0] if names else None


def _all_quoted(code: str) -> list[str]:
    import re

    return re.findall(r'"([^"]+)"', code)


# --- controller ----------------------------------------------------------------


def _controller_action(ctx: dict) -> dict:
    history = ctx["history"]
    instruction = _latest_user(history) or ctx["instruction"]
    intent, payload = _intent(instruction)
    turns_after = _history_after_last_user(history)
    observations = [h for h in turns_after if h.get("type") == "observation"]
    results = [h for h in turns_after if h.get("type") == "task_result"]

    if intent == "find":
        return _find_flow(payload, observations, results)
    if intent == "stack":
        return _stack_flow(payload, observations, results)
    if intent == "clean":
        return _clean_flow(observations, results)
    if intent == "move_edge":
        return _move_edge_flow(payload, observations, results)
    return _generic_flow(instruction, observations, results)


def _latest_user(history: list[dict]) -> str | None:
    for h in reversed(history):
        if h.get("type") == "user":
            return h.get("text")
    return None


def _history_after_last_user(history: list[dict]) -> list[dict]:
    out: list[dict] = []
    for h in history:
        if h.get("type") == "user":
            out = []
        else:
            out.append(h)
    return out


def _intent(instruction: str) -> tuple[str, dict]:
    import re

    t = instruction.lower().strip()
    m = re.search(r"(?:can't find|cannot find|where is|find)\s+(?:my |the )?([\w ]+?)[.?!]?$", t)
    if m and ("find" in t or "where" in t):
        return "find", {"target": m.group(1).strip()}
    m = re.search(r"(?:put|stack|place)\s+(?:the )?(.+?)\s+on(?:to)?\s+(?:top of )?(?:the )?(.+?)[.?!]?$", t)
    if m and "clean" not in t:
        return "stack", {"top": m.group(1).strip(), "base": m.group(2).strip()}
    if "clean the table" in t or "clean up" in t:
        return "clean", {}
    m = re.search(r"move\s+(?:the )?(.+?)\s+to\s+(?:the )?edge", t)
    if m:
        return "move_edge", {"target": m.group(1).strip()}
    return "generic", {}


def _act(thought: str, action: str, action_input: dict) -> dict:
    return {"Thought": thought, "Action": action, "Action input": action_input}


def _observe(thought: str, query: str) -> dict:
    return _act(thought, "observe()", {"query": query})


def _finish(thought: str, message: str) -> dict:
    return _act(thought, "finish()", {"message": message})


def _execute(thought: str, name: str, objects: list[str], description: str) -> dict:
    return _act(
        thought,
        "execute_task()",
        {"Task Name": name, "Objects": objects, "Task Description": description},
    )


def _find_flow(payload: dict, observations: list[dict], results: list[dict]) -> dict:
    target = payload["target"]
    if not observations:
        return _observe(
            f"The user cannot find the {target}; first look for it on the table.",
            f"Where is the {target}?",
        )
    last = observations[-1]
    answer = last.get("answer", "").lower()
    observed = last.get("observed_objs", [])
    containers = [o for o in observed if "drawer" in o.lower() or "bin" in o.lower()]
    if target in answer and ("not" not in answer or "not visible" not in answer):
        place = next((c for c in containers if c in answer), None)
        where = f"It is in the {place}." if place else "It is on the table."
        return _finish(
            f"The {target} has been located; report back to the user.",
            f"I found your {target}. {where}",
        )
    opened = any(r.get("success") for r in results)
    if "impossible to determine" in answer or "cannot" in answer:
        drawer = next((c for c in containers if "drawer" in c.lower()), None)
        if drawer and not opened:
            return _execute(
                f"The inside of the {drawer} is not visible; open it and look inside.",
                f"Open the {drawer.title()}",
                [drawer],
                f"Pull the {drawer} open so its contents become visible.",
            )
    if opened:
        drawer = next((c for c in containers if "drawer" in c.lower()), "drawer")
        return _observe(
            "The drawer is open now; check what is inside.",
            f"What is inside the {drawer} now?",
        )
    drawer = next((c for c in containers if "drawer" in c.lower()), None)
    if drawer:
        return _observe(
            f"The {target} is not in sight, but there is a {drawer}; it may be inside.",
            f"What is inside the {drawer}?",
        )
    return _finish(
        f"The {target} is nowhere to be found and there is nothing left to open.",
        f"I could not find the {target} anywhere on the table.",
    )


def _stack_flow(payload: dict, observations: list[dict], results: list[dict]) -> dict:
    top, base = payload["top"], payload["base"]
    if results and results[-1].get("success"):
        return _finish(
            "The stacking task finished successfully.",
            f"The {top} is now on the {base}.",
        )
    if results and not results[-1].get("success"):
        return _finish(
            "The executor could not finish the stacking task.",
            f"I was unable to put the {top} on the {base}.",
        )
    if not observations:
        return _observe(
            "Check what is on the table before acting.",
            "What objects are on the table?",
        )
    answer = observations[-1].get("answer", "").lower()
    observed = observations[-1].get("observed_objs", [])
    if f"{top} is on top of the {base}" in answer:
        return _finish(
            "The requested arrangement already holds; nothing to do.",
            f"The {top} is already on the {base}.",
        )
    if top in observed and base in observed:
        return _execute(
            f"Both the {top} and the {base} are visible; run the stacking task.",
            f"Stack the {top}",
            [top, base],
            f"Place the {top} on top of the {base}.",
        )
    missing = top if top not in observed else base
    return _finish(
        f"The {missing} is not visible, so the request cannot be grounded.",
        f"I cannot see the {missing} on the table.",
    )


def _clean_flow(observations: list[dict], results: list[dict]) -> dict:
    if not observations:
        return _observe("Survey the table before cleaning.", "What objects are on the table?")
    if len(observations) == 1:
        return _observe(
            "Identify which of the observed objects count as rubbish.",
            "Which objects on the table are rubbish?",
        )
    all_objs = observations[0].get("observed_objs", [])
    rubbish = [o for o in observations[-1].get("observed_objs", []) if _is_rubbish(o)]
    bin_name = next((o for o in all_objs if "bin" in o.lower()), None)
    shelf = next((o for o in all_objs if "shelf" in o.lower()), None)
    useful = [
        o
        for o in all_objs
        if o not in rubbish and o not in (bin_name, shelf) and "bin" not in o.lower()
    ]
    if not results:
        return _execute(
            "Rubbish goes into the bin first.",
            "Clear the Rubbish",
            rubbish + [bin_name],
            f"Put {_listing(rubbish)} into the {bin_name}.",
        )
    if len(results) == 1:
        return _execute(
            "Now move the useful objects onto the shelf.",
            "Shelve the Useful Objects",
            useful + [shelf],
            f"Place {_listing(useful)} on top of the {shelf}.",
        )
    return _finish(
        "Rubbish is binned and useful objects are shelved; the table is clean.",
        "I have cleaned the table: rubbish is in the bin and the other objects are on the shelf.",
    )


def _move_edge_flow(payload: dict, observations: list[dict], results: list[dict]) -> dict:
    target = payload["target"]
    if results and results[-1].get("success"):
        return _finish("The move finished.", f"I moved the {target} to the edge of the table.")
    if results:
        return _finish("The move failed.", f"I could not move the {target}.")
    return _execute(
        f"Move the {target} to the boundary of the workspace.",
        f"Move the {target.title()} to the Edge",
        [target],
        f"Pick up the {target} and place it at the right boundary of the table.",
    )


def _generic_flow(instruction: str, observations: list[dict], results: list[dict]) -> dict:
    if results:
        ok = results[-1].get("success")
        return _finish(
            "The requested task has been attempted.",
            "Done." if ok else "I could not complete the request.",
        )
    if not observations:
        return _observe("Survey the scene first.", "What objects are on the table?")
    observed = observations[-1].get("observed_objs", [])
    mentioned = [o for o in observed if o.lower() in instruction.lower()]
    objects = mentioned or observed[:1]
    if not objects:
        return _finish("Nothing on the table matches the request.", "The table is empty.")
    return _execute(
        "Ground the instruction in the visible objects and execute it.",
        "User Request",
        objects,
        instruction,
    )
