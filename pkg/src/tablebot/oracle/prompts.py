"""Prompt rendering: versioned template files instantiated per request.

Templates are deliberately scene-agnostic: the only scenario-specific
strings in a rendered prompt come from the request context (the current
scene), never from the template itself, and no in-context examples from
other scenes are ever injected. Planner and Reflector prompts embed the
full current skill-library catalogue so prompts track library growth.
"""

from __future__ import annotations

import json
import re
from importlib import resources

from ..dsl.library import SkillLibrary
from .base import MissingContextField, OracleRequest, OracleRole

_TEMPLATE_FILES = {
    OracleRole.SCENE_DESCRIBER: "scene_describer.txt",
    OracleRole.TASK_GENERATOR: "task_generator.txt",
    OracleRole.PLANNER: "planner.txt",
    OracleRole.CODE_VERIFIER_GEN: "code_verifier_gen.txt",
    OracleRole.VISION_VERIFIER: "vision_verifier.txt",
    OracleRole.REFLECTOR: "reflector.txt",
    OracleRole.PRECONDITION_GEN: "precondition_gen.txt",
    OracleRole.CONTROLLER: "controller.txt",
}

# Bare-word braces are placeholders; braces followed by a quote belong to
# the JSON format examples and stay literal.
_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def load_template(role: OracleRole) -> str:
    return (
        resources.files("tablebot.oracle")
        .joinpath(f"templates/{_TEMPLATE_FILES[role]}")
        .read_text()
    )


def _fields_for(role: OracleRole, context: dict, lib: SkillLibrary) -> dict[str, str]:
    fields: dict[str, str] = {}
    if role == OracleRole.SCENE_DESCRIBER:
        fields["scene_text"] = context["scene"].get("text", "")
    elif role == OracleRole.TASK_GENERATOR:
        fields["scene_text"] = context["scene_text"]
        fields["objects_listing"] = "\n".join(
            f"- {o['name']} ({o['color']})" for o in context["objects"]
        )
        fields["max_tasks"] = str(context.get("max_tasks", 10))
    elif role == OracleRole.PLANNER:
        fields["task_json"] = json.dumps(context["task"], indent=2)
        fields["library_listing"] = context["library"]
        bounds = context["bounds"]
        fields["bounds_min"] = str(tuple(bounds[0]))
        fields["bounds_max"] = str(tuple(bounds[1]))
        repair = ""
        if "failed_step" in context:
            repair = (
                "\nRepair request: step "
                f"{context['failed_step']['index'] + 1} of the previous plan failed "
                f"with this error:\n{context['failed_step']['error']}\n"
                "Regenerate only that step's Code; output exactly one JSON block "
                "with the corrected step, keeping its Name and Explanation."
            )
        elif "failure" in context:
            repair = (
                "\nRepair request: the previous plan failed during execution.\n"
                f"Previous plan:\n{json.dumps(context.get('previous_plan', []), indent=2)}\n"
                f"Failure report: {context['failure']}\n"
                "Modify the plan to avoid this failure and output the full revised plan."
            )
        fields["repair_section"] = repair
    elif role == OracleRole.CODE_VERIFIER_GEN:
        fields["task_json"] = json.dumps(context["task"], indent=2)
    elif role == OracleRole.VISION_VERIFIER:
        fields["condition"] = context["condition"]
        fields["initial_description"] = context["initial_description"]
        fields["scene_text"] = context["scene"].get("text", "")
    elif role == OracleRole.REFLECTOR:
        fields["task_json"] = json.dumps(context["task"], indent=2)
        fields["plan_json"] = json.dumps(context["plan"], indent=2)
        fields["library_listing"] = context["library"]
    elif role == OracleRole.PRECONDITION_GEN:
        fields["task_json"] = json.dumps(context["task"], indent=2)
        fields["plan_json"] = json.dumps(context["plan"], indent=2)
    elif role == OracleRole.CONTROLLER:
        fields["instruction"] = context["instruction"]
        fields["history"] = json.dumps(context["history"], indent=2)
        fields["library_listing"] = context["library"]
    return fields


def render_prompt(role: OracleRole, context: dict, lib: SkillLibrary) -> str:
    """Instantiate the role's template; pure in (role, context, lib)."""
    # Reuse the request validation for required-field errors.
    OracleRequest(role, context)
    template = load_template(role)
    fields = _fields_for(role, context, lib)

    def sub(m: re.Match) -> str:
        key = m.group(1)
        if key in fields:
            return fields[key]
        return m.group(0)

    rendered = _PLACEHOLDER.sub(sub, template)
    unfilled = [
        m.group(1) for m in _PLACEHOLDER.finditer(rendered) if m.group(1) in _TEMPLATE_KEYS
    ]
    if unfilled:
        raise MissingContextField(f"{role.value} prompt left fields unfilled: {unfilled}")
    return rendered


_TEMPLATE_KEYS = {
    "scene_text",
    "objects_listing",
    "max_tasks",
    "bounds_min",
    "bounds_max",
    "library_listing",
    "task_json",
    "repair_section",
    "condition",
    "initial_description",
    "plan_json",
    "history",
    "instruction",
}
