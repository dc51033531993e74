"""Exploration loop: understand the scene, self-generate a task curriculum,
plan, execute, verify, repair by error class, and reflect successes into new
skills.

The loop gives each task up to num_retries attempts. Interpretation errors
(parse, undefined symbol, arity, typing, malformed oracle output) are
repaired in place by regenerating only the offending step's code, which is
free the first time; grounding errors (anything raised while touching the
world, and failed verification) consume an attempt: the scene is restored
to the task's starting snapshot and the plan is regenerated from the
failure report.
"""

from __future__ import annotations

import copy
import json
import logging
import random
import time
from dataclasses import dataclass, field, replace

from .dsl.analysis import callees_of, validate
from .dsl.ast import Let, Program
from .dsl.interp import Interpreter
from .dsl.library import SkillDef, SkillLibrary, add_skill, empty_library, parse_signature
from .dsl.parser import parse, parse_expression
from .errors import ClassifiedError, FormatError, GroundError, InterpError, classify_error
from .oracle.base import OracleBackend, OracleRequest, OracleRole
from .sim.describe import SceneDescription, describe
from .sim.model import Scene
from .sim.scenarios import load_scenario, reset_for_task

log = logging.getLogger("tablebot.explore")

READONLY_CALLEES = frozenset({"get_obj_position", "get_obj_dimensions", "abs", "dist"})
_COMPARATORS = ("<=", ">=", "==", "<", ">")


@dataclass(frozen=True)
class TaskSpec:
    name: str
    objects: tuple[str, ...]
    description: str

    @classmethod
    def from_json(cls, block: dict) -> "TaskSpec":
        name = block.get("Task Name") or block.get("Task name") or ""
        objects = tuple(block.get("Objects") or ())
        description = block.get("Task Description") or block.get("Task description") or ""
        return cls(name=name, objects=objects, description=description)

    def to_json(self) -> dict:
        return {
            "Task Name": self.name,
            "Objects": list(self.objects),
            "Task Description": self.description,
        }


@dataclass(frozen=True)
class PlanStep:
    name: str
    explanation: str
    code: str

    def program(self) -> Program:
        return parse(self.code)

    def to_json(self) -> dict:
        return {"Name": self.name, "Explanation": self.explanation, "Code": self.code}


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...]

    @classmethod
    def from_blocks(cls, blocks: list[dict]) -> "Plan":
        steps = tuple(
            PlanStep(
                name=b.get("Name", f"step {i + 1}"),
                explanation=b.get("Explanation", ""),
                code=b.get("Code", ""),
            )
            for i, b in enumerate(blocks)
        )
        if not steps:
            raise FormatError("planner returned an empty plan")
        return cls(steps)

    def to_json(self) -> list[dict]:
        return [s.to_json() for s in self.steps]


@dataclass(frozen=True)
class ExplorationConfig:
    num_retries: int = 3
    max_tasks: int = 10
    verification_mode: str = "both"  # code | vision | both
    verify: bool = True
    skill_learning: bool = True
    validate_skill_examples: bool = True

    def __post_init__(self):
        if self.num_retries < 1:
            raise ValueError("num_retries must be >= 1")
        if self.verification_mode not in ("code", "vision", "both"):
            raise ValueError(f"unknown verification_mode {self.verification_mode!r}")


@dataclass
class TaskOutcome:
    task: TaskSpec
    success: bool  # what the agent believes (verification verdict)
    attempts: int
    error_log: list[ClassifiedError] = field(default_factory=list)
    skill_added: str | None = None
    steps_executed: int = 0
    wall_s: float = 0.0
    # Ground-truth verdict measured by the harness hook, independent of the
    # agent's own verification (differs under the no-verification ablation).
    true_success: bool | None = None
    # The plan as last executed (post-repair).
    plan: list[dict] | None = None

    def to_json(self, include_timing: bool = True) -> dict:
        d = {
            "task": self.task.to_json(),
            "success": self.success,
            "attempts": self.attempts,
            "errors": [
                {"category": e.category, "kind": e.kind, "message": e.message, "step": e.step_index}
                for e in self.error_log
            ],
            "skill_added": self.skill_added,
            "steps_executed": self.steps_executed,
            "plan": self.plan,
        }
        if self.true_success is not None:
            d["true_success"] = self.true_success
        if include_timing:
            d["wall_s"] = round(self.wall_s, 6)
        return d


@dataclass
class ExplorationReport:
    scenario_id: str
    seed: int
    outcomes: list[TaskOutcome] = field(default_factory=list)
    library_snapshot: dict = field(default_factory=dict)
    wall_s: float = 0.0
    final_library: SkillLibrary | None = None

    @property
    def success_count(self) -> int:
        return sum(1 for o in self.outcomes if o.success)

    def skills_acquired(self) -> list[str]:
        return [o.skill_added for o in self.outcomes if o.skill_added]

    def to_json(self, include_timing: bool = True) -> dict:
        d = {
            "scenario_id": self.scenario_id,
            "seed": self.seed,
            "outcomes": [o.to_json(include_timing) for o in self.outcomes],
            "library": self.library_snapshot,
        }
        if include_timing:
            d["wall_s"] = round(self.wall_s, 6)
        return d

    def canonical_json(self) -> str:
        """Deterministic serialization: wall-clock timings excluded."""
        return json.dumps(self.to_json(include_timing=False), sort_keys=True, indent=2)


# --- oracle plumbing --------------------------------------------------------


def ask(backend: OracleBackend, role: OracleRole, context: dict) -> list:
    """One oracle call with a single re-ask on malformed output."""
    try:
        return backend.call(OracleRequest(role, context)).blocks
    except FormatError as first:
        retry_ctx = dict(context)
        retry_ctx["retry_note"] = f"previous response was rejected: {first.message}"
        try:
            return backend.call(OracleRequest(role, retry_ctx)).blocks
        except FormatError:
            raise first from None


def _planner_context(task: TaskSpec, lib: SkillLibrary, scene: Scene) -> dict:
    return {
        "task": task.to_json(),
        "library": lib.signature_listing(),
        "skills": lib.skill_names(),
        "bounds": [list(scene.bounds.min_corner), list(scene.bounds.max_corner)],
    }


# --- operations ----------------------------------------------------------------


def understand_scene(scene: Scene, backend: OracleBackend) -> SceneDescription:
    truth = describe(scene)
    blocks = ask(backend, OracleRole.SCENE_DESCRIBER, {"scene": truth.to_dict()})
    block = blocks[0]
    objects = [
        {"name": o.get("Name", ""), "color": o.get("Color", "")}
        for o in block.get("Objects on table", [])
    ]
    return SceneDescription(
        text=block.get("Description", truth.text),
        objects=objects,
        relations=truth.relations,
    )


def generate_tasks(
    desc: SceneDescription, backend: OracleBackend, max_tasks: int = 10
) -> list[TaskSpec]:
    blocks = ask(
        backend,
        OracleRole.TASK_GENERATOR,
        {"scene_text": desc.text, "objects": desc.objects, "max_tasks": max_tasks},
    )
    known = set(desc.object_names())
    tasks: list[TaskSpec] = []
    seen_names: set[str] = set()
    seen_shapes: set[tuple] = set()
    for block in blocks:
        task = TaskSpec.from_json(block)
        if not task.objects or any(o not in known for o in task.objects):
            log.info("dropping task %r: references unobserved objects", task.name)
            continue
        if task.name in seen_names:
            log.info("dropping duplicate task name %r", task.name)
            continue
        shape = (tuple(sorted(task.objects)), task.description.strip().lower())
        if shape in seen_shapes:
            log.info("dropping duplicate task shape for %r", task.name)
            continue
        seen_names.add(task.name)
        seen_shapes.add(shape)
        tasks.append(task)
        if len(tasks) >= max_tasks:
            break
    return tasks


def plan_task(task: TaskSpec, lib: SkillLibrary, scene: Scene, backend: OracleBackend) -> Plan:
    blocks = ask(backend, OracleRole.PLANNER, _planner_context(task, lib, scene))
    return Plan.from_blocks(blocks)


def validate_plan(plan: Plan, lib: SkillLibrary) -> tuple[int, InterpError] | None:
    """Parse and statically check every step before anything executes.

    Bindings made by earlier steps are visible to later ones.
    """
    bound: list[str] = []
    for i, step in enumerate(plan.steps):
        try:
            program = step.program()
            validate(program, lib, params=tuple(bound))
        except InterpError as e:
            return i, e
        bound.extend(s.name for s in program.statements if isinstance(s, Let))
    return None


def execute_plan(
    plan: Plan,
    lib: SkillLibrary,
    scene: Scene,
    episode_rng: random.Random | None = None,
) -> tuple[int, Exception] | None:
    """Validate then run the plan's steps in order, sharing one environment.

    Returns None on success, else (step_index, error). With step-failure
    noise configured, a failing step is silently nullified (its statements
    never run), standing in for exogenous disturbances.
    """
    failed = validate_plan(plan, lib)
    if failed is not None:
        return failed
    interp = Interpreter(lib, scene)
    env: dict = {}
    q = scene.noise.step_fail_prob
    for i, step in enumerate(plan.steps):
        if q > 0 and episode_rng is not None and episode_rng.random() < q:
            log.debug("step %d nullified by exogenous fault", i)
            continue
        try:
            interp.run(step.program(), env=env)
        except GroundError as e:
            return i, GroundError(e.kind, e.message, step_index=i)
    scene.last_trace = interp.trace
    return None


def repair_interpretation(
    plan: Plan,
    step_index: int,
    errmsg: str,
    task: TaskSpec,
    lib: SkillLibrary,
    scene: Scene,
    backend: OracleBackend,
) -> Plan:
    """Regenerate exactly one step's code; everything else stays identical."""
    ctx = _planner_context(task, lib, scene)
    ctx["failed_step"] = {
        "index": step_index,
        "error": errmsg,
        "step": plan.steps[step_index].to_json(),
    }
    blocks = ask(backend, OracleRole.PLANNER, ctx)
    new_code = blocks[0].get("Code", "") if blocks else ""
    old = plan.steps[step_index]
    steps = list(plan.steps)
    steps[step_index] = replace(old, code=new_code)
    return Plan(tuple(steps))


def repair_grounding(
    task: TaskSpec,
    plan: Plan,
    failure_report: str,
    lib: SkillLibrary,
    scene: Scene,
    backend: OracleBackend,
) -> Plan:
    """Regenerate the whole plan from the old plan plus the failure report."""
    ctx = _planner_context(task, lib, scene)
    ctx["previous_plan"] = plan.to_json()
    ctx["failure"] = failure_report
    blocks = ask(backend, OracleRole.PLANNER, ctx)
    return Plan.from_blocks(blocks)


# --- verification -----------------------------------------------------------------


@dataclass(frozen=True)
class PredicateCheck:
    bindings: Program
    conditions: tuple[tuple, ...]  # (lhs Expr, comparator, rhs Expr)


def compile_predicate(block: dict, lib: SkillLibrary) -> PredicateCheck:
    """Parse and validate a read-only predicate from a verifier JSON block."""
    bindings = parse(block.get("Bindings", ""))
    conditions = []
    for i, text in enumerate(block.get("Conditions", [])):
        for comp in _COMPARATORS:
            if comp in text:
                lhs_text, _, rhs_text = text.partition(comp)
                conditions.append(
                    (parse_expression(lhs_text), comp, parse_expression(rhs_text))
                )
                break
        else:
            raise InterpError("Parse", f"condition {i} has no comparator: {text!r}")
    if not conditions:
        raise InterpError("Parse", "predicate has no conditions")
    check = PredicateCheck(bindings, tuple(conditions))
    validate(bindings, lib, params=())
    names = set(callees_of(bindings))
    bound = tuple(s.name for s in bindings.statements if isinstance(s, Let))
    for lhs, _, rhs in check.conditions:
        cond_prog = Program((Let("_lhs", lhs), Let("_rhs", rhs)))
        validate(cond_prog, lib, params=bound)
        names |= set(callees_of(cond_prog))
    illegal = names - READONLY_CALLEES
    if illegal:
        raise InterpError(
            "TypeMismatch",
            f"verification predicates are read-only; {sorted(illegal)} not allowed",
        )
    return check


def evaluate_predicate(check: PredicateCheck, lib: SkillLibrary, scene: Scene) -> bool:
    """Evaluate on the live scene; an unresolvable query means 'not achieved'."""
    interp = Interpreter(lib, scene)
    env: dict = {}
    try:
        interp.run(check.bindings, env=env)
        frame = _frame_for(interp, env)
        for lhs, comp, rhs in check.conditions:
            left = interp.eval(lhs, frame)
            right = interp.eval(rhs, frame)
            if not _compare(left, comp, right):
                return False
    except GroundError:
        return False
    return True


def _frame_for(interp: Interpreter, env: dict):
    from .dsl.interp import _Frame

    return _Frame(env)


def _compare(left, comp: str, right) -> bool:
    if isinstance(left, tuple) or isinstance(right, tuple):
        raise GroundError("ExogenousFault", "predicate comparisons need scalars")
    if comp == "<=":
        return left <= right
    if comp == "<":
        return left < right
    if comp == ">=":
        return left >= right
    if comp == ">":
        return left > right
    return left == right


def verify_success(
    task: TaskSpec,
    scene: Scene,
    mode: str,
    backend: OracleBackend,
    lib: SkillLibrary,
    initial_description: str,
) -> tuple[bool, dict]:
    """Code- and/or vision-based success detection; both-mode is a conjunction."""
    evidence: dict = {"mode": mode}
    verdicts = []
    if mode in ("code", "both"):
        ok = _code_verify(task, scene, backend, lib, evidence)
        verdicts.append(ok)
    if mode in ("vision", "both"):
        final = describe(scene)
        blocks = ask(
            backend,
            OracleRole.VISION_VERIFIER,
            {
                "condition": f"{task.name}: {task.description}",
                "initial_description": initial_description,
                "scene": final.to_dict(),
                "objects": list(task.objects),
            },
        )
        verdict = bool(blocks[0].get("Satisfied"))
        evidence["vision"] = {"verdict": verdict, "reason": blocks[0].get("Reason", "")}
        verdicts.append(verdict)
    return all(verdicts), evidence


def _code_verify(
    task: TaskSpec, scene: Scene, backend: OracleBackend, lib: SkillLibrary, evidence: dict
) -> bool:
    ctx = {"task": task.to_json()}
    blocks = ask(backend, OracleRole.CODE_VERIFIER_GEN, ctx)
    try:
        check = compile_predicate(blocks[0], lib)
    except InterpError as e:
        retry_ctx = dict(ctx)
        retry_ctx["retry_note"] = f"the previous predicate was invalid: {e}"
        blocks = ask(backend, OracleRole.CODE_VERIFIER_GEN, retry_ctx)
        try:
            check = compile_predicate(blocks[0], lib)
        except InterpError as e2:
            log.warning("code verifier predicate invalid twice (%s); counting as failure", e2)
            evidence["code"] = {"verdict": False, "error": str(e2)}
            return False
    verdict = evaluate_predicate(check, lib, scene)
    evidence["code"] = {"verdict": verdict}
    return verdict


# --- reflection ----------------------------------------------------------------------


def _parse_skill_entry(entry: dict) -> SkillDef:
    sig = entry.get("Function name", "")
    name, params = parse_signature(sig)
    body = parse(entry.get("Code", ""))
    related = tuple(
        part.strip().removesuffix("()")
        for part in entry.get("Related functions", "").split(",")
        if part.strip()
    )
    return SkillDef(
        name=name,
        params=params,
        description=entry.get("Description", ""),
        input_doc=entry.get("Input", ""),
        output_doc=entry.get("Output", ""),
        related=related,
        example=entry.get("Example", ""),
        body=body,
    )


def reflect_skill(
    task: TaskSpec,
    plan: Plan,
    lib: SkillLibrary,
    backend: OracleBackend,
    scene: Scene,
    pre_task_snapshot: dict | None = None,
    config: ExplorationConfig | None = None,
) -> SkillDef | None:
    """Distill the successful plan into one new skill; None means decline.

    The proposed skill must parse, validate against the current library, use
    an unused name, and list exactly its body's callees; one re-ask is
    allowed, after which the skill is skipped (the task still succeeded).
    """
    config = config or ExplorationConfig()
    ctx = {
        "task": task.to_json(),
        "plan": plan.to_json(),
        "library": lib.signature_listing(),
        "skills": lib.skill_names(),
    }
    entry = ask(backend, OracleRole.REFLECTOR, ctx)[0]
    for attempt in range(2):
        if "Skip" in entry:
            return None
        problem = None
        skill = None
        try:
            skill = _parse_skill_entry(entry)
            if skill.name in lib.skills:
                problem = f"the name {skill.name!r} is already taken; choose a new one"
            else:
                validate(skill.body, lib, skill.params)
                actual = set(callees_of(skill.body))
                if set(skill.related) != actual:
                    problem = (
                        f"'Related functions' must list exactly the functions the body "
                        f"calls: {sorted(actual)}"
                    )
        except (InterpError, Exception) as e:  # noqa: BLE001 - any defect triggers one re-ask
            problem = f"the skill definition is invalid: {e}"
        if problem is None and skill is not None:
            if config.validate_skill_examples and pre_task_snapshot is not None:
                if not _example_resolves_task(skill, task, lib, backend, scene, pre_task_snapshot, config):
                    problem = "the Example call does not solve the task it came from"
                else:
                    return skill
            else:
                return skill
        if attempt == 0:
            retry_ctx = dict(ctx)
            retry_ctx["retry_note"] = problem
            entry = ask(backend, OracleRole.REFLECTOR, retry_ctx)[0]
        else:
            log.warning("skipping skill for %r: %s", task.name, problem)
    return None


def _example_resolves_task(
    skill: SkillDef,
    task: TaskSpec,
    lib: SkillLibrary,
    backend: OracleBackend,
    scene: Scene,
    pre_task_snapshot: dict,
    config: ExplorationConfig,
) -> bool:
    """Run the skill's example from the task's starting state on a scene clone."""
    try:
        program = parse(skill.example)
        candidate = add_skill(lib, skill)
        validate(program, candidate, params=())
        clone = copy.deepcopy(scene)
        clone.restore(pre_task_snapshot)
        # The example check probes the code's shape, not its luck: no noise.
        from .sim.model import NoiseConfig

        clone.noise = NoiseConfig()
        Interpreter(candidate, clone).run(program)
        ok, _ = verify_success(
            task, clone, config.verification_mode, backend, candidate,
            initial_description=describe(clone).text,
        )
        return ok
    except (InterpError, GroundError, FormatError) as e:
        log.warning("skill example for %r failed: %s", skill.name, e)
        return False


# --- the loop -------------------------------------------------------------------------


def run_exploration(
    config: ExplorationConfig,
    scenario,
    backend: OracleBackend,
    seed: int = 0,
    noise=None,
    library: SkillLibrary | None = None,
    truth_check=None,
) -> ExplorationReport:
    scene = load_scenario(scenario, seed=seed, noise=noise)
    episode_rng = random.Random(f"episode:{seed}")
    started = time.monotonic()
    desc = understand_scene(scene, backend)
    tasks = generate_tasks(desc, backend, config.max_tasks)
    lib = library if library is not None else empty_library()
    report = ExplorationReport(scenario_id=scene.scenario_id, seed=seed)

    for task in tasks:
        reset_for_task(scene)
        outcome, lib = _run_task(task, scene, lib, backend, config, episode_rng)
        if truth_check is not None:
            outcome.true_success = bool(truth_check(task, scene))
        report.outcomes.append(outcome)

    from .dsl.library import library_to_json

    report.library_snapshot = json.loads(library_to_json(lib))
    report.final_library = lib
    report.wall_s = time.monotonic() - started
    return report


def _run_task(
    task: TaskSpec,
    scene: Scene,
    lib: SkillLibrary,
    backend: OracleBackend,
    config: ExplorationConfig,
    episode_rng: random.Random,
) -> tuple[TaskOutcome, SkillLibrary]:
    started = time.monotonic()
    outcome = TaskOutcome(task=task, success=False, attempts=0)
    pre_snapshot = scene.snapshot()
    initial_description = describe(scene).text
    steps_before = scene.step_count
    plan: Plan | None = None
    failure_report: str | None = None

    for attempt in range(1, config.num_retries + 1):
        outcome.attempts = attempt
        if attempt > 1:
            scene.restore(pre_snapshot)
        try:
            if plan is None or failure_report is None:
                plan = plan_task(task, lib, scene, backend)
            else:
                plan = repair_grounding(task, plan, failure_report, lib, scene, backend)
            failure_report = None
        except FormatError as e:
            outcome.error_log.append(classify_error(e))
            failure_report = f"the planner response was malformed: {e.message}"
            continue

        plan, failure_report = _attempt(
            plan, task, scene, lib, backend, config, episode_rng, outcome, initial_description
        )
        if failure_report is None:
            outcome.success = True
            break

    if plan is not None:
        outcome.plan = plan.to_json()
    if outcome.success and config.skill_learning and plan is not None:
        skill = reflect_skill(task, plan, lib, backend, scene, pre_snapshot, config)
        if skill is not None:
            lib = add_skill(lib, skill)
            outcome.skill_added = skill.name
    outcome.steps_executed = scene.step_count - steps_before
    outcome.wall_s = time.monotonic() - started
    return outcome, lib


def _attempt(
    plan: Plan,
    task: TaskSpec,
    scene: Scene,
    lib: SkillLibrary,
    backend: OracleBackend,
    config: ExplorationConfig,
    episode_rng: random.Random,
    outcome: TaskOutcome,
    initial_description: str,
) -> tuple[Plan, str | None]:
    """One execution attempt: (final plan, None) on success, else
    (final plan, failure_report)."""
    interp_repairs = 0
    while True:
        failed = execute_plan(plan, lib, scene, episode_rng)
        if failed is None:
            break
        step_index, err = failed
        classified = classify_error(err)
        classified = ClassifiedError(
            classified.category, classified.kind, classified.message, step_index
        )
        outcome.error_log.append(classified)
        if classified.category == "Interpretation" and interp_repairs == 0:
            interp_repairs = 1
            try:
                plan = repair_interpretation(
                    plan, step_index, classified.message, task, lib, scene, backend
                )
                continue
            except FormatError as e:
                outcome.error_log.append(classify_error(e))
                return plan, f"repair of step {step_index + 1} failed: {e.message}"
        report = (
            f"step {step_index + 1} ({plan.steps[step_index].name!r}) failed with "
            f"{classified.kind}: {classified.message}"
        )
        return plan, report

    if not config.verify:
        return plan, None
    try:
        ok, evidence = verify_success(
            task, scene, config.verification_mode, backend, lib,
            initial_description=initial_description,
        )
    except FormatError as e:
        outcome.error_log.append(classify_error(e))
        return plan, f"verification output was malformed: {e.message}"
    if ok:
        return plan, None
    failure = GroundError("VerificationFailed", f"verification judged {task.name!r} incomplete")
    outcome.error_log.append(classify_error(failure))
    detail = evidence.get("vision", {}).get("reason", "")
    return plan, f"the task outcome failed verification. {detail}".strip()
