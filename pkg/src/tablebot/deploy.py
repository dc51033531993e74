"""Post-exploration serving: the observe/execute/finish controller loop and
backtracking plan execution with per-step preconditions.

A precondition is attached to every plan step (step i's precondition is the
postcondition of step i-1; step 0 is vacuous). Before a step runs its
precondition is checked against the scene; on a failed check, a failed
step, or a failed final verification, execution jumps back to the highest
earlier step whose precondition still holds and resumes forward, consuming
one unit of backtrack budget per jump.
"""

from __future__ import annotations

import logging
import queue
import random
import re
import time
from dataclasses import dataclass, field

from .conditions import Condition, compile_condition, condition_holds
from .dsl.interp import Interpreter
from .dsl.library import SkillLibrary
from .errors import FormatError, GroundError
from .explore import Plan, TaskSpec, ask, plan_task, validate_plan, verify_success
from .oracle.base import OracleBackend, OracleRole
from .sim.describe import describe
from .sim.model import Scene

log = logging.getLogger("tablebot.deploy")

DEFAULT_TURN_CAP = 20


@dataclass(frozen=True)
class ControllerAction:
    variant: str  # "observe" | "execute_task" | "finish"
    thought: str
    payload: dict

    @classmethod
    def from_block(cls, block: dict) -> "ControllerAction":
        action = block.get("Action", "")
        name = action.replace("()", "").strip()
        if name not in ("observe", "execute_task", "finish"):
            raise FormatError(f"controller returned unknown action {action!r}")
        return cls(
            variant=name,
            thought=block.get("Thought", ""),
            payload=block.get("Action input", {}) or {},
        )


@dataclass(frozen=True)
class Precondition:
    step_index: int
    text: str
    condition: Condition

    @property
    def vacuous(self) -> bool:
        return self.condition.vacuous


class EpisodeTrace:
    """Append-only ordered event log; listeners see events as they happen."""

    def __init__(self):
        self.events: list[dict] = []
        self.listeners: list = []

    def append(self, event: str, **fields) -> dict:
        record = {"seq": len(self.events), "event": event, "t": time.time(), **fields}
        self.events.append(record)
        for listener in list(self.listeners):
            listener(record)
        return record

    def count(self, event: str) -> int:
        return sum(1 for e in self.events if e["event"] == event)

    def primitive_records(self) -> list[dict]:
        out: list[dict] = []
        for e in self.events:
            out.extend(e.get("primitives", ()))
        return out

    def to_list(self) -> list[dict]:
        return list(self.events)


# --- controller -------------------------------------------------------------


def controller_step(
    history: list[dict],
    latest: dict | None,
    lib: SkillLibrary,
    backend: OracleBackend,
) -> ControllerAction:
    """One controller turn; `latest` (if given) is appended to history first."""
    if latest is not None:
        history = history + [latest]
    instruction = next(
        (h["text"] for h in reversed(history) if h.get("type") == "user"), ""
    )
    blocks = ask(
        backend,
        OracleRole.CONTROLLER,
        {
            "instruction": instruction,
            "history": history,
            "library": lib.signature_listing(),
            "skills": lib.skill_names(),
        },
    )
    return ControllerAction.from_block(blocks[0])


def observe(query: str, scene: Scene, backend: OracleBackend | None = None) -> dict:
    """Answer one natural-language question from the current observation.

    Ground-truth path: answers are derived from the scene description (the
    stand-in for a live vision model, which a remote backend would swap in).
    """
    desc = describe(scene)
    visible = desc.object_names()
    q = query.lower().strip()

    m = re.search(r"inside (?:of )?(?:the )?([\w ]+?)(?: now)?\s*[.?!]*$", q)
    if m and ("inside" in q or "in the" in q):
        holder = _best_match(m.group(1), visible)
        if holder is None:
            return {"answer": "There is no such container in view.", "observed_objs": visible}
        contents = [n for n in visible if desc.has(n, "inside", holder)]
        obj = scene.objects[holder]
        if contents:
            listing = ", ".join(f"the {c}" for c in contents)
            return {
                "answer": f"{listing.capitalize()} is in the {holder}."
                if len(contents) == 1
                else f"Inside the {holder}: {listing}.",
                "observed_objs": [holder] + contents,
            }
        if obj.articulation is not None and not desc.has(holder, "open"):
            return {
                "answer": (
                    f"The {holder} is closed, so it is impossible to determine "
                    "what is inside it."
                ),
                "observed_objs": [holder],
            }
        return {"answer": f"The {holder} is empty.", "observed_objs": [holder]}

    m = re.search(r"where is (?:the |my )?([\w ]+?)\s*[.?!]*$", q)
    if m:
        target = _best_match(m.group(1), visible)
        if target is None:
            return {
                "answer": f"The {m.group(1)} is not visible in the scene.",
                "observed_objs": visible,
            }
        sentence = _sentence_about(desc.text, target)
        return {"answer": sentence or f"The {target} is on the table.", "observed_objs": [target]}

    if "rubbish" in q or "trash" in q:
        rubbish = [n for n in visible if scene.objects[n].kind == "rubbish"]
        if not rubbish:
            return {"answer": "Nothing on the table looks like rubbish.", "observed_objs": []}
        return {
            "answer": f"{_join(rubbish).capitalize()} are rubbish."
            if len(rubbish) > 1
            else f"The {rubbish[0]} is rubbish.",
            "observed_objs": rubbish,
        }

    # Default: inventory answer with stacking facts.
    stacked = [
        f"The {r.subject} is on top of the {r.object}."
        for r in desc.relations
        if r.relation == "on" and r.object not in (None, "table")
    ]
    answer = f"The objects on the table are: {_join(visible)}." if visible else (
        "The table is empty."
    )
    if stacked:
        answer += " " + " ".join(stacked)
    return {"answer": answer, "observed_objs": visible}


def _join(names: list[str]) -> str:
    return ", ".join(f"the {n}" for n in names)


def _best_match(phrase: str, names: list[str]) -> str | None:
    phrase = phrase.strip()
    for n in names:
        if n.lower() == phrase:
            return n
    for n in names:
        if phrase in n.lower() or n.lower() in phrase:
            return n
    return None


def _sentence_about(text: str, name: str) -> str:
    for sentence in text.split(". "):
        if sentence.lower().startswith(f"the {name.lower()}"):
            return sentence.rstrip(".") + "."
    return ""


# --- preconditions -------------------------------------------------------------


def generate_preconditions(
    task: TaskSpec, plan: Plan, backend: OracleBackend
) -> list[Precondition]:
    """One compiled precondition per plan step (re-ask once, then vacuous)."""
    ctx = {"task": task.to_json(), "plan": plan.to_json()}
    sentences = _ask_sentences(backend, ctx, len(plan.steps))
    compiled = [compile_condition(s) for s in sentences]
    bad = [
        i
        for i, c in enumerate(compiled)
        if c.vacuous and not _deliberately_vacuous(sentences[i])
    ]
    if bad:
        retry = dict(ctx)
        retry["retry_note"] = (
            f"conditions {bad} did not match the relation vocabulary; restate them "
            "as '<object> is open/closed/on .../inside ...' sentences"
        )
        sentences2 = _ask_sentences(backend, retry, len(plan.steps))
        compiled2 = [compile_condition(s) for s in sentences2]
        for i in bad:
            if not compiled2[i].vacuous:
                sentences[i], compiled[i] = sentences2[i], compiled2[i]
            else:
                log.warning(
                    "precondition %d (%r) uncompilable; treating as vacuously true",
                    i,
                    sentences[i],
                )
    return [
        Precondition(step_index=i, text=sentences[i], condition=compiled[i])
        for i in range(len(plan.steps))
    ]


def _ask_sentences(backend: OracleBackend, ctx: dict, n: int) -> list[str]:
    blocks = ask(backend, OracleRole.PRECONDITION_GEN, ctx)
    sentences = list(blocks[0].get("Preconditions", []))
    if len(sentences) < n:
        sentences += ["the workspace is reachable"] * (n - len(sentences))
    return sentences[:n]


def _deliberately_vacuous(sentence: str) -> bool:
    return compile_condition(sentence).vacuous and any(
        w in sentence.lower() for w in ("reachable", "none", "nothing")
    )


def verify_precondition(pre: Precondition, scene: Scene, backend: OracleBackend | None = None) -> bool:
    return condition_holds(pre.condition, describe(scene))


def backtrack_target(
    preconds: list[Precondition],
    failed_index: int,
    scene: Scene,
    backend: OracleBackend | None = None,
) -> int:
    """Highest step index <= failed_index whose precondition currently holds."""
    for j in range(min(failed_index, len(preconds) - 1), -1, -1):
        if verify_precondition(preconds[j], scene, backend):
            return j
    return 0


# --- backtracking execution --------------------------------------------------------


def run_with_backtracking(
    task: TaskSpec,
    plan: Plan,
    preconds: list[Precondition],
    scene: Scene,
    budget: int,
    backend: OracleBackend,
    lib: SkillLibrary,
    episode_rng: random.Random | None = None,
    trace: EpisodeTrace | None = None,
    open_loop: bool = False,
    verification_mode: str = "both",
) -> tuple[bool, EpisodeTrace]:
    """Execute the plan under precondition checks with a backtrack budget.

    open_loop=True executes each step once in order with no checks and no
    recovery; success is still judged by the final verification.
    """
    own_trace = trace is None
    trace = trace or EpisodeTrace()

    def finish(success: bool, message: str) -> tuple[bool, EpisodeTrace]:
        if own_trace:
            trace.append("finished", success=success, message=message)
        return success, trace

    failed = validate_plan(plan, lib)
    if failed is not None:
        return finish(False, f"plan invalid: {failed[1]}")
    initial_description = describe(scene).text
    q = scene.noise.step_fail_prob
    backtracks = 0
    env: dict = {}
    i = 0

    def jump_back(from_index: int) -> bool:
        nonlocal backtracks, env, i
        if backtracks >= budget:
            return False
        target = backtrack_target(preconds, from_index, scene, backend)
        backtracks += 1
        trace.append("backtracked", **{"from": from_index, "to": target})
        env = {}
        i = target
        return True

    while True:
        while i < len(plan.steps):
            if not open_loop and i < len(preconds):
                verdict = verify_precondition(preconds[i], scene, backend)
                trace.append(
                    "precondition_checked",
                    step_index=i,
                    text=preconds[i].text,
                    verdict=verdict,
                )
                if not verdict:
                    if not jump_back(i):
                        return finish(False, "backtrack budget exhausted")
                    continue
            nullified = bool(q > 0 and episode_rng is not None and episode_rng.random() < q)
            interp = Interpreter(lib, scene)
            error = None
            if not nullified:
                try:
                    interp.run(plan.steps[i].program(), env=env)
                except GroundError as e:
                    error = e
            trace.append(
                "step_executed",
                step_index=i,
                name=plan.steps[i].name,
                nullified=nullified,
                error=str(error) if error else None,
                primitives=interp.trace.to_list(),
            )
            if error is not None:
                if open_loop:
                    return finish(False, f"step {i} failed: {error}")
                if not jump_back(i):
                    return finish(False, "backtrack budget exhausted")
                continue
            i += 1

        ok, _ = verify_success(
            task, scene, verification_mode, backend, lib, initial_description
        )
        if ok:
            return finish(True, f"{task.name} complete")
        if open_loop:
            return finish(False, "final verification failed")
        if not jump_back(len(plan.steps) - 1):
            return finish(False, "backtrack budget exhausted")


# --- deployment loop ------------------------------------------------------------------


def run_deployment(
    instruction: str,
    scene: Scene,
    lib: SkillLibrary,
    backend: OracleBackend,
    budget: int = 5,
    turn_cap: int = DEFAULT_TURN_CAP,
    user_messages: "queue.Queue[str] | None" = None,
    trace: EpisodeTrace | None = None,
    episode_rng: random.Random | None = None,
    turn_delay: float = 0.0,
) -> EpisodeTrace:
    """Controller loop serving one free-form instruction until finish/turn cap.

    turn_delay throttles the loop (seconds per controller turn) so a human
    watching a live console can follow along; 0 runs at full speed.
    """
    trace = trace or EpisodeTrace()
    history: list[dict] = [{"type": "user", "text": instruction}]
    trace.append("user_message", text=instruction)

    for _turn in range(turn_cap):
        if turn_delay > 0:
            time.sleep(turn_delay)
        _drain_user_messages(user_messages, history, trace)
        try:
            action = controller_step(history, None, lib, backend)
        except FormatError as e:
            trace.append("finished", success=False, message=f"controller output malformed: {e}")
            return trace
        history.append(
            {
                "type": "controller",
                "thought": action.thought,
                "action": action.variant,
                "input": action.payload,
            }
        )
        trace.append(
            "controller_turn",
            thought=action.thought,
            action=action.variant,
            input=action.payload,
        )
        if action.variant == "finish":
            trace.append("finished", success=True, message=action.payload.get("message", ""))
            return trace
        if action.variant == "observe":
            result = observe(action.payload.get("query", ""), scene, backend)
            history.append({"type": "observation", "query": action.payload.get("query", ""), **result})
            trace.append("observation", query=action.payload.get("query", ""), **result)
            continue
        # execute_task
        task = TaskSpec.from_json(action.payload)
        try:
            plan = plan_task(task, lib, scene, backend)
            preconds = generate_preconditions(task, plan, backend)
            ok, _ = run_with_backtracking(
                task, plan, preconds, scene, budget, backend, lib,
                episode_rng=episode_rng, trace=trace,
            )
        except (FormatError, GroundError) as e:
            ok = False
            trace.append("task_result", task=task.to_json(), success=False, detail=str(e))
            history.append({"type": "task_result", "task": task.to_json(), "success": False})
            continue
        history.append({"type": "task_result", "task": task.to_json(), "success": ok})
        trace.append("task_result", task=task.to_json(), success=ok)

    trace.append("finished", success=False, message="turn cap exceeded")
    return trace


def _drain_user_messages(q_in, history: list[dict], trace: EpisodeTrace) -> None:
    if q_in is None:
        return
    while True:
        try:
            text = q_in.get_nowait()
        except queue.Empty:
            return
        history.append({"type": "user", "text": text})
        trace.append("user_message", text=text)
