"""Acceptance suite: one test per exit criterion, each printing a pass/fail
line. Tolerances are pinned here and nowhere else. Everything runs offline
against the deterministic rule backend with fixed seed lists.
"""

import json
import random
import time

import pytest

from tablebot.bench import (
    RunConfig,
    bench_library,
    record_exploration,
    replay_exploration,
    run_ablation,
    run_backtracking_bench,
)
from tablebot.conditions import compile_condition
from tablebot.deploy import Precondition, backtrack_target, generate_preconditions
from tablebot.dsl import callees_of, canonical_source, parse
from tablebot.errors import classify_error
from tablebot.explore import (
    ExplorationConfig,
    Plan,
    PlanStep,
    TaskSpec,
    compile_predicate,
    evaluate_predicate,
    execute_plan,
    plan_task,
    repair_interpretation,
    run_exploration,
    validate_plan,
)
from tablebot.oracle import FaultInjection, OracleRequest, OracleRole, RuleBasedBackend
from tablebot.oracle.rulebased import ground_truth_success
from tablebot.sim import NoiseConfig, load_scenario

pytestmark = pytest.mark.acceptance


def report(number: int, label: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] criterion {number}: {label}{suffix}")
    assert ok, f"criterion {number} failed: {label}{suffix}"


def test_criterion_1_deterministic_exploration():
    """Zero noise, rule backend: 6/6 task families on 10/10 seeds, >= 4
    skills, pyramid plan uses an acquired skill, under 10 seconds."""
    started = time.monotonic()
    backend = RuleBasedBackend()
    config = ExplorationConfig(num_retries=3)
    all_ok = True
    details = []
    for seed in range(10):
        rep = run_exploration(config, "blocks_world", backend, seed=seed)
        successes = [o for o in rep.outcomes if o.success]
        skills = rep.skills_acquired()
        pyramid = next(o for o in rep.outcomes if "Complex Pyramid" in o.task.name)
        plan_callees = set()
        for step in pyramid.plan or []:
            plan_callees |= set(callees_of(parse(step["Code"])))
        uses_skill = bool(plan_callees & set(skills))
        seed_ok = (
            len(rep.outcomes) == 6
            and len(successes) == 6
            and len(skills) >= 4
            and uses_skill
        )
        all_ok = all_ok and seed_ok
        if not seed_ok:
            details.append(f"seed {seed}: {len(successes)}/6, skills={skills}")
    elapsed = time.monotonic() - started
    all_ok = all_ok and elapsed < 10.0
    report(
        1,
        "deterministic exploration (6/6 tasks, 10/10 seeds, >=4 skills, skillful pyramid)",
        all_ok,
        f"{elapsed:.2f}s" + ("; " + "; ".join(details) if details else ""),
    )


def test_criterion_2_ablation_direction():
    """Grasp slip 0.25, 50 seeds: full beats each ablation by >= 0.15 mean
    ground-truth success, under 2 minutes."""
    started = time.monotonic()
    config = RunConfig(
        scenario="blocks_world",
        seeds=tuple(range(50)),
        noise=NoiseConfig(grasp_slip_prob=0.25),
    )
    table = run_ablation(config)
    full = table.rate("average", "full")
    no_skills = table.rate("average", "no_skills")
    no_verification = table.rate("average", "no_verification")
    elapsed = time.monotonic() - started
    ok = (
        full >= no_skills + 0.15
        and full >= no_verification + 0.15
        and elapsed < 120.0
    )
    report(
        2,
        "ablation direction (full >= each ablation + 0.15)",
        ok,
        f"full={full:.3f} no_skills={no_skills:.3f} no_verification={no_verification:.3f} "
        f"in {elapsed:.1f}s",
    )


def test_criterion_3_backtracking_dominance():
    """3-step correlated cup task, q=0.2, budget 5, 500 seeds: open-loop within
    0.512 +/- 0.05 of the analytic (1-q)^3; backtracking beats it by >= 0.15."""
    started = time.monotonic()
    config = RunConfig(
        scenario="cup_drawer",
        variants=("open_loop", "backtracking"),
        seeds=tuple(range(500)),
        noise=NoiseConfig(step_fail_prob=0.2),
        budget=5,
    )
    table = run_backtracking_bench(config)
    open_loop = table.rate("Cup Acquisition", "open_loop")
    backtracking = table.rate("Cup Acquisition", "backtracking")
    analytic = (1 - 0.2) ** 3
    elapsed = time.monotonic() - started
    ok = (
        abs(open_loop - analytic) <= 0.05
        and backtracking - open_loop >= 0.15
        and elapsed < 120.0
    )
    report(
        3,
        "backtracking dominance (open-loop ~ 0.512, backtracking - open-loop >= 0.15)",
        ok,
        f"open_loop={open_loop:.3f} backtracking={backtracking:.3f} in {elapsed:.1f}s",
    )


def test_criterion_4_backtrack_target_brute_force():
    """10,000 random verdict vectors: backtrack_target equals the brute-force
    maximum satisfied index. Exact."""
    scene = load_scenario("cup_drawer", seed=0)
    rng = random.Random("criterion-4")
    mismatches = 0
    for _ in range(10_000):
        n = rng.randint(1, 12)
        verdicts = [rng.random() < 0.5 for _ in range(n)]
        failed_index = rng.randrange(n)
        preconds = [
            Precondition(
                i,
                "the workspace is reachable" if v else "the cup is on the table",
                compile_condition(
                    "the workspace is reachable" if v else "the cup is on the table"
                ),
            )
            for i, v in enumerate(verdicts)
        ]
        brute = 0
        for j in range(failed_index + 1):
            if verdicts[j]:
                brute = j
        if backtrack_target(preconds, failed_index, scene) != brute:
            mismatches += 1
    report(4, "backtrack_target equals brute force on 10,000 vectors", mismatches == 0,
           f"{mismatches} mismatches")


def test_criterion_5_roundtrip_fixpoint(blocks_library):
    """AST fixpoint on the shipped skill fixture and 1,000 random ASTs. Exact."""
    from test_dsl_parser import random_program

    bad = 0
    for skill in blocks_library.skills.values():
        s1 = canonical_source(skill.body)
        p1 = parse(s1)
        if p1 != skill.body or canonical_source(p1) != s1:
            bad += 1
    rng = random.Random("criterion-5")
    for i in range(1000):
        program = random_program(rng, max_statements=10)
        s1 = canonical_source(program)
        p1 = parse(s1)
        if p1 != program or parse(canonical_source(p1)) != p1:
            bad += 1
    report(5, "skill-language round-trip fixpoint (fixture + 1,000 random ASTs)", bad == 0,
           f"{bad} violations")


BLOCK_TASKS = [
    TaskSpec("Pick and Place the Purple Block", ("purple block",),
             "Place it at the right boundary of the table."),
    TaskSpec("Create a Two-Block Stack", ("purple block", "blue block"),
             "Stack the purple block on top of the blue block."),
    TaskSpec("Create a Three-Block Stack", ("purple block", "blue block", "green block"),
             "Build the tower of three."),
    TaskSpec("Color Match and Stack",
             ("purple block", "blue block", "green block", "yellow block", "orange block", "red block"),
             "Create three stacks of two blocks each."),
    TaskSpec("Block Pyramid Stacking", ("yellow block", "orange block", "red block"),
             "Build a pyramid in the center of the table."),
]


def _interpretation_corpus():
    """20 (backend, task) cases with injected parse/undefined-symbol faults."""
    cases = []
    for i in range(20):
        kind = "parse" if i % 2 == 0 else "undefined_symbol"
        task = BLOCK_TASKS[i % len(BLOCK_TASKS)]
        step = (i // 2) % 2 + 1
        cases.append((RuleBasedBackend(FaultInjection(kind=kind, step=step)), task))
    return cases


def test_criterion_6_error_taxonomy():
    """Injected parse/undefined-symbol faults classify Interpretation and repair
    in <= 1 regeneration; 10 runtime faults classify Grounding. Exact."""
    bad = []
    lib = bench_library()
    for backend, task in _interpretation_corpus():
        scene = load_scenario("blocks_world", seed=0)
        plan = plan_task(task, lib, scene, backend)
        failed = validate_plan(plan, lib)
        if failed is None:
            bad.append(f"{task.name}: fault not injected")
            continue
        index, err = failed
        if classify_error(err).category != "Interpretation":
            bad.append(f"{task.name}: misclassified {err}")
            continue
        repaired = repair_interpretation(plan, index, str(err), task, lib, scene, backend)
        if validate_plan(repaired, lib) is not None:
            bad.append(f"{task.name}: not repaired in one regeneration")

    runtime_programs = [
        "movep((9, 9, 9))",
        "movep((0.2, 0, 0.1))",
        "movep((0.5, 0.6, 0.1))",
        'p = get_obj_position("ghost")',
        'p = get_obj_dimensions("phantom")',
        'pick_and_place_object("teapot", (0.5, 0, 0.02))',
        "close_gripper()\nclose_gripper()",
        "go_home()\nclose_gripper()\nclose_gripper()",
        "x = 1 / 0",
        'p = get_obj_position("cup")',  # occluded in cup_drawer
    ]
    for i, text in enumerate(runtime_programs):
        scenario = "cup_drawer" if "cup" in text else "blocks_world"
        scene = load_scenario(scenario, seed=0)
        plan = Plan((PlanStep("s", "", text),))
        failed = execute_plan(plan, lib, scene)
        if failed is None:
            bad.append(f"runtime case {i} did not fail")
            continue
        if classify_error(failed[1]).category != "Grounding":
            bad.append(f"runtime case {i} misclassified")
    report(6, "error taxonomy (20 interpretation cases, 10 grounding cases)", not bad,
           "; ".join(bad))


def test_criterion_7_repair_locality():
    """repair_interpretation changes exactly one step's code on every corpus
    case. Exact."""
    bad = []
    lib = bench_library()
    for backend, task in _interpretation_corpus():
        scene = load_scenario("blocks_world", seed=0)
        plan = plan_task(task, lib, scene, backend)
        failed = validate_plan(plan, lib)
        if failed is None:
            bad.append(f"{task.name}: fault not injected")
            continue
        index, err = failed
        repaired = repair_interpretation(plan, index, str(err), task, lib, scene, backend)
        if len(repaired.steps) != len(plan.steps):
            bad.append(f"{task.name}: step count changed")
            continue
        for i, (a, b) in enumerate(zip(plan.steps, repaired.steps)):
            if i == index:
                if a.code == b.code or a.name != b.name or a.explanation != b.explanation:
                    bad.append(f"{task.name}: step {i} not a pure code replacement")
            elif (a.name, a.explanation, a.code) != (b.name, b.explanation, b.code):
                bad.append(f"{task.name}: step {i} changed unexpectedly")
    report(7, "repair locality (exactly one code field changes)", not bad, "; ".join(bad))


def _terminal_fixtures():
    """30 terminal scenes with a task each; roughly half satisfied."""
    fixtures = []
    stack_task = BLOCK_TASKS[1]
    edge_task = BLOCK_TASKS[0]
    bin_task = TaskSpec("Clear the Rubbish", ("paper ball", "plastic bottle", "rubbish bin"),
                        "Put the rubbish into the bin.")

    def stacked_scene(seed, do_stack):
        scene = load_scenario("blocks_world", seed=seed)
        if do_stack:
            t = scene.objects["purple block"]
            scene.movep((t.position[0], t.position[1], t.top))
            scene.close_gripper()
            scene.movep((0.35, -0.15, 0.2))
            scene.open_gripper()
        return scene

    def edge_scene(seed, do_move):
        scene = load_scenario("blocks_world", seed=seed)
        if do_move:
            t = scene.objects["purple block"]
            scene.movep((t.position[0], t.position[1], t.top))
            scene.close_gripper()
            scene.movep((0.45, 0.46, 0.1))
            scene.open_gripper()
        return scene

    def bin_scene(seed, n_in):
        scene = load_scenario("desktop_organization", seed=seed)
        for name in ["paper ball", "plastic bottle"][:n_in]:
            o = scene.objects[name]
            scene.movep((o.position[0], o.position[1], o.top))
            scene.close_gripper()
            bin_pos = scene.objects["rubbish bin"].position
            scene.movep((bin_pos[0], bin_pos[1], 0.2))
            scene.open_gripper()
        return scene

    for k in range(12):
        fixtures.append((stacked_scene(k, k % 2 == 0), stack_task))
    for k in range(10):
        fixtures.append((edge_scene(100 + k, k % 2 == 0), edge_task))
    for k in range(8):
        fixtures.append((bin_scene(200 + k, k % 3), bin_task))
    return fixtures


def test_criterion_8_verifier_agreement():
    """Code-predicate verdicts agree with ground-truth description-based
    verdicts on 30 terminal fixtures, 30/30."""
    backend = RuleBasedBackend()
    lib = bench_library()
    fixtures = _terminal_fixtures()
    assert len(fixtures) == 30
    agreements = 0
    truths = []
    for scene, task in fixtures:
        blocks = backend.call(
            OracleRequest(OracleRole.CODE_VERIFIER_GEN, {"task": task.to_json()})
        ).blocks
        check = compile_predicate(blocks[0], lib)
        code_verdict = evaluate_predicate(check, lib, scene)
        truth = ground_truth_success(task, scene)
        truths.append(truth)
        agreements += code_verdict == truth
    both_kinds = any(truths) and not all(truths)
    report(8, "verifier agreement on 30 terminal fixtures", agreements == 30 and both_kinds,
           f"{agreements}/30 agree; satisfied={sum(truths)}")


def test_criterion_9_replay_determinism(tmp_path):
    """Record an exploration episode; replaying transcript + seed reproduces a
    byte-identical report."""
    record_exploration("blocks_world", seed=7, out_dir=tmp_path)
    recorded = (tmp_path / "report.json").read_text()
    replayed = replay_exploration(tmp_path / "manifest.json").canonical_json()
    report(9, "replay determinism (byte-identical exploration report)", replayed == recorded)
