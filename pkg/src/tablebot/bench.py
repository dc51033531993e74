"""Experiment harness: seeded ablations, open-loop vs backtracking benches,
metrics tables, and record/replay of whole episodes.

All success rates reported here are ground-truth verdicts evaluated against
the simulator state, independent of what the agent variant believed; the
injected noise channels (grasp slip, per-step exogenous faults) are the
explicit stand-ins for the unobservable failure processes behind the
original experiments.
"""

from __future__ import annotations

import csv
import io
import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .deploy import generate_preconditions, run_with_backtracking
from .dsl.library import SkillLibrary, library_to_json, load_library
from .errors import SchemaError
from .explore import ExplorationConfig, ExplorationReport, TaskSpec, plan_task, run_exploration
from .oracle.base import Transcript
from .oracle.replay import RecordingBackend, ReplayBackend
from .oracle.rulebased import RuleBasedBackend, ground_truth_success
from .sim.model import NoiseConfig, OPEN_FRACTION, Scene
from .sim.scenarios import load_scenario

ABLATION_VARIANTS = ("full", "no_skills", "no_verification")
BACKTRACK_VARIANTS = ("open_loop", "backtracking")

# Per-step exogenous failure used by the ablation suite when the run config
# does not set one: it is the channel that penalizes long primitive plans.
ABLATION_DEFAULT_STEP_FAIL = 0.08


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "blocks_world"
    variants: tuple[str, ...] = ABLATION_VARIANTS
    seeds: tuple[int, ...] = tuple(range(10))
    noise: NoiseConfig = NoiseConfig()
    budget: int = 5
    num_retries: int = 3
    parallel: int = 0  # worker threads; 0 = serial

    def __post_init__(self):
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be nonempty and distinct")


@dataclass
class MetricsTable:
    rows: list[dict] = field(default_factory=list)

    def add(self, task: str, variant: str, **metrics) -> None:
        self.rows.append({"task": task, "variant": variant, **metrics})

    def rate(self, task: str, variant: str) -> float:
        for row in self.rows:
            if row["task"] == task and row["variant"] == variant:
                return row["success_rate"]
        raise KeyError((task, variant))

    def to_csv(self) -> str:
        if not self.rows:
            return ""
        fields = list(self.rows[0])
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        writer.writerows(self.rows)
        return buf.getvalue()

    def to_text(self) -> str:
        if not self.rows:
            return "(empty table)"
        fields = list(self.rows[0])
        formatted = [
            [_fmt(row.get(f, "")) for f in fields] for row in self.rows
        ]
        widths = [
            max(len(f), *(len(r[i]) for r in formatted)) for i, f in enumerate(fields)
        ]
        lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for r in formatted:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
        return "\n".join(lines)

    def to_json(self) -> list[dict]:
        return list(self.rows)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


# --- ablation (Table-1-shaped) -------------------------------------------------


def _explorer_config(variant: str, num_retries: int) -> ExplorationConfig:
    if variant == "full":
        return ExplorationConfig(num_retries=num_retries)
    if variant == "no_skills":
        return ExplorationConfig(num_retries=num_retries, skill_learning=False)
    if variant == "no_verification":
        return ExplorationConfig(num_retries=num_retries, verify=False)
    raise ValueError(f"unknown ablation variant {variant!r}")


def _ablation_noise(noise: NoiseConfig) -> NoiseConfig:
    if noise.step_fail_prob > 0:
        return noise
    return NoiseConfig(noise.grasp_slip_prob, ABLATION_DEFAULT_STEP_FAIL)


def _one_ablation_episode(args) -> tuple[str, int, ExplorationReport]:
    variant, seed, config = args
    report = run_exploration(
        _explorer_config(variant, config.num_retries),
        config.scenario,
        RuleBasedBackend(),
        seed=seed,
        noise=_ablation_noise(config.noise),
        truth_check=ground_truth_success,
    )
    return variant, seed, report


def run_ablation(config: RunConfig) -> MetricsTable:
    """Success rates per task and variant over the config's seeds."""
    variants = config.variants or ABLATION_VARIANTS
    jobs = [(v, s, config) for v in variants for s in config.seeds]
    started = time.monotonic()
    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            results = list(pool.map(_one_ablation_episode, jobs))
    else:
        results = [_one_ablation_episode(j) for j in jobs]

    by_variant: dict[str, list[ExplorationReport]] = {}
    for variant, _seed, report in results:
        by_variant.setdefault(variant, []).append(report)

    table = MetricsTable()
    task_names = [o.task.name for o in results[0][2].outcomes]
    for name in task_names:
        for variant in variants:
            reports = by_variant[variant]
            verdicts, attempts = [], []
            for r in reports:
                for o in r.outcomes:
                    if o.task.name == name:
                        verdicts.append(o.true_success if o.true_success is not None else o.success)
                        attempts.append(o.attempts)
            table.add(
                name,
                variant,
                success_rate=sum(verdicts) / len(verdicts),
                attempts_mean=sum(attempts) / len(attempts),
                skill_count=_mean(len(r.skills_acquired()) for r in reports),
                runtime_s=sum(r.wall_s for r in reports),
            )
    for variant in variants:
        reports = by_variant[variant]
        verdicts = [
            (o.true_success if o.true_success is not None else o.success)
            for r in reports
            for o in r.outcomes
        ]
        attempts = [o.attempts for r in reports for o in r.outcomes]
        table.add(
            "average",
            variant,
            success_rate=sum(verdicts) / len(verdicts),
            attempts_mean=sum(attempts) / len(attempts),
            skill_count=_mean(len(r.skills_acquired()) for r in reports),
            runtime_s=time.monotonic() - started,
        )
    return table


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


# --- backtracking bench (Table-2-shaped) ------------------------------------------


@dataclass(frozen=True)
class SubTask:
    name: str
    check: object  # callable(Scene) -> bool


def _cup_subtasks(scene: Scene) -> list[SubTask]:
    item = next(n for n, o in scene.objects.items() if o.movable)
    articulated = [n for n, o in scene.objects.items() if o.articulation is not None]
    drawer = scene.objects[item].support or next(
        (n for n in articulated if "bottom" in n), articulated[0]
    )

    def opened(s: Scene) -> bool:
        return not s.occluded(s.objects[item])

    def placed(s: Scene) -> bool:
        o = s.objects[item]
        return o.support is None and abs(o.position[2] - o.dimensions[2] / 2) < 1e-6

    def closed(s: Scene) -> bool:
        return s.objects[drawer].articulation.fraction <= 1.0 - OPEN_FRACTION

    return [
        SubTask("open drawer", opened),
        SubTask("pick&place cup", placed),
        SubTask("close drawer", closed),
    ]


def _desktop_subtasks(scene: Scene) -> list[SubTask]:
    from .sim.describe import describe

    def rubbish_cleared(s: Scene) -> bool:
        desc = describe(s)
        bin_name = next(n for n in s.objects if "bin" in n)
        return all(
            desc.has(n, "inside", bin_name)
            for n, o in s.objects.items()
            if o.kind == "rubbish"
        )

    def items_placed(s: Scene) -> bool:
        desc = describe(s)
        shelf = next(n for n in s.objects if "shelf" in n)
        return all(
            desc.has(n, "on", shelf)
            for n, o in s.objects.items()
            if o.kind == "block"
        )

    return [SubTask("clear rubbish", rubbish_cleared), SubTask("place items", items_placed)]


def bench_task_for(scenario: str) -> TaskSpec:
    if scenario == "cup_drawer":
        return TaskSpec(
            "Cup Acquisition",
            ("cup", "bottom drawer"),
            "Open the bottom drawer, place the cup on the table, and close the "
            "bottom drawer again.",
        )
    if scenario == "desktop_organization":
        return TaskSpec(
            "Desktop Organization",
            ("paper ball", "plastic bottle", "remote control", "toy box", "rubbish bin", "shelf"),
            "Clean the table: put the paper ball and the plastic bottle into the "
            "rubbish bin and place the remote control and the toy box on the shelf.",
        )
    raise SchemaError(f"no backtracking bench defined for scenario {scenario!r}")


def bench_library(backend=None) -> SkillLibrary:
    """Deterministic skill library from noise-free exploration of two scenes."""
    backend = backend or RuleBasedBackend()
    cfg = ExplorationConfig()
    lib = run_exploration(cfg, "blocks_world", backend, seed=0).final_library
    lib = run_exploration(cfg, "cup_drawer", backend, seed=0, library=lib).final_library
    return lib


def _one_bench_episode(args):
    variant, seed, config, task, plan, preconds, lib, subtask_factory = args
    backend = RuleBasedBackend()
    scene = load_scenario(config.scenario, seed=seed, noise=config.noise)
    rng = random.Random(f"episode:{seed}")
    ok, trace = run_with_backtracking(
        task,
        plan,
        preconds,
        scene,
        config.budget,
        backend,
        lib,
        episode_rng=rng,
        open_loop=(variant == "open_loop"),
    )
    subs = {st.name: bool(st.check(scene)) for st in subtask_factory(scene)}
    return variant, seed, ok, subs, trace


def run_backtracking_bench(config: RunConfig) -> MetricsTable:
    """Whole-task and sub-task success, open-loop vs backtracking control."""
    variants = tuple(v for v in config.variants if v in BACKTRACK_VARIANTS) or BACKTRACK_VARIANTS
    backend = RuleBasedBackend()
    lib = bench_library(backend)
    task = bench_task_for(config.scenario)
    probe = load_scenario(config.scenario, seed=0)
    plan = plan_task(task, lib, probe, backend)
    preconds = generate_preconditions(task, plan, backend)
    subtask_factory = (
        _cup_subtasks if config.scenario == "cup_drawer" else _desktop_subtasks
    )

    jobs = [
        (v, s, config, task, plan, preconds, lib, subtask_factory)
        for v in variants
        for s in config.seeds
    ]
    started = time.monotonic()
    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            results = list(pool.map(_one_bench_episode, jobs))
    else:
        results = [_one_bench_episode(j) for j in jobs]

    table = MetricsTable()
    sub_names = [st.name for st in subtask_factory(probe)]
    for variant in variants:
        rows = [r for r in results if r[0] == variant]
        table.add(
            task.name,
            variant,
            success_rate=_mean(ok for _, _, ok, _, _ in rows),
            attempts_mean=1.0,
            skill_count=float(len(lib.skills)),
            runtime_s=time.monotonic() - started,
        )
        for sub in sub_names:
            table.add(
                sub,
                variant,
                success_rate=_mean(subs[sub] for _, _, _, subs, _ in rows),
                attempts_mean=1.0,
                skill_count=float(len(lib.skills)),
                runtime_s=0.0,
            )
    return table


# --- record / replay -----------------------------------------------------------------


def record_exploration(
    scenario: str,
    seed: int,
    out_dir: str | Path,
    config: ExplorationConfig | None = None,
    noise: NoiseConfig | None = None,
    inner_backend=None,
) -> dict:
    """Run one exploration episode, recording the oracle transcript and a
    manifest sufficient to replay it exactly."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = config or ExplorationConfig()
    backend = RecordingBackend(inner_backend or RuleBasedBackend())
    report = run_exploration(config, scenario, backend, seed=seed, noise=noise)
    backend.save(out / "transcript.jsonl")
    manifest = {
        "scenario": scenario,
        "seed": seed,
        "config": {
            "num_retries": config.num_retries,
            "max_tasks": config.max_tasks,
            "verification_mode": config.verification_mode,
            "verify": config.verify,
            "skill_learning": config.skill_learning,
            "validate_skill_examples": config.validate_skill_examples,
        },
        "noise": (noise or NoiseConfig()).to_dict(),
        "transcript": "transcript.jsonl",
        "report": "report.json",
        "library": "library.json",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    (out / "report.json").write_text(report.canonical_json())
    (out / "library.json").write_text(library_to_json(report.final_library))
    return manifest


def replay_exploration(manifest_path: str | Path, seed: int | None = None) -> ExplorationReport:
    """Re-run an episode purely from its manifest + transcript."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    if seed is not None and seed != manifest["seed"]:
        raise SchemaError(
            f"config mismatch: replay requested seed {seed} but the recording "
            f"used seed {manifest['seed']}"
        )
    base = manifest_path.parent
    backend = ReplayBackend(Transcript.load(base / manifest["transcript"]))
    cfg = ExplorationConfig(**manifest["config"])
    noise = NoiseConfig(**manifest["noise"])
    return run_exploration(cfg, manifest["scenario"], backend, seed=manifest["seed"], noise=noise)


def replay_matches(manifest_path: str | Path) -> bool:
    """True when replaying reproduces the recorded report byte for byte."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    recorded = (manifest_path.parent / manifest["report"]).read_text()
    return replay_exploration(manifest_path).canonical_json() == recorded
