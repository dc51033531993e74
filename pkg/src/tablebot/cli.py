"""Command-line entry points.

Exit codes: 0 success, 1 configuration error (bad flags, missing files,
unknown scenarios), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import queue
import random
import sys
from pathlib import Path

from .bench import (
    RunConfig,
    record_exploration,
    replay_exploration,
    replay_matches,
    run_ablation,
    run_backtracking_bench,
)
from .deploy import run_deployment
from .dsl.analysis import callees_of
from .dsl.library import SkillLibrary, library_to_json, load_library, save_library
from .errors import SchemaError, TablebotError
from .explore import ExplorationConfig, run_exploration
from .oracle.base import Transcript
from .oracle.remote import RemoteBackend, RemoteConfig
from .oracle.replay import ReplayBackend
from .oracle.rulebased import RuleBasedBackend
from .sim.model import NoiseConfig
from .sim.scenarios import FIXTURES, load_scenario

EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class ConfigError(Exception):
    pass


def _make_backend(args) -> object:
    if args.backend == "rule":
        return RuleBasedBackend()
    if args.backend == "replay":
        if not args.transcript:
            raise ConfigError("--backend replay requires --transcript")
        return ReplayBackend(Transcript.load(args.transcript))
    if args.backend == "remote":
        if not args.remote_config:
            raise ConfigError("--backend remote requires --remote-config")
        return RemoteBackend(RemoteConfig.from_file(args.remote_config))
    raise ConfigError(f"unknown backend {args.backend!r}")


def _noise(args) -> NoiseConfig:
    try:
        return NoiseConfig(
            grasp_slip_prob=getattr(args, "slip", 0.0) or 0.0,
            step_fail_prob=getattr(args, "step_fail", 0.0) or 0.0,
        )
    except Exception as e:
        raise ConfigError(str(e)) from e


def cmd_explore(args) -> int:
    out = Path(args.out)
    config = ExplorationConfig(
        num_retries=args.retries,
        max_tasks=args.max_tasks,
        skill_learning=not args.no_skills,
        verify=not args.no_verify,
    )
    noise = _noise(args)
    if args.backend == "replay":
        backend = _make_backend(args)
        report = run_exploration(config, args.scenario, backend, seed=args.seed, noise=noise)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.canonical_json())
        (out / "library.json").write_text(library_to_json(report.final_library))
    else:
        inner = _make_backend(args)
        record_exploration(
            args.scenario, args.seed, out, config=config, noise=noise, inner_backend=inner
        )
    report_doc = json.loads((out / "report.json").read_text())
    successes = sum(1 for o in report_doc["outcomes"] if o["success"])
    print(f"exploration complete: {successes}/{len(report_doc['outcomes'])} tasks succeeded")
    print(f"skills acquired: {[o['skill_added'] for o in report_doc['outcomes'] if o['skill_added']]}")
    print(f"outputs in {out}")
    return 0


def cmd_deploy(args) -> int:
    backend = _make_backend(args)
    lib = load_library(args.library) if args.library else SkillLibrary({})
    scene = load_scenario(args.scenario, seed=args.seed, noise=_noise(args))
    rng = random.Random(f"episode:{args.seed}")
    messages: queue.Queue[str] | None = None
    if args.interactive:
        if args.instruction:
            raise ConfigError("--interactive and --instruction are mutually exclusive")
        instruction = input("instruction> ").strip()
    else:
        if not args.instruction:
            raise ConfigError("provide --instruction or --interactive")
        instruction = args.instruction
    trace = run_deployment(
        instruction, scene, lib, backend,
        budget=args.budget, user_messages=messages, episode_rng=rng,
    )
    lines = [json.dumps(e) for e in trace.to_list()]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    finished = [e for e in trace.events if e["event"] == "finished"]
    success = bool(finished and finished[-1].get("success"))
    print(f"episode finished: success={success}; {len(trace.events)} events")
    if finished:
        print(f"final message: {finished[-1].get('message', '')}")
    return 0 if success else EXIT_RUNTIME


def cmd_bench(args) -> int:
    seeds = tuple(range(args.seeds))
    noise = _noise(args)
    if args.suite == "ablation":
        config = RunConfig(
            scenario=args.scenario or "blocks_world",
            seeds=seeds,
            noise=noise if (noise.grasp_slip_prob or noise.step_fail_prob) else NoiseConfig(0.25, 0.0),
            num_retries=args.retries,
            parallel=args.parallel,
        )
        table = run_ablation(config)
    else:
        config = RunConfig(
            scenario=args.scenario or "cup_drawer",
            variants=("open_loop", "backtracking"),
            seeds=seeds,
            noise=noise if noise.step_fail_prob else NoiseConfig(0.0, 0.2),
            budget=args.budget,
            parallel=args.parallel,
        )
        table = run_backtracking_bench(config)
    print(table.to_text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.suite}.csv").write_text(table.to_csv())
        (out / f"{args.suite}.txt").write_text(table.to_text() + "\n")
        (out / f"{args.suite}.json").write_text(json.dumps(table.to_json(), indent=2))
        print(f"tables written to {out}")
    return 0


def cmd_skills(args) -> int:
    lib = load_library(args.library)
    if args.action == "list":
        for name, skill in lib.skills.items():
            print(f"{skill.signature}: {skill.description}")
        if not lib.skills:
            print("(library has no skills)")
        return 0
    if args.action == "show":
        if not args.name or args.name not in lib.skills:
            raise ConfigError(f"unknown skill {args.name!r}")
        skill = lib.skills[args.name]
        print(json.dumps({skill.signature: skill.to_entry()}, indent=2))
        return 0
    # prune
    if not args.name:
        raise ConfigError("prune requires --name")
    if args.name not in lib.skills:
        raise ConfigError(f"unknown skill {args.name!r}")
    dependents = [
        other.name
        for other in lib.skills.values()
        if other.name != args.name and args.name in callees_of(other.body)
    ]
    if dependents:
        print(
            f"cannot prune {args.name!r}: still used by {', '.join(dependents)}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    remaining = {n: s for n, s in lib.skills.items() if n != args.name}
    save_library(SkillLibrary(remaining), args.out or args.library)
    print(f"pruned {args.name!r}; library written to {args.out or args.library}")
    return 0


def cmd_replay(args) -> int:
    if args.seed is not None:
        replay_exploration(args.manifest, seed=args.seed)
        return 0
    if replay_matches(args.manifest):
        print("replay matches the recorded report exactly")
        return 0
    print("replay DIVERGED from the recorded report", file=sys.stderr)
    return EXIT_RUNTIME


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    backend = _make_backend(args)
    lib = load_library(args.library) if args.library else SkillLibrary({})
    scene = load_scenario(args.scenario, seed=args.seed, noise=_noise(args))
    app = create_app(scene, lib, backend, budget=args.budget, turn_delay=args.turn_delay)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tablebot",
        description="Autonomous tabletop skill exploration and deployment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_backend=True):
        p.add_argument("--scenario", default="blocks_world", help=f"one of {', '.join(FIXTURES)} or a JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--slip", type=float, default=0.0, help="grasp slip probability")
        p.add_argument("--step-fail", type=float, default=0.0, help="per-step exogenous failure probability")
        if with_backend:
            p.add_argument("--backend", choices=("rule", "replay", "remote"), default="rule")
            p.add_argument("--transcript", help="transcript file for --backend replay")
            p.add_argument("--remote-config", help="JSON config for --backend remote")

    p = sub.add_parser("explore", help="run one self-exploration episode")
    common(p)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--max-tasks", type=int, default=10)
    p.add_argument("--no-skills", action="store_true", help="disable skill learning")
    p.add_argument("--no-verify", action="store_true", help="disable self-verification")
    p.add_argument("--out", default="exploration_out")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("deploy", help="serve one instruction against a scene")
    common(p)
    p.add_argument("--library", help="skill library JSON from exploration")
    p.add_argument("--budget", type=int, default=5)
    p.add_argument("--instruction")
    p.add_argument("--interactive", action="store_true")
    p.add_argument("--out", help="write the episode trace as JSON lines")
    p.set_defaults(func=cmd_deploy)

    p = sub.add_parser("bench", help="run the experiment suites")
    p.add_argument("--suite", choices=("ablation", "backtracking"), required=True)
    p.add_argument("--scenario")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--noise", dest="slip", type=float, default=0.0, help="grasp slip probability")
    p.add_argument("--step-fail", type=float, default=0.0)
    p.add_argument("--budget", type=int, default=5)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--parallel", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("skills", help="inspect or edit a skill library")
    p.add_argument("action", choices=("list", "show", "prune"))
    p.add_argument("--library", required=True)
    p.add_argument("--name")
    p.add_argument("--out", help="output path for prune (default: overwrite)")
    p.set_defaults(func=cmd_skills)

    p = sub.add_parser("replay", help="re-run a recorded episode and compare")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, help="override seed (must match the recording)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="start the episode service")
    common(p)
    p.add_argument("--library")
    p.add_argument("--budget", type=int, default=5)
    p.add_argument("--turn-delay", type=float, default=0.0, help="seconds per controller turn, for live viewing")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TablebotError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
