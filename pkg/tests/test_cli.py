import json

import pytest

from tablebot.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestExplore:
    def test_rule_backend_blocks_world(self, tmp_path, capsys):
        code = run_cli("explore", "--scenario", "blocks_world", "--backend", "rule", "--out", str(tmp_path / "run"))
        assert code == 0
        out = capsys.readouterr().out
        assert "6/6 tasks succeeded" in out
        report = json.loads((tmp_path / "run" / "report.json").read_text())
        assert len(report["outcomes"]) == 6

    def test_unknown_scenario_exits_1(self, tmp_path):
        assert run_cli("explore", "--scenario", "narnia", "--out", str(tmp_path / "x")) == 1

    def test_no_skills_writes_empty_library(self, tmp_path):
        code = run_cli(
            "explore", "--scenario", "blocks_world", "--no-skills", "--out", str(tmp_path / "run")
        )
        assert code == 0
        lib = json.loads((tmp_path / "run" / "library.json").read_text())
        assert lib == {}


class TestDeploy:
    def test_instruction_episode(self, tmp_path):
        assert run_cli("explore", "--scenario", "cup_drawer", "--out", str(tmp_path / "lib")) == 0
        code = run_cli(
            "deploy",
            "--scenario", "cup_drawer",
            "--library", str(tmp_path / "lib" / "library.json"),
            "--instruction", "I can't find my cup.",
            "--out", str(tmp_path / "trace.jsonl"),
        )
        assert code == 0
        lines = (tmp_path / "trace.jsonl").read_text().splitlines()
        events = [json.loads(line) for line in lines]
        assert events[-1]["event"] == "finished"

    def test_missing_library_exits_1(self, tmp_path):
        code = run_cli(
            "deploy", "--scenario", "cup_drawer",
            "--library", str(tmp_path / "nope.json"),
            "--instruction", "hi",
        )
        assert code == 1

    def test_instruction_required(self):
        assert run_cli("deploy", "--scenario", "cup_drawer") == 1


class TestBench:
    def test_ablation_emits_seven_task_rows(self, tmp_path, capsys):
        code = run_cli(
            "bench", "--suite", "ablation", "--seeds", "2", "--noise", "0.25",
            "--out", str(tmp_path),
        )
        assert code == 0
        rows = json.loads((tmp_path / "ablation.json").read_text())
        assert len({r["task"] for r in rows}) == 7
        assert (tmp_path / "ablation.csv").exists()

    def test_single_seed_deterministic(self, tmp_path):
        for d in ("a", "b"):
            assert run_cli(
                "bench", "--suite", "ablation", "--seeds", "1", "--out", str(tmp_path / d)
            ) == 0
        a = json.loads((tmp_path / "a" / "ablation.json").read_text())
        b = json.loads((tmp_path / "b" / "ablation.json").read_text())
        strip = lambda rows: [{k: v for k, v in r.items() if k != "runtime_s"} for r in rows]
        assert strip(a) == strip(b)

    def test_invalid_noise_exits_1(self):
        assert run_cli("bench", "--suite", "ablation", "--noise", "1.5") == 1

    def test_backtracking_suite(self, tmp_path):
        code = run_cli(
            "bench", "--suite", "backtracking", "--seeds", "5", "--out", str(tmp_path)
        )
        assert code == 0
        rows = json.loads((tmp_path / "backtracking.json").read_text())
        assert {r["variant"] for r in rows} == {"open_loop", "backtracking"}


class TestSkills:
    @pytest.fixture
    def library_path(self, tmp_path, blocks_library):
        from tablebot.dsl import save_library

        path = tmp_path / "lib.json"
        save_library(blocks_library, path)
        return path

    def test_list(self, library_path, capsys):
        assert run_cli("skills", "list", "--library", str(library_path)) == 0
        out = capsys.readouterr().out
        assert "stack_blocks(block1, block2)" in out

    def test_show(self, library_path, capsys):
        assert run_cli("skills", "show", "--library", str(library_path), "--name", "build_pyramid") == 0
        doc = json.loads(capsys.readouterr().out)
        assert "build_pyramid(base_left, base_right, top_block)" in doc

    def test_prune_refuses_when_depended_upon(self, library_path, capsys):
        code = run_cli("skills", "prune", "--library", str(library_path), "--name", "pick_and_place_object")
        assert code == 1
        err = capsys.readouterr().err
        assert "still used by" in err

    def test_prune_leaf_skill(self, library_path, tmp_path):
        out = tmp_path / "pruned.json"
        code = run_cli(
            "skills", "prune", "--library", str(library_path),
            "--name", "build_pyramid", "--out", str(out),
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert not any("build_pyramid" in key for key in doc)


class TestReplay:
    def test_replay_round_trip(self, tmp_path):
        assert run_cli("explore", "--scenario", "blocks_world", "--out", str(tmp_path / "r")) == 0
        assert run_cli("replay", "--manifest", str(tmp_path / "r" / "manifest.json")) == 0

    def test_replay_with_wrong_seed_fails(self, tmp_path):
        assert run_cli("explore", "--scenario", "blocks_world", "--out", str(tmp_path / "r")) == 0
        code = run_cli(
            "replay", "--manifest", str(tmp_path / "r" / "manifest.json"), "--seed", "99"
        )
        assert code == 1
