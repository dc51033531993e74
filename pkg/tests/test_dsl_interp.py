import json

import pytest

from tablebot.dsl import (
    MAX_CALL_DEPTH,
    canonical_source,
    empty_library,
    interpret,
    parse,
    replay_trace,
    validate,
)
from tablebot.errors import GroundError
from tablebot.sim import NoiseConfig, load_scenario


def hand_sequence(scene, obj_name, dest):
    """Hand-computed primitive sequence for a pick and place."""
    p = scene.objects[obj_name].position
    scene.movep((p[0], p[1], p[2] + 0.04))
    scene.movep(p)
    scene.close_gripper()
    scene.movep((p[0], p[1], 0.28))
    scene.movep((dest[0], dest[1], 0.28))
    scene.movep(dest)
    scene.open_gripper()
    scene.go_home()


class TestExecution:
    def test_pick_and_place_matches_hand_sequence(self, blocks_library):
        program = parse('pick_and_place_object("red block", (0.6, 0.3, 0.02))')
        validate(program, blocks_library, ())
        scene = load_scenario("blocks_world", seed=3)
        interpret(program, None, blocks_library, scene)

        reference = load_scenario("blocks_world", seed=3)
        hand_sequence(reference, "red block", (0.6, 0.3, 0.02))

        got = scene.objects["red block"].position
        want = reference.objects["red block"].position
        assert got == pytest.approx(want, abs=1e-9)
        assert scene.gripper.position == scene.home

    def test_empty_program_is_identity(self, blocks_scene):
        before = json.dumps(blocks_scene.to_dict(), sort_keys=True)
        trace = interpret(parse(""), None, empty_library(), blocks_scene)
        assert len(trace) == 0
        assert json.dumps(blocks_scene.to_dict(), sort_keys=True) == before

    def test_unknown_object_error_carries_statement_index(self, blocks_scene):
        program = parse("go_home()\np = get_obj_position('ghost')")
        with pytest.raises(GroundError) as e:
            interpret(program, None, empty_library(), blocks_scene)
        assert e.value.kind == "UnknownObject"
        assert e.value.step_index == 1

    def test_args_bind_parameters(self, blocks_library):
        skill = blocks_library.skills["stack_blocks"]
        scene = load_scenario("blocks_world", seed=0)
        interpret(
            skill.body,
            {"block1": "purple block", "block2": "blue block"},
            blocks_library,
            scene,
        )
        assert scene.objects["purple block"].support == "blue block"

    def test_builtins(self, blocks_scene):
        program = parse(
            "a = abs(0 - 2)\n"
            "b = dist((0, 0, 0), (3, 4, 0))\n"
            "movep((0.5, 0, a / 100 + b / 100))"
        )
        validate(program, empty_library(), ())
        interpret(program, None, empty_library(), blocks_scene)
        assert blocks_scene.gripper.position[2] == pytest.approx(0.07)

    def test_division_by_zero_is_grounding(self, blocks_scene):
        with pytest.raises(GroundError) as e:
            interpret(parse("x = 1 / 0"), None, empty_library(), blocks_scene)
        assert e.value.kind == "ExogenousFault"

    def test_runtime_type_fault_is_grounding(self, blocks_scene):
        # A string flows into movep through an unannotated parameter.
        program = parse("movep(dest)")
        with pytest.raises(GroundError) as e:
            interpret(program, {"dest": "not a vector"}, empty_library(), blocks_scene)
        assert e.value.kind == "ExogenousFault"


class TestCallDepth:
    def test_deep_chain_below_cap_runs(self, blocks_scene):
        from tablebot.dsl import SkillDef, add_skill

        lib = empty_library()
        lib = add_skill(
            lib,
            SkillDef("level_0", (), "", "", "", ("go_home",), "level_0()", parse("go_home()")),
        )
        for i in range(1, MAX_CALL_DEPTH - 1):
            lib = add_skill(
                lib,
                SkillDef(
                    f"level_{i}",
                    (),
                    "",
                    "",
                    "",
                    (f"level_{i - 1}",),
                    f"level_{i}()",
                    parse(f"level_{i - 1}()"),
                ),
            )
        interpret(parse(f"level_{MAX_CALL_DEPTH - 2}()"), None, lib, blocks_scene)

    def test_over_cap_is_exogenous_fault(self, blocks_scene):
        from tablebot.dsl import SkillDef, add_skill

        lib = empty_library()
        lib = add_skill(
            lib,
            SkillDef("level_0", (), "", "", "", ("go_home",), "level_0()", parse("go_home()")),
        )
        for i in range(1, MAX_CALL_DEPTH + 1):
            lib = add_skill(
                lib,
                SkillDef(
                    f"level_{i}",
                    (),
                    "",
                    "",
                    "",
                    (f"level_{i - 1}",),
                    f"level_{i}()",
                    parse(f"level_{i - 1}()"),
                ),
            )
        with pytest.raises(GroundError) as e:
            interpret(parse(f"level_{MAX_CALL_DEPTH}()"), None, lib, blocks_scene)
        assert e.value.kind == "ExogenousFault"
        assert "depth" in e.value.message


class TestTrace:
    def test_trace_records_primitives_in_order(self, blocks_library):
        scene = load_scenario("blocks_world", seed=0)
        program = parse('stack_blocks("purple block", "blue block")')
        trace = interpret(program, None, blocks_library, scene)
        names = [r.name for r in trace.records]
        assert names[0] == "go_home"
        assert "close_gripper" in names and "open_gripper" in names
        assert names[-1] == "go_home"

    def test_replaying_trace_reproduces_final_scene(self, blocks_library):
        noise = NoiseConfig(grasp_slip_prob=0.5)
        scene = load_scenario("blocks_world", seed=11, noise=noise)
        program = parse(
            'stack_blocks("purple block", "blue block")\n'
            'stack_blocks("green block", "purple block")'
        )
        trace = interpret(program, None, blocks_library, scene)

        fresh = load_scenario("blocks_world", seed=11, noise=noise)
        replay_trace(trace.to_list(), blocks_library, fresh)
        assert json.dumps(fresh.to_dict(), sort_keys=True) == json.dumps(
            scene.to_dict(), sort_keys=True
        )

    def test_interpret_deterministic_given_seed(self, blocks_library):
        def run():
            scene = load_scenario(
                "blocks_world", seed=5, noise=NoiseConfig(grasp_slip_prob=0.4)
            )
            interpret(
                parse('stack_blocks("purple block", "blue block")'),
                None,
                blocks_library,
                scene,
            )
            return json.dumps(scene.to_dict(), sort_keys=True)

        assert run() == run()
