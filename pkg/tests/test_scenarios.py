import pytest

from tablebot.errors import SchemaError
from tablebot.sim import FIXTURES, describe, load_scenario
from tablebot.sim.scenarios import load_document, reset_for_task


def test_all_shipped_fixtures_load_and_validate():
    for name in FIXTURES:
        scene = load_scenario(name, seed=0)
        assert scene.scenario_id == name
        assert scene.bounds.contains(scene.home)
        describe(scene)  # must not raise


def test_blocks_world_has_six_blocks():
    scene = load_scenario("blocks_world")
    assert len(scene.objects) == 6
    assert all(o.kind == "block" for o in scene.objects.values())


def test_cup_drawer_cup_not_in_visible_relations():
    scene = load_scenario("cup_drawer")
    desc = describe(scene)
    assert "cup" not in desc.object_names()


def test_duplicate_name_rejected():
    doc = load_document("blocks_world")
    doc = dict(doc)
    doc["objects"] = doc["objects"] + [dict(doc["objects"][0])]
    with pytest.raises(SchemaError):
        load_scenario(doc)


def test_missing_field_rejected():
    with pytest.raises(SchemaError):
        load_scenario({"bounds": [[0, 1], [0, 1], [0, 1]], "objects": []})


def test_unknown_kind_rejected():
    doc = {
        "bounds": [[0.25, 0.75], [-0.5, 0.5], [0.0, 0.28]],
        "home": [0.5, 0.0, 0.26],
        "objects": [
            {
                "name": "thing",
                "color": "red",
                "kind": "zeppelin",
                "position": [0.5, 0, 0.02],
                "dimensions": [0.04, 0.04, 0.04],
            }
        ],
    }
    with pytest.raises(SchemaError):
        load_scenario(doc)


def test_contains_outside_volume_rejected():
    doc = load_document("cup_drawer")
    doc = dict(doc)
    objs = [dict(o) for o in doc["objects"]]
    for o in objs:
        if o["name"] == "cup":
            o["position"] = [0.3, 0.3, 0.03]
    doc["objects"] = objs
    with pytest.raises(SchemaError):
        load_scenario(doc)


def test_unknown_scenario_name():
    with pytest.raises(SchemaError):
        load_scenario("atlantis")


def test_noise_override_beats_document():
    from tablebot.sim import NoiseConfig

    scene = load_scenario("blocks_world", noise=NoiseConfig(grasp_slip_prob=0.5))
    assert scene.noise.grasp_slip_prob == 0.5


def test_reset_returns_movables_to_start_rows():
    scene = load_scenario("blocks_world")
    obj = scene.objects["purple block"]
    scene.movep((obj.position[0], obj.position[1], obj.top))
    scene.close_gripper()
    scene.movep((0.6, 0.4, 0.2))
    scene.open_gripper()
    assert obj.position[:2] == (0.6, 0.4)
    reset_for_task(scene)
    assert obj.position == (0.35, -0.25, 0.02)
    assert obj.support is None


def test_reset_noop_without_declaration():
    scene = load_scenario("cup_drawer")
    reset_for_task(scene)  # cup_drawer declares no reset list
    assert scene.objects["cup"].support == "bottom drawer"
