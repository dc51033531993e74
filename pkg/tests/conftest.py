import pytest

from tablebot.dsl.library import load_library
from tablebot.explore import ExplorationConfig, run_exploration
from tablebot.oracle.rulebased import RuleBasedBackend
from tablebot.sim.scenarios import load_scenario


@pytest.fixture
def backend():
    return RuleBasedBackend()


@pytest.fixture
def blocks_scene():
    return load_scenario("blocks_world", seed=0)


@pytest.fixture
def cup_scene():
    return load_scenario("cup_drawer", seed=0)


@pytest.fixture
def desktop_scene():
    return load_scenario("desktop_organization", seed=0)


@pytest.fixture(scope="session")
def blocks_library():
    """The canonical four-skill library shipped as a fixture."""
    from importlib import resources

    path = resources.files("tablebot.dsl").joinpath("fixtures/blocks_skills.json")
    return load_library(str(path))


@pytest.fixture(scope="session")
def explored_library():
    """Library grown by noise-free exploration of blocks_world + cup_drawer."""
    backend = RuleBasedBackend()
    cfg = ExplorationConfig()
    lib = run_exploration(cfg, "blocks_world", backend, seed=0).final_library
    lib = run_exploration(cfg, "cup_drawer", backend, seed=0, library=lib).final_library
    return lib
