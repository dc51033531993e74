from .describe import Relation, SceneDescription, describe
from .model import (
    Articulation,
    GripperState,
    NoiseConfig,
    ObjectState,
    Scene,
    TABLE,
)
from .scenarios import FIXTURES, load_scenario, reset_for_task

__all__ = [
    "Articulation",
    "FIXTURES",
    "GripperState",
    "NoiseConfig",
    "ObjectState",
    "Relation",
    "Scene",
    "SceneDescription",
    "TABLE",
    "describe",
    "load_scenario",
    "reset_for_task",
]
