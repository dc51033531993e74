"""tablebot: autonomous tabletop skill exploration and deployment.

A simulated robot explores tabletop scenes, generates its own curriculum of
manipulation tasks, plans and executes them in a restricted skill language,
verifies its own successes, grows a skill library from them, and afterwards
serves free-form human instructions with precondition-driven backtracking.
"""

from .deploy import run_deployment, run_with_backtracking
from .explore import ExplorationConfig, run_exploration
from .oracle.rulebased import RuleBasedBackend
from .sim import describe, load_scenario

__version__ = "0.1.0"

__all__ = [
    "ExplorationConfig",
    "RuleBasedBackend",
    "describe",
    "load_scenario",
    "run_deployment",
    "run_exploration",
    "run_with_backtracking",
    "__version__",
]
