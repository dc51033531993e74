from .base import (
    MissingContextField,
    OracleBackend,
    OracleRequest,
    OracleResponse,
    OracleRole,
    Transcript,
    UnsupportedScenario,
)
from .jsonblocks import extract_json_blocks, fence, fence_all
from .prompts import render_prompt
from .remote import RemoteBackend, RemoteConfig
from .replay import RecordingBackend, ReplayBackend
from .rulebased import FaultInjection, RuleBasedBackend

__all__ = [
    "FaultInjection",
    "MissingContextField",
    "OracleBackend",
    "OracleRequest",
    "OracleResponse",
    "OracleRole",
    "RecordingBackend",
    "RemoteBackend",
    "RemoteConfig",
    "ReplayBackend",
    "RuleBasedBackend",
    "Transcript",
    "UnsupportedScenario",
    "extract_json_blocks",
    "fence",
    "fence_all",
    "render_prompt",
]
