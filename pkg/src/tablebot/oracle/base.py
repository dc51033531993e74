"""Foundation-model interface: roles, requests, transcripts, and digests.

Every model interaction in the system goes through one narrow interface so
that three backends stay interchangeable: a remote chat API, a recorded
transcript replayed by request digest, and a deterministic rule-based
synthesizer for offline runs. A request digest is a stable hash of the
role plus normalized context, which is what makes record/replay exact.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol

from ..errors import SchemaError, TablebotError


class MissingContextField(TablebotError):
    pass


class UnsupportedScenario(TablebotError):
    pass


class OracleRole(str, Enum):
    SCENE_DESCRIBER = "SceneDescriber"
    TASK_GENERATOR = "TaskGenerator"
    PLANNER = "Planner"
    CODE_VERIFIER_GEN = "CodeVerifierGen"
    VISION_VERIFIER = "VisionVerifier"
    REFLECTOR = "Reflector"
    PRECONDITION_GEN = "PreconditionGen"
    CONTROLLER = "Controller"


# Context keys each role requires; extra keys are allowed.
REQUIRED_CONTEXT: dict[OracleRole, tuple[str, ...]] = {
    OracleRole.SCENE_DESCRIBER: ("scene",),
    OracleRole.TASK_GENERATOR: ("scene_text", "objects"),
    OracleRole.PLANNER: ("task", "library", "bounds"),
    OracleRole.CODE_VERIFIER_GEN: ("task",),
    OracleRole.VISION_VERIFIER: ("condition", "initial_description", "scene"),
    OracleRole.REFLECTOR: ("task", "plan", "library"),
    OracleRole.PRECONDITION_GEN: ("task", "plan"),
    OracleRole.CONTROLLER: ("instruction", "history", "library"),
}


@dataclass(frozen=True)
class OracleRequest:
    role: OracleRole
    context: dict

    def __post_init__(self):
        missing = [k for k in REQUIRED_CONTEXT[self.role] if k not in self.context]
        if missing:
            raise MissingContextField(
                f"{self.role.value} request missing context fields: {missing}"
            )

    def digest(self) -> str:
        payload = json.dumps(
            {"role": self.role.value, "context": self.context},
            sort_keys=True,
            separators=(",", ":"),
            default=str,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class OracleResponse:
    raw: str
    blocks: list = field(default_factory=list)
    latency: float = 0.0


class OracleBackend(Protocol):
    name: str

    def call(self, request: OracleRequest) -> OracleResponse: ...


@dataclass
class TranscriptEntry:
    digest: str
    role: str
    raw: str


class Transcript:
    """Ordered digest-keyed record of oracle responses.

    Appends are serialized; a digest maps to exactly one raw response (a
    repeated identical request re-uses the first recording).
    """

    def __init__(self):
        self._entries: dict[str, TranscriptEntry] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def append(self, digest: str, role: str, raw: str) -> None:
        with self._lock:
            existing = self._entries.get(digest)
            if existing is None:
                self._entries[digest] = TranscriptEntry(digest, role, raw)
            elif existing.raw != raw:
                raise SchemaError(
                    f"conflicting responses recorded for digest {digest[:12]}..."
                )

    def get(self, digest: str) -> TranscriptEntry | None:
        return self._entries.get(digest)

    def entries(self) -> list[TranscriptEntry]:
        return list(self._entries.values())

    def save(self, path: str | Path) -> None:
        lines = [
            json.dumps({"digest": e.digest, "role": e.role, "raw": e.raw})
            for e in self._entries.values()
        ]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        t = cls()
        p = Path(path)
        if not p.exists():
            raise SchemaError(f"transcript file not found: {path}")
        for i, line in enumerate(p.read_text().splitlines()):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                t.append(rec["digest"], rec["role"], rec["raw"])
            except (json.JSONDecodeError, KeyError) as e:
                raise SchemaError(f"bad transcript line {i + 1}: {e}") from e
        return t
