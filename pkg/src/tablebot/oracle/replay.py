"""Transcript-backed backends: replay by digest, and a recording wrapper."""

from __future__ import annotations

from pathlib import Path

from ..errors import ReplayMiss
from .base import OracleBackend, OracleRequest, OracleResponse, Transcript
from .jsonblocks import extract_json_blocks


class ReplayBackend:
    """Answers requests verbatim from a recorded transcript."""

    name = "replay"

    def __init__(self, transcript: Transcript):
        self.transcript = transcript

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayBackend":
        return cls(Transcript.load(path))

    def call(self, request: OracleRequest) -> OracleResponse:
        entry = self.transcript.get(request.digest())
        if entry is None:
            raise ReplayMiss(request.digest())
        return OracleResponse(raw=entry.raw, blocks=extract_json_blocks(entry.raw))


class RecordingBackend:
    """Delegates to an inner backend and appends every exchange to a transcript."""

    name = "recording"

    def __init__(self, inner: OracleBackend, transcript: Transcript | None = None):
        self.inner = inner
        self.transcript = transcript or Transcript()

    def call(self, request: OracleRequest) -> OracleResponse:
        response = self.inner.call(request)
        self.transcript.append(request.digest(), request.role.value, response.raw)
        return response

    def save(self, path: str | Path) -> None:
        self.transcript.save(path)
