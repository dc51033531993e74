"""Remote chat-completion backend.

Speaks the de-facto chat wire schema ({"model", "messages", "temperature"}),
reads the API key from an environment variable, and retries rate limits and
server errors with exponential backoff. Vision roles send the scene
description text (plus an optional image reference) rather than pixels.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from ..errors import SchemaError, TransportError
from .base import OracleRequest, OracleResponse
from .jsonblocks import extract_json_blocks
from .prompts import render_prompt

_RETRYABLE = (429, 500, 502, 503, 504)


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str
    model: str
    temperature: float = 0.0
    max_retries: int = 4
    backoff_base: float = 0.5
    timeout: float = 60.0
    api_key_env: str = "TABLEBOT_API_KEY"

    @classmethod
    def from_file(cls, path: str | Path) -> "RemoteConfig":
        try:
            doc = json.loads(Path(path).read_text())
            return cls(**doc)
        except (OSError, json.JSONDecodeError, TypeError) as e:
            raise SchemaError(f"bad remote config {path}: {e}") from e


class RemoteBackend:
    name = "remote"

    def __init__(
        self,
        config: RemoteConfig,
        client: httpx.Client | None = None,
        sleep=time.sleep,
    ):
        self.config = config
        self.client = client or httpx.Client(timeout=config.timeout)
        self.sleep = sleep

    def _headers(self) -> dict:
        key = os.environ.get(self.config.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def call(self, request: OracleRequest) -> OracleResponse:
        from ..dsl.library import empty_library

        prompt = render_prompt(request.role, request.context, empty_library())
        messages = [{"role": "user", "content": prompt}]
        if "image_ref" in request.context:
            messages.insert(
                0,
                {
                    "role": "system",
                    "content": f"An observation image is available at {request.context['image_ref']}.",
                },
            )
        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
        }
        start = time.monotonic()
        last_error = "no attempt made"
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self.sleep(self.config.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self.client.post(
                    self.config.endpoint, json=payload, headers=self._headers()
                )
            except httpx.HTTPError as e:
                last_error = f"transport failure: {e}"
                continue
            if resp.status_code in _RETRYABLE:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise TransportError(f"oracle endpoint returned HTTP {resp.status_code}")
            raw = self._extract_text(resp.json())
            return OracleResponse(
                raw=raw,
                blocks=extract_json_blocks(raw),
                latency=time.monotonic() - start,
            )
        raise TransportError(
            f"oracle call failed after {self.config.max_retries + 1} attempts ({last_error})"
        )

    @staticmethod
    def _extract_text(body: dict) -> str:
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise TransportError(f"malformed chat-completion response: {e}") from e
