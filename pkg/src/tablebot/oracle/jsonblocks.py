"""Strict extraction of fenced JSON blocks from model output.

Model responses are required to wrap every machine-readable payload in
```json fences; surrounding prose is ignored. Zero blocks or a malformed
block is a FormatError, which callers may re-ask once before classifying
the failure as an interpretation error.
"""

from __future__ import annotations

import json
import re

from ..errors import FormatError

_FENCE = re.compile(r"```json\s*\n(.*?)```", re.DOTALL)


def extract_json_blocks(raw: str) -> list:
    """Parse every ```json fenced region, in order."""
    blocks = []
    matches = _FENCE.findall(raw)
    if not matches:
        raise FormatError("response contains no ```json blocks")
    for i, body in enumerate(matches):
        try:
            blocks.append(json.loads(body))
        except json.JSONDecodeError as e:
            raise FormatError(f"json block {i} is malformed: {e}", block_index=i) from e
    return blocks


def fence(value) -> str:
    """Render a value as a ```json block (the inverse of extraction)."""
    return "```json\n" + json.dumps(value, indent=2) + "\n```"


def fence_all(values) -> str:
    return "\n".join(fence(v) for v in values)
