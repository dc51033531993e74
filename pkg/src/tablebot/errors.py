"""Error taxonomy shared across the simulator, skill language, and agent loops.

Two disjoint families matter for repair: interpretation errors (anything
caught before code touches the world: parsing, name resolution, arity,
static typing, malformed oracle output) and grounding errors (anything
raised while executing or verifying against the scene). The repair loop
branches on this split, so the classification lives here, next to the
exception types themselves.
"""

from __future__ import annotations

from dataclasses import dataclass


class TablebotError(Exception):
    """Base class for all package errors."""


# --- interpretation side -------------------------------------------------

INTERP_KINDS = ("Parse", "UndefinedSymbol", "Arity", "TypeMismatch")


class InterpError(TablebotError):
    """Failure before execution: parse, name resolution, arity, or typing."""

    def __init__(self, kind: str, message: str, line: int = 0, column: int = 0):
        if kind not in INTERP_KINDS:
            raise ValueError(f"unknown InterpError kind: {kind}")
        super().__init__(f"{kind} at {line}:{column}: {message}")
        self.kind = kind
        self.message = message
        self.line = line
        self.column = column


class FormatError(TablebotError):
    """Oracle output did not contain well-formed JSON blocks."""

    def __init__(self, message: str, block_index: int | None = None):
        super().__init__(message)
        self.message = message
        self.block_index = block_index


# --- grounding side ------------------------------------------------------

GROUND_KINDS = (
    "OutOfBounds",
    "UnknownObject",
    "AlreadyClosed",
    "VerificationFailed",
    "ExogenousFault",
)


class GroundError(TablebotError):
    """Failure during execution or verification in the world model."""

    def __init__(self, kind: str, message: str, step_index: int = -1):
        if kind not in GROUND_KINDS:
            raise ValueError(f"unknown GroundError kind: {kind}")
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
        self.step_index = step_index

    def at_step(self, step_index: int) -> "GroundError":
        err = GroundError(self.kind, self.message, step_index)
        return err


# --- plumbing ------------------------------------------------------------


class SchemaError(TablebotError):
    """A document (scenario, library, transcript, config) is malformed."""


class InvariantViolation(TablebotError):
    """A loaded or constructed state breaks a declared invariant."""


class TransportError(TablebotError):
    """Remote oracle call failed after exhausting retries."""


class ReplayMiss(TablebotError):
    """A replay backend has no recorded response for a request digest."""

    def __init__(self, digest: str):
        super().__init__(f"no recorded response for digest {digest}")
        self.digest = digest


@dataclass(frozen=True)
class ClassifiedError:
    """An error tagged with its repair class."""

    category: str  # "Interpretation" | "Grounding"
    kind: str
    message: str
    step_index: int = -1


def classify_error(err: Exception) -> ClassifiedError:
    """Map any raised failure onto the Interpretation/Grounding split.

    Parse, name, arity, typing, and oracle-format failures are
    interpretation errors (repair regenerates code only); everything that
    surfaced from the scene or from verification is a grounding error
    (repair regenerates the plan). Total over the package's error types.
    """
    if isinstance(err, InterpError):
        return ClassifiedError("Interpretation", err.kind, err.message)
    if isinstance(err, FormatError):
        return ClassifiedError("Interpretation", "Parse", err.message)
    if isinstance(err, GroundError):
        return ClassifiedError("Grounding", err.kind, err.message, err.step_index)
    raise TypeError(f"not a classifiable agent error: {err!r}")
