"""Exception hierarchy for the shotmem engine.

Errors are grouped into families so the CLI can map them to stable exit
codes: configuration, script schema, numeric contracts, backend/provider
transport, and run-manifest integrity.
"""

from __future__ import annotations


class ShotmemError(Exception):
    """Base class for all engine errors."""


# --- configuration ---------------------------------------------------------

class ConfigError(ShotmemError):
    """A configuration value violates a module's declared range."""


# --- story script ----------------------------------------------------------

class ScriptError(ShotmemError):
    """Base class for story-script parsing/validation errors."""


class MalformedDocument(ScriptError):
    """The script document is not syntactically valid."""


class SchemaViolation(ScriptError):
    """The document parses but violates the script schema."""


class CutFirstShotFalse(SchemaViolation):
    """The first shot of a story must start with a hard cut."""


# --- numeric / value contracts --------------------------------------------

class EmptyInput(ShotmemError):
    pass


class DimensionMismatch(ShotmemError):
    pass


class LengthMismatch(ShotmemError):
    pass


class CapacityExceeded(ShotmemError):
    pass


class InvalidShape(ShotmemError):
    pass


class InvalidOffset(ShotmemError):
    pass


class OddDimension(ShotmemError):
    pass


class ShapeMismatch(ShotmemError):
    pass


class TOutOfRange(ShotmemError):
    pass


class NonFiniteVelocity(ShotmemError):
    pass


class MissingPredecessor(ShotmemError):
    """A continuation shot was scheduled without a predecessor result."""


class TooFewShots(ShotmemError):
    pass


# --- backends and providers -------------------------------------------------

class ProviderFailure(ShotmemError):
    """An embedding or scoring provider call failed."""


class BackendFailure(ShotmemError):
    """Generation backend call failed; carries the shot index when known."""

    def __init__(self, message: str, shot_index: int | None = None):
        super().__init__(message)
        self.shot_index = shot_index


# --- run manifests ----------------------------------------------------------

class ManifestError(ShotmemError):
    """Base class for run-manifest integrity errors."""


class FingerprintMismatch(ManifestError):
    pass


class CorruptManifest(ManifestError):
    pass


class IncompleteManifest(ManifestError):
    pass


class IndexOutOfRange(ShotmemError):
    pass
