"""Exception types shared across the engine."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all causalstream errors."""


class MissingColumn(EngineError):
    """A required variable is absent from an input file."""

    def __init__(self, name: str) -> None:
        super().__init__(f"required column {name!r} not found")
        self.name = name


class NonNumericCell(EngineError):
    """A sample cell is not a finite number."""

    def __init__(self, row: int, col: str, value: object = None) -> None:
        super().__init__(f"non-numeric or non-finite value {value!r} at row {row}, column {col!r}")
        self.row = row
        self.col = col
        self.value = value


class EmptyFile(EngineError):
    """An input file contains no data rows."""


class ShapeMismatch(EngineError):
    """Array dimensions or variable sets do not line up."""


class TooFewSamples(EngineError):
    """Not enough aligned samples to run the requested computation."""


class SingularRegression(EngineError):
    """Conditioning columns are collinear beyond what the ridge fallback can absorb."""


class SchemaVersionUnsupported(EngineError):
    """A persisted file declares a schema version this build cannot read."""

    def __init__(self, version: object) -> None:
        super().__init__(f"unsupported schema_version {version!r}")
        self.version = version


class CorruptFile(EngineError):
    """A persisted file cannot be parsed or fails structural validation."""


class RangeError(EngineError):
    """A value or interval lies outside its allowed range."""


class UnstableSpec(EngineError):
    """A scenario violates the stability or ordering invariants."""


class ScheduleOutOfRange(EngineError):
    """An intervention schedule does not fit inside the generated trace."""


class RegimeOutOfRange(EngineError):
    """A regime index does not exist in the ground truth."""


class UnknownVariable(EngineError):
    """A name does not resolve against the session's variable set."""

    def __init__(self, name: str) -> None:
        super().__init__(f"unknown variable {name!r}")
        self.name = name


class ConfigError(EngineError):
    """Configuration file is invalid (unknown keys are a hard error)."""
