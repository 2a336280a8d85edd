"""
Exception hierarchy shared by the sources and pipeline packages.
The CLI maps ConfigError to exit 1 and every other CrisdaError to exit 2.
"""

from typing import Optional


class CrisdaError(Exception):
    """Root of every error the harness raises on purpose."""


class ConfigError(CrisdaError, ValueError):
    """Experiment config failed schema or ExperimentSpec validation."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataLoadError(CrisdaError):
    """A dataset CSV or manifest could not be ingested."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class PipelineError(CrisdaError):
    """Training or evaluation cannot proceed on the given data."""


class ModelFormatError(CrisdaError):
    """Model file is unreadable or was written by another format version."""
