"""Shared exception types.

Exit-code mapping used by the CLI lives in cli.py; library code raises these
and never calls sys.exit.
"""
from __future__ import annotations


class StokesOptError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(StokesOptError, ValueError):
    """A mode count or array shape is invalid for the requested operation."""


class ConfigError(StokesOptError, ValueError):
    """A configuration object or input file carries an unusable value."""


class SingularSetError(StokesOptError, ArithmeticError):
    """The coefficient matrix of a launch set is numerically singular."""


class SearchFailedError(StokesOptError, RuntimeError):
    """An iterative search exhausted its budget without meeting tolerance."""

    def __init__(self, message: str, residual: float | None = None,
                 diagnostics: list | None = None):
        super().__init__(message)
        self.residual = residual
        self.diagnostics = diagnostics or []


class EstimationFailedError(StokesOptError, ArithmeticError):
    """A reconstruction produced a physically inadmissible estimate."""
