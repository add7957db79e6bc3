"""Error taxonomy shared across the package.

The CLI maps each class to a distinct exit code so scripted sweeps can
tell configuration mistakes, broken corpora, and numeric blow-ups apart.
"""


class DepthSRError(Exception):
    """Base class for all package errors."""


class ConfigError(DepthSRError):
    """Invalid or inconsistent configuration (exit code 2)."""


class DataError(DepthSRError):
    """Missing, malformed, or corrupted corpus data (exit code 3)."""


class NumericError(DepthSRError):
    """Non-finite intermediate produced by the pipeline (exit code 4)."""
