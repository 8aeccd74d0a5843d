"""Exception hierarchy shared across the package."""


class CocycleLabError(Exception):
    """Base class for all package errors."""


class UsageError(CocycleLabError):
    """Invalid parameters, config keys or CLI arguments (exit code 1)."""


class NumericalError(CocycleLabError):
    """A numerical failure mid-computation: overflow, rank collapse,
    degenerate geometry (exit code 2). Never silent."""
