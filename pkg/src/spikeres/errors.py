"""Exception types shared across the package, mapped to CLI exit codes."""


class SpikeresError(Exception):
    """Base class for package errors."""

    exit_code = 1


class ConfigurationError(SpikeresError):
    """Invalid configuration, parameters, or input values."""

    exit_code = 2


class NumericError(SpikeresError):
    """A numeric routine failed to produce a usable result."""

    exit_code = 3


class StorageError(SpikeresError):
    """Reading or writing an artifact on disk failed."""

    exit_code = 4
