"""Exception hierarchy shared across the toolkit."""


class FragmarkError(Exception):
    """Base class for all fragmark errors."""


class DimensionError(FragmarkError):
    """Image dimensions unusable (odd, non-positive, or mismatched)."""


class ParameterError(FragmarkError):
    """A parameter is out of its documented domain."""


class MappingConstructionError(FragmarkError):
    """De-neighborhood repair failed to satisfy every constraint."""

    def __init__(self, message, violations):
        super().__init__(message)
        self.violations = violations


class KeyFileError(FragmarkError):
    """Key file missing, malformed, or incomplete."""


class RateUndefinedError(FragmarkError):
    """Recovery rate requested over an empty ground-truth set."""
