"""Adapter error types."""


class AdapterError(Exception):
    """Base class for adapter failures."""


class SetupError(AdapterError):
    """The requested backend cannot run (missing weights or packages)."""


class InputError(AdapterError):
    """The input image is unusable (unreadable format, zero dimension)."""


class PromptError(AdapterError):
    """The prompt export file is malformed; names the offending entry."""
