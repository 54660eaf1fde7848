"""Shared exception base so the CLI can map domain failures to exit codes."""


class AdjudgeError(Exception):
    """Base class for all errors raised by this package."""
