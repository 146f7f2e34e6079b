"""
core/errors.py - Exception hierarchy shared by the library and the scripts.

Every error carries the process exit code the pipeline scripts use when it
escapes to the top level.
"""


class SirsnError(Exception):
    """Base class for all errors raised deliberately by this package."""

    exit_code: int = 1


class UsageError(SirsnError, ValueError):
    """Invalid parameters or command-line flags."""

    exit_code = 2


class GeometryError(SirsnError, ValueError):
    """Invalid geometric input (bad bodies, intersecting segments, θ at 0 or π)."""

    exit_code = 2


class ResourceCapError(SirsnError, RuntimeError):
    """A desk-scale guardrail (line, intersection or point count) was exceeded."""

    exit_code = 3


class DisconnectedError(SirsnError, RuntimeError):
    """No path joins the requested terminals."""

    exit_code = 1


class OutputError(SirsnError, OSError):
    """Writing an output file failed; the message names the path."""

    exit_code = 4
