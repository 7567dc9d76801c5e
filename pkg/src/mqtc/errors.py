"""Exception types raised by the solver library."""


class MQTCError(Exception):
    """Base class for all library errors."""


class InvalidTreeError(MQTCError, ValueError):
    """A tree or matrix violates the full unrooted binary tree invariants."""


class InputFormatError(MQTCError, ValueError):
    """Malformed or out-of-range distance matrix input."""


class InputSizeError(InputFormatError):
    """Fewer than four objects in the input."""


class ResourceLimitError(MQTCError):
    """Requested problem size exceeds the configured ceiling."""
