"""Exception types shared by every module. The CLI maps them to exit codes."""


class QRLError(Exception):
    pass


class DomainError(QRLError, ValueError):
    """Input outside an operation's domain."""


class CapacityError(QRLError):
    """Requested object exceeds a configured size cap."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class InvariantViolation(QRLError):
    """A computed object failed a checked invariant."""


class SamplingError(QRLError):
    """Sequential sampling hit a zero-mass prefix."""

    def __init__(self, message, prefix=""):
        super().__init__(message)
        self.prefix = prefix


class DescriptorError(DomainError):
    """A JSON descriptor could not be parsed into a valid object."""
