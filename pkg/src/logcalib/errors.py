"""Exception types raised by logcalib."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConvergenceError(RuntimeError):
    """A numerical search failed to bracket or converge.

    The partially computed ``CalibrationResult`` (or ``None``) is kept on
    ``result`` so callers can inspect how far the search got.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
