"""Exception types shared across the package."""


class DomainError(ValueError):
    """Raised when an operation is applied outside its mathematical domain.

    The CLI maps this to exit status 1; everything else is a bug.
    """


class StateCapExceeded(DomainError):
    """Raised when an automaton build would exceed the configured state cap."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
