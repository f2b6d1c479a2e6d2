"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class NumericalError(ArithmeticError):
    """A computation failed to produce a finite, valid result.

    ``diagnostics`` carries whatever inputs are needed to reproduce the
    failure.
    """

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            details = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} ({details})"
        super().__init__(message)
