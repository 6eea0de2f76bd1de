"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class NoConvergence(ArithmeticError):
    """A series did not satisfy its stopping rule within the term budget."""

    def __init__(self, message: str, terms: int) -> None:
        super().__init__(message)
        self.terms = terms
