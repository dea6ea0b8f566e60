"""Exception types shared across the package."""


class ModelError(ValueError):
    """The model instance violates a structural hypothesis.

    ``clause`` names the violated condition so callers (and the CLI) can
    surface it verbatim.
    """

    def __init__(self, message: str, clause: str | None = None):
        super().__init__(message)
        self.clause = clause


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class RangeError(DomainError):
    """A tabulated law was asked to extrapolate."""


class ParameterError(ValueError):
    """Invalid numerical option (horizon too short, CFL violation, ...)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or exhausted its budget."""
