"""Exception hierarchy shared by the library and the CLI."""


class MMESError(Exception):
    """Base class; ``kind`` is the machine-readable tag used in CLI error objects."""

    kind = "error"


class InvalidInputError(MMESError, ValueError):
    kind = "invalid-input"


class InvalidStateError(MMESError, ValueError):
    kind = "invalid-state"


class CapacityError(MMESError, ValueError):
    kind = "capacity"


class InvalidConfigError(MMESError, ValueError):
    kind = "invalid-config"


class NumericalFailure(MMESError, ArithmeticError):
    kind = "numerical-failure"

    def __init__(self, message: str, start: int | None = None):
        super().__init__(message)
        self.start = start
