"""Exception hierarchy shared by every layer of the package."""


class SheafHistError(Exception):
    """Base class for all errors raised by sheafhist."""


class DimensionError(SheafHistError, ValueError):
    pass


class NotProjectorError(SheafHistError, ValueError):
    pass


class NotUnitaryError(SheafHistError, ValueError):
    pass


class NotUnitVectorError(SheafHistError, ValueError):
    pass


class NonCommutingError(SheafHistError, ValueError):
    """Raised when a context is requested from a non-commuting family.

    ``pair`` holds the indices (or names) of the first offending pair.
    """

    def __init__(self, message, pair):
        super().__init__(message)
        self.pair = pair


class NotBelowError(SheafHistError, ValueError):
    """A restriction was requested along a non-existent inclusion."""


class PresheafMismatchError(SheafHistError, ValueError):
    pass


class SearchCapExceeded(SheafHistError, RuntimeError):
    pass


class DisjointnessError(SheafHistError, ValueError):
    pass


class InexactValueError(SheafHistError, ValueError):
    """An input value has no exact rational representation."""


class ScenarioError(SheafHistError):
    """Scenario file could not be parsed or failed validation.

    ``line`` and ``column`` are set for JSON syntax errors; ``obj`` names
    the offending scenario object for validation failures.
    """

    def __init__(self, message, *, path=None, line=None, column=None, obj=None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line
        self.column = column
        self.obj = obj

    def __str__(self):
        loc = "" if self.path is None else str(self.path)
        if self.line is not None:
            loc += f":{self.line}:{self.column}"
        if self.obj is not None:
            loc = f"{loc}: {self.obj}" if loc else str(self.obj)
        return f"{loc}: {self.message}" if loc else self.message
