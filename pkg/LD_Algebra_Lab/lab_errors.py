"""
Exception hierarchy for LD_Algebra_Lab.

Search procedures that run out of fuel, and braid actions that are not
defined, are not errors: they come back as values from lab_results.
"""


class LabError(Exception):
    """Base class for every error raised by this package."""


class TermSyntaxError(LabError, ValueError):
    def __init__(self, message: str, text: str, position: int) -> None:
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position


class BraidSyntaxError(LabError, ValueError):
    def __init__(self, message: str, token: str) -> None:
        super().__init__(f"{message}: {token!r}")
        self.token = token


class ResourceCapError(LabError):
    """A term, table or enumeration grew past its configured cap."""


class InvalidPositionError(LabError, ValueError):
    """A node path does not exist or the node there has the wrong shape."""


class PreconditionError(LabError, ValueError):
    pass


class IndexRangeError(LabError, IndexError):
    pass


class LevelOrderError(LabError, ValueError):
    pass


class UnassignedGeneratorError(LabError, KeyError):
    def __init__(self, generator: int) -> None:
        super().__init__(f"generator {generator} has no assigned table index")
        self.generator = generator


class NotDominatedError(LabError):
    """prenormal_decompose was asked for u > v."""


class TableFileError(LabError, OSError):
    pass


class CorruptTableError(TableFileError):
    pass


class VersionUnsupportedError(TableFileError):
    pass


class ConfigError(LabError, ValueError):
    pass


class UsageError(LabError):
    pass
