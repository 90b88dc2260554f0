"""Exception types shared across the package."""

from __future__ import annotations


class StageCheckError(Exception):
    """Base class for all errors raised by this package."""


class UnknownSpriteError(StageCheckError):
    def __init__(self, name: str):
        super().__init__(f"unknown sprite: {name!r}")
        self.name = name


class UnknownVariableError(StageCheckError):
    def __init__(self, name: str):
        super().__init__(f"unknown variable: {name!r}")
        self.name = name


class ProgramLoadError(StageCheckError):
    """A program document failed to load. ``location`` is a JSON-path-like string."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        self.reason = message
        super().__init__(f"{location}: {message}" if location else message)


class ProgramParseError(ProgramLoadError):
    pass


class UnknownReferenceError(ProgramLoadError):
    pass


class TypeMismatchError(ProgramLoadError):
    pass


class DslParseError(StageCheckError):
    """Suite text rejected; carries position and the token set that was expected."""

    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = expected
        hint = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{column}: {message}{hint}")


class DuplicateTriggerIdError(DslParseError):
    pass


class ConfigError(StageCheckError):
    pass
