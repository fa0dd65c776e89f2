class MiniLangError(Exception):
    """Base class for errors raised by the MiniLang toolchain."""


class ParseError(MiniLangError):
    """Syntax error with a source position and the set of acceptable tokens."""

    def __init__(self, message, line, col, expected=(), path="<input>"):
        self.message = message
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        self.path = path
        super().__init__(self.__str__())

    def __str__(self):
        text = f"{self.path}:{self.line}:{self.col}: {self.message}"
        if self.expected:
            text += " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        return text


class UsageError(MiniLangError):
    """An API precondition was violated by the caller."""
