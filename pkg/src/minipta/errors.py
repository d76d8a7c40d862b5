"""Exception types raised across the analysis pipeline."""

from __future__ import annotations


class MiniPTAError(Exception):
    """Base class for every error raised by minipta."""


class SourceError(MiniPTAError):
    """An error tied to a position in a source file."""

    def __init__(self, message: str, file: str = "<input>", line: int = 0, col: int = 0):
        self.message = message
        self.file = file
        self.line = line
        self.col = col
        super().__init__(f"{file}:{line}:{col}: {message}")


class ParseError(SourceError):
    def __init__(self, message: str, file: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.expected = tuple(sorted(set(expected)))
        if self.expected:
            message = f"{message} (expected one of: {', '.join(self.expected)})"
        super().__init__(message, file, line, col)


class DeclarationError(SourceError):
    """Duplicate or malformed declaration."""


class UnresolvedSymbolError(SourceError):
    def __init__(self, name: str, file: str, line: int, col: int):
        self.name = name
        super().__init__(f"unresolved symbol '{name}'", file, line, col)


class IRCheckError(MiniPTAError):
    """The IR well-formedness checker rejected a program."""


class NoEntriesError(MiniPTAError):
    def __init__(self) -> None:
        super().__init__(
            "no analysis entries found: no @Entry/@Component struct declares a lifecycle "
            "method; pass explicit entries with --entries NAME"
        )


class EntryNotFoundError(MiniPTAError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"entry '{name}' does not name a function in the program")


class DispatchError(MiniPTAError):
    def __init__(self, class_name: str, method: str):
        self.class_name = class_name
        self.method = method
        super().__init__(f"no method '{method}' in '{class_name}' or its superclasses")


class AnalysisTimeout(MiniPTAError):
    def __init__(self, seconds: float):
        self.seconds = seconds
        super().__init__(f"analysis exceeded the {seconds:g} s timeout")


class LabelMismatchError(MiniPTAError):
    """Ground truth names a call site the program does not contain."""
