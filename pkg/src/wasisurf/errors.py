"""Exception types shared across the toolkit."""

from __future__ import annotations


class AnalysisError(Exception):
    """Base class for all toolkit errors."""


class ParseError(AnalysisError):
    """Syntax or structural error in textual IR, with source position."""

    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class DuplicateDefinition(AnalysisError):
    """Two non-identical definitions of the same symbol."""

    def __init__(self, symbol: str, detail: str = ""):
        msg = f"duplicate definition of symbol '{symbol}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.symbol = symbol


class SignatureMismatch(AnalysisError):
    """A replacement definition is not call-compatible with the original."""

    def __init__(self, symbol: str, detail: str = ""):
        msg = f"signature mismatch for symbol '{symbol}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.symbol = symbol


class ConfigError(AnalysisError):
    """Missing or malformed configuration; names the offending section."""

    def __init__(self, section: str, detail: str = ""):
        msg = f"configuration error in '{section}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.section = section
