"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, data/contract
errors exit 2, numeric divergence exits 3.
"""


class SliceGcnError(Exception):
    """Base class for all package errors."""


class DataError(SliceGcnError):
    """Malformed input file or violated data contract."""


class LexError(DataError):
    """Lexical error in C source, carries a 1-based line number."""

    def __init__(self, message: str, line: int, col: int | None = None):
        loc = f"line {line}" if col is None else f"line {line}, col {col}"
        super().__init__(f"{loc}: {message}")
        self.line = line
        self.col = col


class DivergenceError(SliceGcnError):
    """Training produced a non-finite loss."""
