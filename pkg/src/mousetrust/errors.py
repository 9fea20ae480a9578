"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: usage errors exit 2 (argparse),
DataError exits 3, NumericError exits 4.
"""


class MousetrustError(Exception):
    """Base class for all toolkit errors."""


class DataError(MousetrustError):
    """Invalid or inconsistent input data (bad files, short traces, bad labels)."""


class ParseError(DataError):
    """Malformed event file; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class NumericError(MousetrustError):
    """Non-finite values or diverging computations where finiteness is guaranteed."""
