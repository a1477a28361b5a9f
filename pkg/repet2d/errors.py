"""
Exception hierarchy shared by every repet2d module.

Each error knows the CLI exit code it maps to and can render itself as a
JSON-friendly body, the same envelope the command handlers return.
"""

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_PARSE = 4


class Repet2DError(Exception):
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> Dict[str, Any]:
        body: Dict[str, Any] = {'error': self.message, 'kind': type(self).__name__}
        for key, value in self.context.items():
            body[key] = value if isinstance(value, (int, str, float, bool, type(None))) else repr(value)
        return body


class ValidationError(Repet2DError):
    exit_code = EXIT_VALIDATION


class RowMismatch(ValidationError):
    pass


class ColMismatch(ValidationError):
    pass


class OutOfBounds(ValidationError):
    pass


class ShapeTooLarge(ValidationError):
    pass


class BadParam(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class CycleDetected(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class DuplicateRHS(ValidationError):
    pass


class DanglingVariable(ValidationError):
    pass


class NotPartition(ValidationError):
    pass


class CyclicMap(ValidationError):
    pass


class OutOfBoundsSource(ValidationError):
    pass


class AxisMismatch(ValidationError):
    pass


class NotPowerOfTwoSquare(ValidationError):
    pass


class HopBoundExceeded(ValidationError):
    pass


class BudgetExceeded(Repet2DError):
    """Work budget exhausted; ``best`` holds a partial answer when one exists."""

    exit_code = EXIT_BUDGET

    def __init__(self, message: str, best: Optional[Any] = None, **context: Any):
        super().__init__(message, **context)
        self.best = best


class ParseError(Repet2DError):
    exit_code = EXIT_PARSE

    def __init__(self, message: str, line: int = 0, column: int = 0, **context: Any):
        super().__init__(f"line {line}, column {column}: {message}", line=line, column=column, **context)
        self.line = line
        self.column = column
