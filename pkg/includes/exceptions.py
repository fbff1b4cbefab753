"""Exceptions

Error types raised across the project. Each one also derives from the builtin
a caller would expect, so ``except ValueError`` keeps working.
"""


class TemProxError(Exception):
    """Base class for every project error"""


class DimensionError(TemProxError, ValueError):
    """Shapes of two operands do not fit together"""
    def __init__(self, message: str, *shapes: tuple):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class EmptyRowError(TemProxError, ValueError):
    """A softmax row has no unmasked key"""


class ConfigError(TemProxError, ValueError):
    """Invalid configuration value

    Args:
        field (str): dotted name of the offending field
        message (str): what is wrong with it
    """
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ParseError(TemProxError, ValueError):
    """Malformed row in an interaction file"""
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyDatasetError(TemProxError, ValueError):
    """Preprocessing left no interaction"""


class ContractError(TemProxError, RuntimeError):
    """An operation was called outside of its contract"""


class NonFiniteGradientError(TemProxError, FloatingPointError):
    """NaN or Inf found in a gradient"""
    def __init__(self, name: str):
        super().__init__(f"non-finite gradient in parameter {name!r}")
        self.name = name
