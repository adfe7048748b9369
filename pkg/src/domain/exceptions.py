"""Exception hierarchy shared by every layer"""
from typing import Optional


class SigstackError(Exception):
    """Base class for all sigstack errors"""


class ShapeError(SigstackError, ValueError):
    """A stream, tensor or model stage received data of the wrong shape"""

    def __init__(self, message: str, block_index: Optional[int] = None):
        if block_index is not None:
            message = f"block {block_index}: {message}"
        super().__init__(message)
        self.block_index = block_index


class StreamFormatError(SigstackError, ValueError):
    """A stream file could not be parsed"""

    def __init__(self, source: str, line: int, reason: str):
        super().__init__(f"{source}: line {line}: {reason}")
        self.source = source
        self.line = line


class NumericalError(SigstackError, ArithmeticError):
    """Non-finite values, failed factorizations or diverging optimization"""


class GradientCheckError(SigstackError, RuntimeError):
    """Analytic gradients disagree with finite differences"""

    def __init__(self, message: str, max_error: float):
        super().__init__(f"{message} (max relative error {max_error:.3e})")
        self.max_error = max_error
