"""
Error Types
Every failure the predictor raises derives from FbpError
"""

from typing import Dict, List, Optional


class FbpError(Exception):
    """Base class for all predictor errors"""


class ShapeError(FbpError, ValueError):
    """Invalid extents or mismatched tensor shapes"""


class BoundsError(FbpError, IndexError):
    """A window or index falls outside its tensor"""


class ArgumentError(FbpError, ValueError):
    """An argument violates its documented range"""


class ImageFormatError(FbpError):
    """Malformed PPM/PGM header or truncated payload"""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ConvergenceError(FbpError):
    """Conjugate gradients stopped before reaching its tolerance"""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"CG did not converge after {iterations} iterations "
            f"(relative residual {residual:.3e})"
        )
        self.residual = residual
        self.iterations = iterations


class SpecError(FbpError):
    """A network spec whose shape chain is invalid"""

    def __init__(self, message: str, layer: Optional[str] = None):
        super().__init__(f"{layer}: {message}" if layer else message)
        self.layer = layer


class StateError(FbpError):
    """Backward called with a cache that does not belong to the network"""


class NumericError(FbpError):
    """Non-finite values reached a gradient, parameter or loss"""

    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        details = ""
        if diagnostics:
            details = " (" + ", ".join(f"{k}={v}" for k, v in diagnostics.items()) + ")"
        super().__init__(message + details)
        self.diagnostics = diagnostics or {}


class ModelCorruptionError(FbpError):
    """Model file checksum mismatch or unreadable payload"""


class ModelVersionError(FbpError):
    """Model file written by an unsupported format version"""


class IndexValidationError(FbpError, ValueError):
    """A dataset index row breaks the index invariants"""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row


class UndefinedCorrelationError(FbpError, ArithmeticError):
    """Pearson correlation requested for a zero-variance vector"""


class ConfigError(FbpError, ValueError):
    """One or more run configuration problems"""

    def __init__(self, problems: List[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems
